#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <utility>

#include "ioi/image.hpp"

namespace ioi {

// A metric value together with the declared score range used by relative gain.
struct MetricScore {
    double value = 0.0;
    double range_lo = 0.0;
    double range_hi = 1.0;

    double range() const { return range_hi - range_lo; }
};

// Differentiable no-reference metric an attack can query. Implementations must
// be pure and safe for concurrent calls on distinct images. Every oracle must
// pass the finite-difference admission check before any attack runs (enforced
// by the attack entry points, cached per instance).
class GradientOracle {
public:
    virtual ~GradientOracle() = default;

    virtual std::string name() const = 0;
    virtual MetricScore score(const Image& img) const = 0;
    // d score.value / d img, same shape as img.
    virtual Image gradient(const Image& img) const = 0;
    // Fused evaluation; overridden where the forward pass can be shared.
    virtual std::pair<MetricScore, Image> score_and_gradient(const Image& img) const {
        return {score(img), gradient(img)};
    }
    // Smallest H and W the metric accepts.
    virtual int min_dim() const { return 3; }

private:
    friend void require_admitted(const GradientOracle& oracle);
    // 0 = unchecked, 1 = admitted, 2 = rejected. Lives in the instance so the
    // cached verdict can never outlive the oracle it describes.
    mutable std::atomic<int> admission_state_{0};
};

// Result of the finite-difference admission check of one oracle.
struct AdmissionResult {
    bool passed = false;
    double worst_rel_error = 0.0;
    int probes = 0;
};

// Central finite-difference admission: on `images` seeded images (seed, seed+1,
// ...), compares oracle.gradient against a 4th-order central difference at step
// 1e-3 on 16 random probe pixels each. The 2nd-order rule's O(h^2) truncation
// exceeds the 1e-4 tolerance for sharp scores, so the higher-order central
// stencil at the same step is used. Pass condition per probe:
//   |fd - g| <= 1e-4 * max(|fd|, |g|, max_probe|g|) + 1e-9.
AdmissionResult check_gradient_admission(const GradientOracle& oracle, uint64_t seed = 11,
                                         int images = 20, int probe_h = 8, int probe_w = 8,
                                         int channels = 3);

// Throws InvariantViolation if the oracle fails admission. Result is cached
// per oracle instance (thread-safe), so attacks can call this cheaply.
void require_admitted(const GradientOracle& oracle);

// Sharpness-rewarding toy metric: score = mean(s(L(img)))/4 with L the
// replicate-padded 3x3 discrete Laplacian and s(z) = z*tanh(10z).
// Declared range [0,1]; analytic adjoint gradient.
class ToyLaplaceMetric : public GradientOracle {
public:
    std::string name() const override { return "toy_laplace"; }
    MetricScore score(const Image& img) const override;
    Image gradient(const Image& img) const override;
    std::pair<MetricScore, Image> score_and_gradient(const Image& img) const override;
    int min_dim() const override { return 3; }
};

// Fixed two-layer scoring stand-in for a learned NR model: 3x3 convolution with
// a seeded pseudorandom kernel (uniform [-0.5,0.5), replicate padding), softplus,
// global average, affine squash 100/(S+1) with S = sum|k|+|bias| so the score
// lies in the declared range [0,100]. Hand-written backward pass.
class ToyCnnMetric : public GradientOracle {
public:
    explicit ToyCnnMetric(uint64_t seed = 7);

    std::string name() const override { return "toy_cnn"; }
    MetricScore score(const Image& img) const override;
    Image gradient(const Image& img) const override;
    std::pair<MetricScore, Image> score_and_gradient(const Image& img) const override;
    int min_dim() const override { return 8; }

    uint64_t seed() const { return seed_; }
    // Closed-form score of the zero image: 100/(S+1) * softplus(bias).
    double zero_image_score(int channels) const;

private:
    uint64_t seed_;
    double kernel_[3][9];  // per input channel, row-major 3x3
    double bias_;
    double scale_gray_, scale_rgb_;  // 100/(S+1) for C=1 and C=3

    double squash_scale(int channels) const;
    void conv_forward(const Image& img, std::vector<double>& z) const;
};

// Oracle factory for CLI/config: "toy_laplace" or "toy_cnn". ConfigError on
// unknown names.
std::unique_ptr<GradientOracle> make_oracle(const std::string& name, uint64_t seed);

// 10*log10(1/MSE) with peak 1, MSE over all channels; +infinity for identical
// images.
double psnr(const Image& a, const Image& b);

// Mean local SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03, L=1,
// valid-window positions, per channel then averaged. Requires H, W >= 11.
double ssim(const Image& a, const Image& b);

// (m_adv - m_orig) / range. Requires equal declared ranges; ConfigError on a
// zero-width range.
double relative_gain(const MetricScore& m_adv, const MetricScore& m_orig);

}  // namespace ioi
