#pragma once

#include <string>
#include <vector>

#include "ioi/image.hpp"
#include "ioi/metrics.hpp"
#include "ioi/weighting.hpp"

namespace ioi {

enum class Direction { increase, decrease };

// Strength/shape of one attack run. epsilon is the sign-step size; f the
// retained low-frequency fraction; iterations the iterated-attack step count.
struct AttackConfig {
    double epsilon = 0.1;
    double f = 0.07;
    int iterations = 1;
    Direction direction = Direction::increase;
};

// One attack run's outputs. linf is the pre-clamp |I^a - I|_inf (the quantity
// the perturbation bound constrains; clamping only shrinks it); mae_star_pert
// is MAE*(I^p, I); wall_time covers adversarial synthesis only (not the rg
// measurement).
struct AttackRecord {
    Image adversarial;
    double rg = 0.0;
    double linf = 0.0;
    double mae_star_pert = 0.0;
    bool bound_ok = true;
    double wall_time = 0.0;
};

// sign with sign(0) := 0.
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// I^p = I + eps * sign(grad M(I)) (minus for decrease). NOT clamped; clamping
// happens after IOI composition (or at save time for the plain-FGSM output).
// eps = 0 is the degenerate no-op limit.
Image fgsm(const Image& img, const GradientOracle& oracle, double epsilon,
           Direction direction = Direction::increase);

// n steps of eps/n with the gradient recomputed at each step; n = 1 is bitwise
// identical to fgsm. Per-step clamping is off by default (the plain update
// formula has none); per_step_clamp enables it.
Image i_fgsm(const Image& img, const GradientOracle& oracle, double epsilon, int n,
             Direction direction = Direction::increase, bool per_step_clamp = false);

// I^p = I + eps * w .* sign(grad). Covers the local-variance (NVW) and Sobel
// baselines with the corresponding weight maps.
Image weighted_fgsm(const Image& img, const GradientOracle& oracle, double epsilon,
                    const WeightMap& weights, Direction direction = Direction::increase);

// Full pipeline: FGSM (or the multi-iteration variant with step 2*eps/n when
// cfg.iterations > 1), top-f index set from the ORIGINAL's spectrum, LF/HF
// split, relative-local-variance weights, composition
//   I^a = ifft2(LF(I)) + w .* ifft2(HF(I^p)) + (1-w) .* ifft2(HF(I)),
// then clamp. Implemented through the algebraically identical form
//   I^a = I + w .* Re(idft(HF(I^p - I)))
// which needs three half-plane transforms per channel instead of five full
// complex ones. Requires H, W >= 8.
AttackRecord ioi_attack(const Image& img, const GradientOracle& oracle, const AttackConfig& cfg);

// linf <= (1 - f) * mae_star_pert + 1e-9. Must hold on every IOI run;
// a falsification is treated as a build-stopping bug (CLI exit 4).
bool verify_perturbation_bound(const AttackRecord& record, double f);

enum class AttackKind { ioi, fgsm, ifgsm, nvw_fgsm, sobel_fgsm };

AttackKind attack_kind_from_name(const std::string& name);  // ConfigError on unknown
std::string attack_kind_name(AttackKind kind);

// Runs a single-image attack of the given kind and measures the record. For
// baseline kinds the adversarial output is clamp(I^p), bound_ok is vacuously
// true and mae_star_pert is MAE*(adv, I).
AttackRecord run_attack(AttackKind kind, const Image& img, const GradientOracle& oracle,
                        const AttackConfig& cfg);

// Per-frame outcome inside a video attack. Frames live in the returned
// sequence, not here (a 75-frame 720p video is ~1.7 GB per copy).
struct FrameRecord {
    bool attacked = false;
    double rg = 0.0;
    double linf = 0.0;
    double mae_star_pert = 0.0;
    bool bound_ok = true;
    double wall_time = 0.0;
};

struct VideoAttackResult {
    VideoSequence adversarial;
    std::vector<FrameRecord> frames;
    double averaged_rg = 0.0;      // mean over ALL frames; untouched frames count 0
    double attack_wall_time = 0.0; // sum of per-frame synthesis times
    long gradient_calls = 0;
};

// Attacks frames with index == 0 (mod frame_stride) using cfg.iterations =
// frame_stride (equal total gradient budget across strides); other frames pass
// through bitwise with rg = 0 (identity). cfg.iterations must equal
// frame_stride (ConfigError otherwise). Frame work runs on `threads` workers
// (0 = hardware concurrency); outputs are bitwise-independent of the thread
// count. Only kinds ioi and ifgsm accept a stride > 1.
VideoAttackResult attack_video(const VideoSequence& video, const GradientOracle& oracle,
                               const AttackConfig& cfg, int frame_stride,
                               AttackKind kind = AttackKind::ioi, int threads = 0);

}  // namespace ioi
