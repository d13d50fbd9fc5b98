// Independent reference implementations and fixtures shared by the test
// binaries. Everything here is deliberately written the slow, obvious way —
// these are the oracles the production code is checked against, so they must
// not share routes with it.
#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ioi/image.hpp"
#include "ioi/weighting.hpp"

namespace ref {

// Brute-force O(N^4) forward DFT of one plane, unnormalized:
// X[u][v] = sum_{y,x} p[y][x] exp(-i 2 pi (u y / H + v x / W)).
std::vector<std::complex<double>> dft2(const double* plane, int h, int w);

// Brute-force inverse with the 1/(HW) factor; returns the complex grid.
std::vector<std::complex<double>> idft2(const std::complex<double>* spec, int h, int w);

// MAE between two images' spectra via the brute-force DFT.
double mae_star(const ioi::Image& a, const ioi::Image& b);

// Decoded PNG bytes via a from-scratch parser (zlib inflate + unfiltering),
// independent of libpng. 8-bit gray/RGB, non-interlaced only.
struct RawPng {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<unsigned char> samples;  // row-major, interleaved
};
RawPng decode_png(const std::string& path);

// Scalar re-implementations of the weight maps (per-pixel window gathering;
// the production code uses separable box sums).
ioi::Image ioi_weights(const ioi::Image& img);
ioi::Image nvw_weights(const ioi::Image& img);
ioi::Image sobel_weights(const ioi::Image& img);

// Straight-line SSIM with an explicit 2-D 11x11 Gaussian window (sigma 1.5,
// K1 0.01, K2 0.03, L 1), valid windows only, channels averaged.
double ssim(const ioi::Image& a, const ioi::Image& b);

// The literal three-term composition
//   ifft2(LF(I)) + w .* ifft2(HF(I^p)) + (1-w) .* ifft2(HF(I))
// built from the public spectral primitives; returns the PRE-clamp image.
ioi::Image compose_literal(const ioi::Image& img, const ioi::Image& perturbed, double f,
                           const ioi::WeightMap& weights);

// Smooth gradient background with seeded high-variance noise patches in the
// four (H - round(0.8 H)) x (W - round(0.8 W)) corners: every 0.8-crop offset
// retains exactly one quarter of the textured area, so crop defence results
// do not depend on the crop draw.
ioi::VideoSequence corner_texture_video(int frames, int h, int w, int channels, uint64_t seed);

// Fresh unique directory under the system temp root.
std::string make_temp_dir(const std::string& tag);

// Whole-file read (binary).
std::string slurp(const std::string& path);

}  // namespace ref
