#pragma once

#include "ioi/image.hpp"

namespace ioi {

// Per-pixel, per-channel weights in [0,1]. Same layout as Image.
using WeightMap = Image;

// Relative-local-variance weights: per channel over replicate-padded 3x3
// windows, sigma = population std dev, m = mean; gamma = sigma/m (gamma = 0
// where m < 1e-6); gamma_norm = gamma/max(gamma); w = sqrt(gamma_norm) where
// gamma_norm >= 0.01, else 0. Constant images produce the all-zero map.
// Requires H, W >= 3.
WeightMap ioi_weights(const Image& img);

// Local 3x3 variance normalized to [0,1] by its per-channel maximum.
// No mean division, no threshold, no square root.
WeightMap nvw_weights(const Image& img);

// Sobel gradient magnitude sqrt(Gx^2 + Gy^2), normalized by its per-channel
// maximum.
WeightMap sobel_weights(const Image& img);

}  // namespace ioi
