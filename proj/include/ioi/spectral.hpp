#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "ioi/image.hpp"

namespace ioi {

// Full H x W grid of unnormalized forward DFT coefficients per channel
// (inverse carries the 1/(HW) factor). coeffs[(c*H + u)*W + v].
struct Spectrum {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::complex<double>> coeffs;

    Spectrum() = default;
    Spectrum(int h, int w, int c)
        : height(h), width(w), channels(c), coeffs((size_t)h * w * c) {}

    std::complex<double>& at(int c, int u, int v) {
        return coeffs[((size_t)c * height + u) * width + v];
    }
    std::complex<double> at(int c, int u, int v) const {
        return coeffs[((size_t)c * height + u) * width + v];
    }
};

// Per-channel boolean mask over (u,v) indices: the retained ("low-frequency")
// set d_f. Exactly round(f*H*W) entries per channel are true.
struct FreqIndexSet {
    int height = 0;
    int width = 0;
    int channels = 0;
    double retained_fraction = 0.0;
    std::vector<uint8_t> mask;  // one byte per (c,u,v), same layout as Spectrum

    bool get(int c, int u, int v) const {
        return mask[((size_t)c * height + u) * width + v] != 0;
    }
    size_t count(int c) const;
};

// Forward DFT per channel: coeffs[u][v] = sum img[x][y] exp(-i2pi(ux/H + vy/W)).
// Real input is transformed with a half-plane r2c and mirrored, so conjugate
// pairs carry bitwise-equal magnitudes (makes the tie-break below exact).
Spectrum fft2(const Image& img);

// Real part of the normalized inverse transform. When the spectrum is not
// conjugate-symmetric the imaginary residue is nonzero; its max magnitude is
// written to *imag_residue when given and a diagnostic goes to stderr if it
// exceeds 1e-6.
Image ifft2(const Spectrum& spec, double* imag_residue = nullptr);

// Number of retained coefficients for fraction f on an H x W grid: round(f*H*W).
long topf_count(double f, int h, int w);

// Per channel, marks exactly round(f*H*W) indices with the largest coefficient
// magnitude; equal magnitudes resolve to the lower linear index u*W+v.
// Requires 0 < f < 1.
FreqIndexSet select_topf(const Spectrum& spec_of_original, double f);

// (LF, HF): LF keeps masked coefficients, HF is the complement; LF + HF == spec.
std::pair<Spectrum, Spectrum> split_lf_hf(const Spectrum& spec, const FreqIndexSet& idx);

// (1/(HW)) sum |A*_{u,v} - B*_{u,v}| per channel, averaged over channels.
// Summation order: documented fixed row-major half-plane accumulation.
double mae_star(const Image& a, const Image& b);

}  // namespace ioi
