#include "ioi/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ioi {

namespace {

void require_window_fits(const Image& img) {
    validate(img);
    if (img.height < 3 || img.width < 3)
        throw DimensionError("weight maps need at least a 3x3 image");
}

// Scratch buffers shared across channels so the hot path allocates once.
struct WindowScratch {
    std::vector<double> row_sum, row_sumsq;
};

// Streams the replicate-padded 3x3 window mean and population variance
// (E[x^2] - E[x]^2, n = 9) of each pixel to a consumer, using one fused
// horizontal pass (value and square sums together) and one vertical pass. The
// one-pass variance formula cancels catastrophically on near-constant windows
// and can leave junk around eps * E[x^2]; anything at that scale is a
// numerical zero (genuine texture variance sits many orders of magnitude
// higher), so such windows - constant images in particular - report exactly 0.
template <typename Consumer>
void for_each_window_stat(const double* plane, int h, int w, WindowScratch& s,
                          Consumer&& consume) {
    const size_t n = (size_t)h * w;
    s.row_sum.resize(n);
    s.row_sumsq.resize(n);
    for (int y = 0; y < h; ++y) {
        const double* row = plane + (size_t)y * w;
        double* t1 = s.row_sum.data() + (size_t)y * w;
        double* t2 = s.row_sumsq.data() + (size_t)y * w;
        auto emit = [&](int x, int xl, int xr) {
            const double l = row[xl], m = row[x], r = row[xr];
            t1[x] = l + m + r;
            t2[x] = l * l + m * m + r * r;
        };
        emit(0, 0, w > 1 ? 1 : 0);
        for (int x = 1; x < w - 1; ++x) emit(x, x - 1, x + 1);
        if (w > 1) emit(w - 1, w - 2, w - 1);
    }
    for (int y = 0; y < h; ++y) {
        const size_t up = (size_t)(y > 0 ? y - 1 : 0) * w;
        const size_t mid = (size_t)y * w;
        const size_t down = (size_t)(y < h - 1 ? y + 1 : h - 1) * w;
        const double* u1 = s.row_sum.data() + up;
        const double* m1 = s.row_sum.data() + mid;
        const double* d1 = s.row_sum.data() + down;
        const double* u2 = s.row_sumsq.data() + up;
        const double* m2 = s.row_sumsq.data() + mid;
        const double* d2 = s.row_sumsq.data() + down;
        for (int x = 0; x < w; ++x) {
            const double m = (u1[x] + m1[x] + d1[x]) / 9.0;
            const double ex2 = (u2[x] + m2[x] + d2[x]) / 9.0;
            const double v = ex2 - m * m;
            consume(mid + x, m, v <= ex2 * 1e-12 ? 0.0 : v);
        }
    }
}

}  // namespace

WeightMap ioi_weights(const Image& img) {
    require_window_fits(img);
    const int h = img.height, w = img.width;
    const size_t n = (size_t)h * w;
    WeightMap map(h, w, img.channels);
    // Reused across calls (per thread) to avoid an mmap round-trip per frame.
    thread_local WindowScratch scratch;
    thread_local std::vector<double> gamma;
    gamma.resize(n);
    for (int c = 0; c < img.channels; ++c) {
        double gamma_max = 0.0;
        // sigma/m with a guard: dark flat windows (m < 1e-6) get zero, as do
        // zero-variance windows.
        for_each_window_stat(img.plane(c), h, w, scratch, [&](size_t i, double m, double v) {
            const double g = m < 1e-6 ? 0.0 : std::sqrt(v) / m;
            gamma[i] = g;
            gamma_max = std::max(gamma_max, g);
        });
        double* out = map.plane(c);
        if (gamma_max <= 0.0) {
            std::fill(out, out + n, 0.0);
            continue;
        }
        for (size_t i = 0; i < n; ++i) {
            const double gamma_norm = gamma[i] / gamma_max;
            out[i] = gamma_norm < 0.01 ? 0.0 : std::sqrt(gamma_norm);
        }
    }
    return map;
}

WeightMap nvw_weights(const Image& img) {
    require_window_fits(img);
    const int h = img.height, w = img.width;
    const size_t n = (size_t)h * w;
    WeightMap map(h, w, img.channels);
    WindowScratch scratch;
    std::vector<double> variance(n);
    for (int c = 0; c < img.channels; ++c) {
        double vmax = 0.0;
        for_each_window_stat(img.plane(c), h, w, scratch, [&](size_t i, double, double v) {
            variance[i] = v;
            vmax = std::max(vmax, v);
        });
        double* out = map.plane(c);
        if (vmax <= 0.0) {
            std::fill(out, out + n, 0.0);
            continue;
        }
        for (size_t i = 0; i < n; ++i) out[i] = variance[i] / vmax;
    }
    return map;
}

WeightMap sobel_weights(const Image& img) {
    require_window_fits(img);
    const int h = img.height, w = img.width;
    const size_t n = (size_t)h * w;
    WeightMap map(h, w, img.channels);
    std::vector<double> mag(n);
    for (int c = 0; c < img.channels; ++c) {
        const double* p = img.plane(c);
        auto at = [&](int y, int x) {
            y = std::clamp(y, 0, h - 1);
            x = std::clamp(x, 0, w - 1);
            return p[(size_t)y * w + x];
        };
        double mmax = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                // Each gradient is a difference of two identically-shaped tap
                // sums, so locally uniform neighborhoods cancel exactly instead
                // of leaving accumulation-order rounding junk that a later
                // max-normalization would inflate.
                const double gx =
                    (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                    (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
                const double gy =
                    (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                    (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
                mag[(size_t)y * w + x] = std::sqrt(gx * gx + gy * gy);
                mmax = std::max(mmax, mag[(size_t)y * w + x]);
            }
        double* out = map.plane(c);
        if (mmax <= 0.0) {
            std::fill(out, out + n, 0.0);
            continue;
        }
        for (size_t i = 0; i < n; ++i) out[i] = mag[i] / mmax;
    }
    return map;
}

}  // namespace ioi
