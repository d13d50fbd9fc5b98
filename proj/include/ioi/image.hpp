#pragma once

#include <cstdint>
#include <vector>

#include "ioi/error.hpp"

namespace ioi {

// H x W x C raster of real values, nominal range [0,1], stored row-major per
// channel (plane 0 fully, then plane 1, ...). The unit every attack operates on.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0);

    int pixels() const { return height * width; }
    size_t values() const { return data.size(); }

    double& at(int c, int y, int x) { return data[(size_t)c * pixels() + (size_t)y * width + x]; }
    double at(int c, int y, int x) const { return data[(size_t)c * pixels() + (size_t)y * width + x]; }

    double* plane(int c) { return data.data() + (size_t)c * pixels(); }
    const double* plane(int c) const { return data.data() + (size_t)c * pixels(); }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

// Ordered frames, all the same shape.
struct VideoSequence {
    std::vector<Image> frames;
    double frame_rate = 30.0;

    size_t size() const { return frames.size(); }
};

// Throws DimensionError unless 1<=channels<=3 (1 or 3), h,w >= 1, data sized.
void validate(const Image& img);

// min(1, max(0, v)) on every value; idempotent.
Image clamp_unit(const Image& img);
void clamp_unit_inplace(Image& img);

// max |a - b| over all values; shapes must match.
double linf_distance(const Image& a, const Image& b);

// Deterministic uniform-noise fixture in [0,1).
Image random_image(uint64_t seed, int h, int w, int c);

// Deterministic noise video: frame i derives its seed from (seed, i).
VideoSequence random_video(uint64_t seed, int frames, int h, int w, int c);

}  // namespace ioi
