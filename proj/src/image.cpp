#include "ioi/image.hpp"

#include <algorithm>
#include <cmath>

#include "ioi/rng.hpp"

namespace ioi {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c), data((size_t)h * w * c, fill) {}

void validate(const Image& img) {
    if (img.height < 1 || img.width < 1)
        throw DimensionError("image dimensions must be at least 1x1");
    if (img.channels != 1 && img.channels != 3)
        throw DimensionError("image must have 1 or 3 channels");
    if (img.data.size() != (size_t)img.height * img.width * img.channels)
        throw DimensionError("image data length does not match dimensions");
}

Image clamp_unit(const Image& img) {
    Image out = img;
    clamp_unit_inplace(out);
    return out;
}

void clamp_unit_inplace(Image& img) {
    for (double& v : img.data) v = std::min(1.0, std::max(0.0, v));
}

double linf_distance(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionError("linf_distance: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

Image random_image(uint64_t seed, int h, int w, int c) {
    Image img(h, w, c);
    Rng rng(seed);
    for (double& v : img.data) v = rng.uniform01();
    return img;
}

VideoSequence random_video(uint64_t seed, int frames, int h, int w, int c) {
    VideoSequence video;
    video.frames.reserve(frames);
    for (int i = 0; i < frames; ++i)
        video.frames.push_back(random_image(derive_seed(seed, i), h, w, c));
    return video;
}

}  // namespace ioi
