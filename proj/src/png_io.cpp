#include "ioi/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <regex>
#include <vector>

namespace fs = std::filesystem;

namespace ioi {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

const char* color_type_name(int color_type) {
    switch (color_type) {
        case PNG_COLOR_TYPE_PALETTE: return "palette";
        case PNG_COLOR_TYPE_GRAY_ALPHA: return "gray+alpha";
        case PNG_COLOR_TYPE_RGB_ALPHA: return "rgb+alpha";
        default: return "unknown color type";
    }
}

}  // namespace

Image load_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path + ": " + std::strerror(errno));

    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw IoError(path + " is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }

    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> pixels;
    std::string error;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode " + path);
    }

    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": unsupported 16-bit depth (8-bit gray/RGB only)");
    }
    if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
        std::string feature = color_type_name(color_type);
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": unsupported " + feature + " PNG (8-bit gray/RGB only)");
    }
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);

    png_read_update_info(png, info);
    const int h = (int)png_get_image_height(png, info);
    const int w = (int)png_get_image_width(png, info);
    const int c = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;

    const size_t row_bytes = png_get_rowbytes(png, info);
    pixels.resize(row_bytes * h);
    row_ptrs.resize(h);
    for (int y = 0; y < h; ++y) row_ptrs[y] = pixels.data() + row_bytes * y;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(h, w, c);
    for (int y = 0; y < h; ++y) {
        const png_byte* row = pixels.data() + row_bytes * y;
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) img.at(ch, y, x) = row[x * c + ch] / 255.0;
    }
    return img;
}

void save_png(const Image& img, const std::string& path) {
    validate(img);
    const int h = img.height, w = img.width, c = img.channels;

    // Quantize: clamp to [0,1] then round-half-up to 0..255.
    std::vector<png_byte> pixels((size_t)h * w * c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double v = std::min(1.0, std::max(0.0, img.at(ch, y, x)));
                pixels[((size_t)y * w + x) * c + ch] = (png_byte)std::floor(v * 255.0 + 0.5);
            }

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path + ": " + std::strerror(errno));

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode " + path);
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, w, h, 8, c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(h);
    for (int y = 0; y < h; ++y) row_ptrs[y] = pixels.data() + (size_t)y * w * c;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::string format_frame_name(const std::string& pattern, int index) {
    // Accepts printf-style patterns with exactly one %0Nd field.
    static const std::regex field("%0([0-9]+)d");
    std::smatch m;
    if (!std::regex_search(pattern, m, field) ||
        std::regex_search(m.suffix().first, pattern.cend(), field))
        throw IoError("frame pattern must contain exactly one %0Nd field: " + pattern);
    const int pad = std::stoi(m[1]);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%0*d", pad, index);
    return std::string(m.prefix()) + buf + std::string(m.suffix());
}

VideoSequence load_frames(const std::string& dir, const std::string& pattern, double frame_rate) {
    if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");

    // Collect matching indices, then demand contiguity from 0.
    std::vector<int> indices;
    {
        static const std::regex field("%0([0-9]+)d");
        std::smatch m;
        std::regex_search(pattern, m, field);
        if (m.empty()) throw IoError("frame pattern must contain a %0Nd field: " + pattern);
        const std::string name_re = std::regex_replace(
            std::regex_replace(pattern, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)"),
            std::regex(R"(%0[0-9]+d)"), "([0-9]+)");
        const std::regex matcher("^" + name_re + "$");
        for (const auto& entry : fs::directory_iterator(dir)) {
            std::smatch fm;
            const std::string name = entry.path().filename().string();
            if (std::regex_match(name, fm, matcher)) indices.push_back(std::stoi(fm[1]));
        }
    }
    if (indices.empty()) throw IoError("no frames matching " + pattern + " in " + dir);
    std::sort(indices.begin(), indices.end());
    for (size_t i = 0; i < indices.size(); ++i)
        if (indices[i] != (int)i) {
            std::string name = format_frame_name(pattern, (int)i);
            if (auto dot = name.rfind('.'); dot != std::string::npos) name.resize(dot);
            throw IoError("missing frame " + name);
        }

    VideoSequence video;
    video.frame_rate = frame_rate;
    video.frames.reserve(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        Image frame = load_png((fs::path(dir) / format_frame_name(pattern, (int)i)).string());
        if (!video.frames.empty() && !frame.same_shape(video.frames.front()))
            throw IoError("frame " + format_frame_name(pattern, (int)i) +
                          " dimensions differ from frame 0");
        video.frames.push_back(std::move(frame));
    }
    return video;
}

void save_frames(const VideoSequence& video, const std::string& dir, const std::string& pattern) {
    fs::create_directories(dir);
    for (size_t i = 0; i < video.frames.size(); ++i)
        save_png(video.frames[i], (fs::path(dir) / format_frame_name(pattern, (int)i)).string());
}

}  // namespace ioi
