#pragma once

#include <string>

#include "ioi/image.hpp"

namespace ioi {

// 8-bit gray or RGB PNG -> Image with p/255 values. Palette, 16-bit and other
// unsupported layouts raise IoError naming the feature.
Image load_png(const std::string& path);

// Clamp to [0,1], quantize round-half-up to 0..255, write gray (C=1) or RGB (C=3).
void save_png(const Image& img, const std::string& path);

// Loads dir/<pattern % index> for contiguous indices starting at 0. The pattern
// is printf-style with exactly one %0Nd field (default "%03d.png"). A gap such
// as {000,002} raises IoError "missing frame 001"; frame shape mismatches raise
// IoError naming the first offending frame.
VideoSequence load_frames(const std::string& dir, const std::string& pattern = "%03d.png",
                          double frame_rate = 30.0);

// Writes frames as dir/<pattern % index>, creating dir if needed.
void save_frames(const VideoSequence& video, const std::string& dir,
                 const std::string& pattern = "%03d.png");

// Expands "%03d.png" with an index; IoError on malformed patterns.
std::string format_frame_name(const std::string& pattern, int index);

}  // namespace ioi
