#pragma once

#include <string>

#include "vlseg/image.hpp"

namespace vlseg {

// 8-bit PNG I/O. Images are RGB, masks are grayscale with raw label values
// (0/1 for binary masks, small integers for label-indexed masks).
Image read_image_png(const std::string& path);
LabelMask read_label_png(const std::string& path);
void write_image_png(const std::string& path, const Image& img);
void write_label_png(const std::string& path, const LabelMask& mask);
void write_mask_png(const std::string& path, const Mask& mask);

}  // namespace vlseg
