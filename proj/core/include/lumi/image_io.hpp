#pragma once

#include <string>

#include "lumi/image.hpp"

namespace lumi {

/// Reads an 8/16-bit PNG (values scaled to [0,1]) or a little-endian float
/// PFM. Grayscale maps to 1 channel, RGB to 3. Throws IoError on unreadable
/// or unsupported files.
Image load_image(const std::string& path);

/// Writes by extension: ".png" quantizes to 8-bit after clamping to [0,1],
/// ".pfm" stores raw floats (bit-exact round trip). Throws IoError on
/// unwritable paths and NumericsError on non-finite pixels.
void save_image(const Image& img, const std::string& path);

void save_png(const Image& img, const std::string& path);
void save_pfm(const Image& img, const std::string& path);

}  // namespace lumi
