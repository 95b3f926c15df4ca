#pragma once

#include <string>

#include "ered/image.hpp"

namespace ered {

// File I/O for PNG (8/16-bit), PGM/PPM (binary and ASCII) and the raw
// .ednz tensor container (one EDNZ frame, float32 payload). Format is
// chosen by extension. PNG/PNM samples are mapped to [0,1] on load;
// values outside [0,1] are clipped on save.
Image load_image(const std::string& path);

// bit_depth: 8 or 16; ignored for .ednz.
void save_image(const Image& img, const std::string& path, int bit_depth = 16);

}  // namespace ered
