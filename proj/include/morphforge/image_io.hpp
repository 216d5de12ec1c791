#pragma once

#include <string>

#include "morphforge/image.hpp"

namespace morphforge::imagekit {

// Reads an 8-bit grayscale or RGB image. Formats: PNG, binary PPM (P6),
// binary PGM (P5), chosen by file content. Samples are mapped v/255.
Image load_image(const std::string& path);

// Writes 8-bit output; the format follows the file extension (.png, .ppm,
// .pgm; PGM requires a 1-channel image). Quantization is round-half-up of
// 255*v after clamping v to [0,1].
void save_image(const Image& img, const std::string& path);

// Quantization used by save_image, exposed for bit-exact tests.
inline unsigned char quantize8(double v) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    int q = static_cast<int>(v * 255.0 + 0.5);
    return static_cast<unsigned char>(q > 255 ? 255 : q);
}

}  // namespace morphforge::imagekit
