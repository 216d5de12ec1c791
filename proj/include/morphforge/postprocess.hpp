#pragma once

#include "morphforge/image.hpp"

namespace morphforge::postprocess {

using imagekit::Image;

// Unsharp masking: out = clamp(img + amount * (img - gaussian_blur(img)))
// applied only where |detail| > threshold.
Image unsharp_mask(const Image& img, double sigma, double amount, double threshold);

// Monotone 256-bin histogram matching of img onto reference, per channel.
// The inverse CDF picks the smallest reference bin whose CDF reaches the
// probed value; outputs land on the 8-bit grid.
Image histogram_match(const Image& img, const Image& reference);

// Plain histogram equalization: matching against a flat reference.
Image histogram_equalize(const Image& img);

}  // namespace morphforge::postprocess
