#pragma once

#include <utility>

#include "morphforge/image.hpp"
#include "morphforge/landmarks.hpp"

namespace morphforge::imagekit {

// 3-channel input collapses to luma 0.299 R + 0.587 G + 0.114 B;
// 1-channel input is returned unchanged.
Image to_grayscale(const Image& img);

// Same-padding correlation with the requested border policy. Output is the
// size of the input and is NOT clamped to [0,1].
Image convolve2d(const Image& img, const Kernel2D& k, Border border);

// Bilinear sample at real coordinates (pixel centers at integers) with
// replicate border, single channel.
double sample_bilinear(const Image& img, double x, double y, int c);

// Bilinear resampling with half-pixel-center alignment.
Image resize_bilinear(const Image& img, int w, int h);

// Rotates by `angle` radians (positive = from +x toward +y in image
// coordinates) about `center`, bilinear resampling, replicate border.
// Output has the input's size.
Image rotate_about(const Image& img, Point center, double angle);

// Normalized 1-D Gaussian taps, radius ceil(3*sigma).
std::vector<double> gaussian_taps(double sigma);

// Separable Gaussian blur, replicate border.
Image gaussian_blur(const Image& img, double sigma);

// Eye-line rotation about the eye midpoint, crop to the bounding box of
// all brow_*/mouth_* landmarks, scale to out_size x out_size. The returned
// landmark set holds every input point transformed into the output frame.
std::pair<Image, LandmarkSet> normalize_face(const Image& img, const LandmarkSet& lm,
                                             int out_size = 224);

}  // namespace morphforge::imagekit
