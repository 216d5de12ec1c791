#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "morphforge/image.hpp"

namespace morphforge::detectors {

using imagekit::Image;

enum class FeatureScheme { Lbp59, Bsif4096, EdgeFeat };

std::string scheme_name(FeatureScheme s);
FeatureScheme scheme_from_name(const std::string& name);
std::size_t scheme_length(FeatureScheme s);

struct FeatureVector {
    FeatureScheme scheme = FeatureScheme::Lbp59;
    std::vector<double> values;

    void validate() const;
};

// Uniform-LBP histogram: 8 neighbours at radius 1, bit set when the
// neighbour is >= the centre, bit order starting east and walking the ring
// toward decreasing y. Patterns with at most 2 circular transitions fill
// bins 0..57 in ascending numeric order, the rest collapse into bin 58.
// Normalized to sum 1.
FeatureVector lbp_histogram(const Image& gray);

// Maps an 8-bit pattern to its histogram bin (0..58).
int lbp_uniform_bin(unsigned pattern);

struct BsifFilterBank {
    // 12 filters of 11x11 taps, zero-mean and pairwise orthonormal.
    std::array<std::vector<double>, 12> filters;
    bool seeded = false;
    std::uint64_t seed = 0;

    void validate() const;
};

BsifFilterBank generate_bsif_bank(std::uint64_t seed);
BsifFilterBank load_bsif_bank(const std::string& path);
void save_bsif_bank(const BsifFilterBank& bank, const std::string& path);

// 12-bit code per valid pixel (11x11 window fully inside), bit k set when
// filter k responds > 0; 4096-bin histogram normalized to sum 1.
FeatureVector bsif_histogram(const Image& gray, const BsifFilterBank& bank);

// JPEG-style degradation: per channel 8x8 block DCT on samples scaled to
// [-128,127], quantization by the standard luminance table under the usual
// quality scaling, inverse transform, clamp.
Image dct_recompress(const Image& img, int quality);

// The orthonormal 8x8 DCT-II pair used by dct_recompress.
void dct8_forward(const double in[64], double out[64]);
void dct8_inverse(const double in[64], double out[64]);

// Six values: edge pixels and Harris corners on the input, the same two
// after recompression at `quality`, and the two relative changes
// (after-before)/max(before,1).
FeatureVector edge_feature_stats(const Image& img, int quality);

// Raw edge/corner counters, exposed for the feature tests.
int count_edge_pixels(const Image& gray);
int count_harris_corners(const Image& gray);

}  // namespace morphforge::detectors
