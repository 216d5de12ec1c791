#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morphforge/image.hpp"

namespace morphforge::styletransfer {

using imagekit::Image;

enum class LayerKind { Conv, Relu, Pool };

// Conv layers are 3x3, stride 1, zero-padded to the input size; pools are
// 2x2 average with stride 2 (odd trailing rows/columns are dropped).
struct Layer {
    LayerKind kind = LayerKind::Conv;
    std::string name;
    int in_channels = 0;
    int out_channels = 0;
    std::vector<double> weights;  // [out][in][3][3]
    std::vector<double> bias;     // [out]
};

struct ConvNet {
    int input_channels = 3;
    std::vector<Layer> layers;

    void validate() const;

    // First conv of each block (conv1_1, conv2_1, ...).
    std::vector<std::string> first_convs_per_block() const;
    // Last conv of each block (conv1_2, ..., or conv5_4 for VGG-like nets).
    std::vector<std::string> last_convs_per_block() const;
};

struct FeatureMaps {
    struct Entry {
        std::string name;
        LayerKind kind = LayerKind::Conv;
        int channels = 0;
        int width = 0;
        int height = 0;
        std::vector<double> values;  // N x M, channel-planar

        std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
    };
    std::vector<Entry> entries;  // one per layer, in net order
    int input_width = 0;
    int input_height = 0;
    int input_channels = 0;

    bool has(const std::string& name) const;
    const Entry& by_name(const std::string& name) const;
};

// Runs every layer and keeps every activation; deterministic.
FeatureMaps forward(const ConvNet& net, const Image& img);

// Reverse accumulation from per-layer output gradients down to the input
// raster. `layer_grads[i]` matches entries[i] in shape or is empty (zero).
// The relu subgradient at exactly 0 is 0; pools spread 1/4 per source pixel.
std::vector<double> backward_to_input(const ConvNet& net, const FeatureMaps& maps,
                                      std::vector<std::vector<double>>& layer_grads);

// Deterministic block net: conv-conv-pool per block, weights seeded normal
// scaled by 1/sqrt(fan-in) and quantized to f32, biases zero.
ConvNet build_test_net(std::uint64_t seed, const std::vector<int>& channels_per_block,
                       int input_channels = 3);

// Weight container round trip (layer structure is rebuilt from tensor names).
void save_weights(const ConvNet& net, const std::string& path);
ConvNet load_weights(const std::string& path);

}  // namespace morphforge::styletransfer
