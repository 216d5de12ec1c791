#pragma once

#include <map>
#include <string>
#include <vector>

#include "morphforge/convnet.hpp"

namespace morphforge::styletransfer {

// G[i,j] = <F_i, F_j> over the vectorized maps of one layer; unnormalized.
struct GramMatrix {
    int size = 0;
    std::vector<double> values;  // size x size, row-major

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * size + j]; }
};

GramMatrix gram(const FeatureMaps& maps, const std::string& layer);

// Target Gram per style layer.
using StyleTarget = std::map<std::string, GramMatrix>;

StyleTarget style_target_from(const FeatureMaps& maps, const std::vector<std::string>& layers);
StyleTarget style_target_average(const StyleTarget& a, const StyleTarget& b);

struct LossConfig {
    std::vector<std::string> content_layers;
    std::vector<std::string> style_layers;
    std::vector<double> content_weights;  // v_l, parallel to content_layers
    std::vector<double> style_weights;    // w_l, parallel to style_layers

    // Content from the last conv of each block, style from the first, with
    // v_l = 1 and w_l = 1e3.
    static LossConfig defaults_for(const ConvNet& net);

    void validate() const;
};

struct LossBreakdown {
    double total = 0.0;
    double content = 0.0;  // sum of v_l * C_l
    double style = 0.0;    // sum of w_l * S_l
    std::map<std::string, double> per_layer;
};

// Loss L(I) = sum_l v_l C_l + sum_l w_l S_l with
//   C_l = 1/(2 N_l M_l) * sum_j |F_j - P_j|^2
//   S_l = 1/(4 N_l^2 M_l^2) * sum_ij (G_ij - A_ij)^2
// and, when grad_out is non-null, its exact analytic gradient w.r.t. the
// input raster via reverse accumulation.
LossBreakdown loss_and_grad(const ConvNet& net, const Image& img,
                            const FeatureMaps& content_targets, const StyleTarget& style_target,
                            const LossConfig& cfg, std::vector<double>* grad_out);

}  // namespace morphforge::styletransfer
