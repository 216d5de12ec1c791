#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morphforge/error.hpp"

namespace morphforge::cli {

// Every pipeline knob, with explicit defaults. Files use `key = value`
// lines with `#` comments; unknown keys are rejected at load time.
struct RunConfig {
    // synth
    int synth_subjects = 64;
    int synth_size = 256;
    std::uint64_t synth_seed = 1;

    // split
    double split_train = 0.7;
    double split_test = 0.2;
    double split_val = 0.1;
    std::uint64_t split_seed = 7;

    // pairs
    int pairs_train = 40;
    int pairs_test = 12;
    std::uint64_t pairs_seed = 11;

    // morph
    double morph_alpha = 0.5;
    std::string morph_clone_into = "none";  // none|A|B

    // normalization
    int norm_size = 224;

    // feature extractor network
    std::string net_channels = "4,8";
    std::uint64_t net_seed = 5;
    std::string net_weights;  // path to a weight container; empty = seeded net

    // loss
    double loss_content_weight = 1.0;
    double loss_style_weight = 1000.0;
    std::string loss_content_layers;  // comma list; empty = last conv per block
    std::string loss_style_layers;    // comma list; empty = first conv per block

    // optimizer
    int opt_memory = 10;
    int opt_max_iters = 30;
    double opt_grad_tol = 1e-6;
    double opt_loss_rel_tol = 1e-9;

    // post-processing
    double sharp_sigma = 1.5;
    double sharp_amount = 0.7;
    double sharp_threshold = 0.0;
    std::string hequ_reference = "A";  // A|B

    // detector features
    std::string features_scheme = "lbp59";  // lbp59|bsif4096|edgefeat
    int features_quality = 75;
    std::uint64_t bsif_seed = 9;
    std::string bsif_bank;  // path; empty = seeded bank

    // detector training
    std::string train_model = "linear";  // linear|tree
    std::string train_mode = "g11";      // g11|g12
    double train_lambda = 0.2;
    int train_epochs = 200;
    std::uint64_t train_seed = 13;
    int tree_max_depth = 8;
    int tree_min_leaf = 2;
    double tree_prune_frac = 0.25;

    // evaluation
    std::string eval_targets = "0.10,0.05,0.01";

    // mar
    double mar_threshold = 0.5;

    void validate() const;
    std::vector<double> eval_target_list() const;
    std::vector<int> net_channel_list() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin);

}  // namespace morphforge::cli
