#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "morphforge/features.hpp"

namespace morphforge::detectors {

enum class Label { BonaFide, Attack };

// Morph post-processing variants in the reporting order of the experiments.
enum class Variant { Genuine, Simple, Improved, Sharp, Hequ, ImpHequ };

std::string label_name(Label l);
Label label_from_name(const std::string& name);
std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// The five attack variants in report column order.
const std::vector<Variant>& attack_variants();

struct LabeledSample {
    FeatureVector features;
    Label label = Label::BonaFide;
    Variant variant = Variant::Genuine;

    void validate() const;  // genuine <=> bona fide
};

// L2-regularized hinge-loss margin classifier on standardized features.
struct LinearModel {
    FeatureScheme scheme = FeatureScheme::Lbp59;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> mean;   // per-feature standardization
    std::vector<double> scale;  // > 0; zero-variance features get 1
    double default_threshold = 0.0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Label cls = Label::BonaFide;
    double confidence = 0.0;  // attack fraction of the training samples here
};

struct TreeModel {
    FeatureScheme scheme = FeatureScheme::Lbp59;
    std::vector<TreeNode> nodes;  // node 0 is the root
    bool pruned = false;
    int max_depth = 0;
    double default_threshold = 0.5;
};

// Deterministic epoch-based subgradient descent on the hinge objective with
// step 1/(lambda t); attacks carry label +1. Standardization statistics come
// from the training set and are stored in the model.
LinearModel train_linear(const std::vector<LabeledSample>& samples, double lambda, int epochs,
                         std::uint64_t seed);

// Greedy top-down induction on continuous features by gain ratio; candidate
// thresholds are midpoints of consecutive distinct values, ties broken toward
// the lowest feature index then the lowest threshold. Reduced-error pruning
// against prune_set (skipped and flagged when the set is empty).
TreeModel train_tree(const std::vector<LabeledSample>& samples, int max_depth, int min_leaf,
                     const std::vector<LabeledSample>& prune_set);

// Higher score = more attack-like, for every model kind.
double score(const LinearModel& model, const FeatureVector& f);
double score(const TreeModel& model, const FeatureVector& f);

using DetectorModel = std::variant<LinearModel, TreeModel>;

double score(const DetectorModel& model, const FeatureVector& f);
double default_threshold(const DetectorModel& model);
FeatureScheme scheme_of(const DetectorModel& model);

void save_model(const DetectorModel& model, const std::string& path);
DetectorModel load_model(const std::string& path);

}  // namespace morphforge::detectors
