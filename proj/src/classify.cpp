#include "morphforge/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "morphforge/rng.hpp"
#include "morphforge/tensorfile.hpp"

namespace morphforge::detectors {

std::string label_name(Label l) { return l == Label::Attack ? "attack" : "bona_fide"; }

Label label_from_name(const std::string& name) {
    if (name == "attack") return Label::Attack;
    if (name == "bona_fide") return Label::BonaFide;
    throw InvalidArgument("unknown label: " + name);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Genuine: return "genuine";
        case Variant::Simple: return "simple";
        case Variant::Improved: return "improved";
        case Variant::Sharp: return "sharp";
        case Variant::Hequ: return "hequ";
        case Variant::ImpHequ: return "imp_hequ";
    }
    throw InvalidArgument("unknown variant");
}

Variant variant_from_name(const std::string& name) {
    if (name == "genuine") return Variant::Genuine;
    if (name == "simple") return Variant::Simple;
    if (name == "improved") return Variant::Improved;
    if (name == "sharp") return Variant::Sharp;
    if (name == "hequ") return Variant::Hequ;
    if (name == "imp_hequ") return Variant::ImpHequ;
    throw InvalidArgument("unknown variant: " + name);
}

const std::vector<Variant>& attack_variants() {
    static const std::vector<Variant> order = {Variant::Simple, Variant::Improved, Variant::Sharp,
                                               Variant::Hequ, Variant::ImpHequ};
    return order;
}

void LabeledSample::validate() const {
    features.validate();
    if ((variant == Variant::Genuine) != (label == Label::BonaFide))
        throw InvalidArgument("LabeledSample: genuine and bona_fide must coincide");
}

namespace {

void check_training_set(const std::vector<LabeledSample>& samples) {
    if (samples.empty()) throw InvalidArgument("training set is empty");
    bool attack = false, bona = false;
    for (const auto& s : samples) {
        s.validate();
        if (s.features.scheme != samples.front().features.scheme)
            throw InvalidArgument("training set mixes feature schemes");
        (s.label == Label::Attack ? attack : bona) = true;
    }
    if (!attack || !bona) throw InvalidArgument("training set needs both classes");
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

LinearModel train_linear(const std::vector<LabeledSample>& samples, double lambda, int epochs,
                         std::uint64_t seed) {
    check_training_set(samples);
    if (!(lambda > 0.0)) throw InvalidArgument("train_linear: lambda must be > 0");
    if (epochs < 1) throw InvalidArgument("train_linear: epochs must be >= 1");

    const std::size_t dim = samples.front().features.values.size();
    const std::size_t n = samples.size();

    LinearModel model;
    model.scheme = samples.front().features.scheme;
    model.mean.assign(dim, 0.0);
    model.scale.assign(dim, 1.0);
    for (const auto& s : samples)
        for (std::size_t j = 0; j < dim; ++j) model.mean[j] += s.features.values[j];
    for (auto& m : model.mean) m /= static_cast<double>(n);
    std::vector<double> var(dim, 0.0);
    for (const auto& s : samples)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = s.features.values[j] - model.mean[j];
            var[j] += d * d;
        }
    for (std::size_t j = 0; j < dim; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(n));
        model.scale[j] = sd > 0.0 ? sd : 1.0;
    }

    // Standardize once up front.
    std::vector<std::vector<double>> x(n, std::vector<double>(dim));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j)
            x[i][j] = (samples[i].features.values[j] - model.mean[j]) / model.scale[j];
        y[i] = samples[i].label == Label::Attack ? 1.0 : -1.0;
    }

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    rng::Engine g(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng::shuffle(order, g);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = order[k];
            const double eta = 1.0 / (lambda * static_cast<double>(++t));
            double margin = b;
            for (std::size_t j = 0; j < dim; ++j) margin += w[j] * x[i][j];
            margin *= y[i];
            const double shrink = 1.0 - eta * lambda;
            for (auto& wj : w) wj *= shrink;
            if (margin < 1.0) {
                for (std::size_t j = 0; j < dim; ++j) w[j] += eta * y[i] * x[i][j];
                b += eta * y[i];  // bias carries no regularization
            }
        }
    }

    model.weights.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        model.weights[j] = f32(w[j]);
        model.mean[j] = f32(model.mean[j]);
        model.scale[j] = f32(model.scale[j]);
    }
    model.bias = f32(b);
    model.default_threshold = 0.0;
    return model;
}

namespace {

struct TreeBuilder {
    const std::vector<LabeledSample>& samples;
    int max_depth;
    int min_leaf;
    std::vector<TreeNode> nodes;

    static double entropy(std::size_t attack, std::size_t total) {
        if (total == 0 || attack == 0 || attack == total) return 0.0;
        const double p = static_cast<double>(attack) / static_cast<double>(total);
        return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
    }

    int build(std::vector<int> idx, int depth) {
        std::size_t attack = 0;
        for (int i : idx)
            if (samples[i].label == Label::Attack) ++attack;
        const std::size_t total = idx.size();

        TreeNode leaf;
        leaf.feature = -1;
        leaf.confidence = f32(total ? static_cast<double>(attack) / total : 0.0);
        leaf.cls = 2 * attack >= total ? Label::Attack : Label::BonaFide;  // tie -> attack

        if (attack == 0 || attack == total || depth >= max_depth ||
            total < 2 * static_cast<std::size_t>(min_leaf)) {
            nodes.push_back(leaf);
            return static_cast<int>(nodes.size()) - 1;
        }

        const std::size_t dim = samples[idx[0]].features.values.size();
        const double h_total = entropy(attack, total);
        double best_ratio = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> sorted(total);
        for (std::size_t f = 0; f < dim; ++f) {
            for (std::size_t k = 0; k < total; ++k)
                sorted[k] = {samples[idx[k]].features.values[f], idx[k]};
            std::sort(sorted.begin(), sorted.end());

            std::size_t left_n = 0, left_attack = 0;
            for (std::size_t k = 0; k + 1 < total; ++k) {
                ++left_n;
                if (samples[sorted[k].second].label == Label::Attack) ++left_attack;
                if (sorted[k].first == sorted[k + 1].first) continue;  // not a boundary
                if (left_n < static_cast<std::size_t>(min_leaf) ||
                    total - left_n < static_cast<std::size_t>(min_leaf))
                    continue;
                const double threshold = f32(0.5 * (sorted[k].first + sorted[k + 1].first));
                const std::size_t right_n = total - left_n;
                const std::size_t right_attack = attack - left_attack;
                const double pl = static_cast<double>(left_n) / total;
                const double pr = static_cast<double>(right_n) / total;
                const double gain = h_total - pl * entropy(left_attack, left_n) -
                                    pr * entropy(right_attack, right_n);
                if (gain <= 1e-12) continue;
                const double split_info = -pl * std::log2(pl) - pr * std::log2(pr);
                if (split_info <= 0.0) continue;
                const double ratio = gain / split_info;
                if (ratio > best_ratio + 1e-12) {
                    best_ratio = ratio;
                    best_feature = static_cast<int>(f);
                    best_threshold = threshold;
                }
            }
        }

        if (best_feature < 0) {
            nodes.push_back(leaf);
            return static_cast<int>(nodes.size()) - 1;
        }

        std::vector<int> left_idx, right_idx;
        for (int i : idx)
            (samples[i].features.values[best_feature] <= best_threshold ? left_idx : right_idx)
                .push_back(i);

        TreeNode node = leaf;  // keeps the majority stats for pruning
        node.feature = best_feature;
        node.threshold = best_threshold;
        nodes.push_back(node);
        const int self = static_cast<int>(nodes.size()) - 1;
        const int left = build(std::move(left_idx), depth + 1);
        const int right = build(std::move(right_idx), depth + 1);
        nodes[self].left = left;
        nodes[self].right = right;
        return self;
    }
};

// Counts prune-set misclassifications under the subtree at `node`, then
// prunes bottom-up: a node collapses to its majority leaf whenever that does
// not increase the error on the samples routed to it.
std::size_t prune_node(TreeModel& model, int node, const std::vector<const LabeledSample*>& routed) {
    TreeNode& n = model.nodes[node];
    const Label majority = n.cls;
    std::size_t leaf_error = 0;
    for (const auto* s : routed)
        if (s->label != majority) ++leaf_error;

    if (n.feature < 0) return leaf_error;

    std::vector<const LabeledSample*> left, right;
    for (const auto* s : routed)
        (s->features.values[n.feature] <= n.threshold ? left : right).push_back(s);
    const std::size_t subtree_error =
        prune_node(model, n.left, left) + prune_node(model, n.right, right);

    if (leaf_error <= subtree_error) {
        n.feature = -1;
        n.left = n.right = -1;
        return leaf_error;
    }
    return subtree_error;
}

}  // namespace

TreeModel train_tree(const std::vector<LabeledSample>& samples, int max_depth, int min_leaf,
                     const std::vector<LabeledSample>& prune_set) {
    check_training_set(samples);
    if (max_depth < 1) throw InvalidArgument("train_tree: max_depth must be >= 1");
    if (min_leaf < 1) throw InvalidArgument("train_tree: min_leaf must be >= 1");

    TreeBuilder builder{samples, max_depth, min_leaf, {}};
    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    builder.build(std::move(idx), 0);

    TreeModel model;
    model.scheme = samples.front().features.scheme;
    model.nodes = std::move(builder.nodes);
    model.max_depth = max_depth;
    model.default_threshold = 0.5;

    if (!prune_set.empty()) {
        std::vector<const LabeledSample*> routed;
        routed.reserve(prune_set.size());
        for (const auto& s : prune_set) {
            s.validate();
            if (s.features.scheme != model.scheme)
                throw InvalidArgument("train_tree: prune set scheme mismatch");
            routed.push_back(&s);
        }
        prune_node(model, 0, routed);
        model.pruned = true;
    }
    return model;
}

double score(const LinearModel& model, const FeatureVector& f) {
    if (f.scheme != model.scheme || f.values.size() != model.weights.size())
        throw InvalidArgument("score: feature scheme does not match the model");
    double acc = model.bias;
    for (std::size_t j = 0; j < model.weights.size(); ++j)
        acc += model.weights[j] * (f.values[j] - model.mean[j]) / model.scale[j];
    return acc;
}

double score(const TreeModel& model, const FeatureVector& f) {
    if (f.scheme != model.scheme)
        throw InvalidArgument("score: feature scheme does not match the model");
    int node = 0;
    while (model.nodes[node].feature >= 0) {
        const TreeNode& n = model.nodes[node];
        node = f.values[n.feature] <= n.threshold ? n.left : n.right;
    }
    return model.nodes[node].confidence;
}

double score(const DetectorModel& model, const FeatureVector& f) {
    return std::visit([&](const auto& m) { return score(m, f); }, model);
}

double default_threshold(const DetectorModel& model) {
    return std::visit([](const auto& m) { return m.default_threshold; }, model);
}

FeatureScheme scheme_of(const DetectorModel& model) {
    return std::visit([](const auto& m) { return m.scheme; }, model);
}

namespace {

tensorfile::Tensor scalar(const std::string& name, double v) {
    tensorfile::Tensor t;
    t.name = name;
    t.dims = {1};
    t.values = {static_cast<float>(v)};
    return t;
}

tensorfile::Tensor vec(const std::string& name, const std::vector<double>& v) {
    tensorfile::Tensor t;
    t.name = name;
    t.dims = {static_cast<std::uint32_t>(v.size())};
    t.values.reserve(v.size());
    for (double x : v) t.values.push_back(static_cast<float>(x));
    return t;
}

std::vector<double> dvec(const tensorfile::Tensor& t) {
    return std::vector<double>(t.values.begin(), t.values.end());
}

}  // namespace

void save_model(const DetectorModel& model, const std::string& path) {
    std::vector<tensorfile::Tensor> tensors;
    tensors.push_back(scalar("model/kind", model.index() == 0 ? 0.0 : 1.0));
    tensors.push_back(scalar("model/scheme", static_cast<double>(scheme_of(model))));
    tensors.push_back(scalar("model/threshold", default_threshold(model)));
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        tensors.push_back(vec("linear/weights", lin->weights));
        tensors.push_back(scalar("linear/bias", lin->bias));
        tensors.push_back(vec("linear/mean", lin->mean));
        tensors.push_back(vec("linear/scale", lin->scale));
    } else {
        const auto& tree = std::get<TreeModel>(model);
        std::vector<double> feature, threshold, left, right, cls, confidence;
        for (const auto& n : tree.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            cls.push_back(n.cls == Label::Attack ? 1.0 : 0.0);
            confidence.push_back(n.confidence);
        }
        tensors.push_back(vec("tree/feature", feature));
        tensors.push_back(vec("tree/threshold", threshold));
        tensors.push_back(vec("tree/left", left));
        tensors.push_back(vec("tree/right", right));
        tensors.push_back(vec("tree/class", cls));
        tensors.push_back(vec("tree/confidence", confidence));
        tensors.push_back(scalar("tree/pruned", tree.pruned ? 1.0 : 0.0));
        tensors.push_back(scalar("tree/max_depth", tree.max_depth));
    }
    tensorfile::save_tensors(tensors, path);
}

DetectorModel load_model(const std::string& path) {
    const auto tensors = tensorfile::load_tensors(path);
    const double kind = tensorfile::find(tensors, "model/kind").values.at(0);
    const auto scheme = static_cast<FeatureScheme>(
        static_cast<int>(tensorfile::find(tensors, "model/scheme").values.at(0)));
    const double threshold = tensorfile::find(tensors, "model/threshold").values.at(0);

    if (kind == 0.0) {
        LinearModel m;
        m.scheme = scheme;
        m.default_threshold = threshold;
        m.weights = dvec(tensorfile::find(tensors, "linear/weights"));
        m.bias = tensorfile::find(tensors, "linear/bias").values.at(0);
        m.mean = dvec(tensorfile::find(tensors, "linear/mean"));
        m.scale = dvec(tensorfile::find(tensors, "linear/scale"));
        if (m.mean.size() != m.weights.size() || m.scale.size() != m.weights.size())
            throw DecodeError("linear model tensors disagree on dimension: " + path);
        return m;
    }

    TreeModel m;
    m.scheme = scheme;
    m.default_threshold = threshold;
    const auto feature = dvec(tensorfile::find(tensors, "tree/feature"));
    const auto thr = dvec(tensorfile::find(tensors, "tree/threshold"));
    const auto left = dvec(tensorfile::find(tensors, "tree/left"));
    const auto right = dvec(tensorfile::find(tensors, "tree/right"));
    const auto cls = dvec(tensorfile::find(tensors, "tree/class"));
    const auto confidence = dvec(tensorfile::find(tensors, "tree/confidence"));
    const std::size_t n = feature.size();
    if (thr.size() != n || left.size() != n || right.size() != n || cls.size() != n ||
        confidence.size() != n)
        throw DecodeError("tree model tensors disagree on node count: " + path);
    for (std::size_t i = 0; i < n; ++i) {
        TreeNode node;
        node.feature = static_cast<int>(feature[i]);
        node.threshold = thr[i];
        node.left = static_cast<int>(left[i]);
        node.right = static_cast<int>(right[i]);
        node.cls = cls[i] != 0.0 ? Label::Attack : Label::BonaFide;
        node.confidence = confidence[i];
        if (node.feature >= 0 &&
            (node.left < 0 || node.right < 0 || node.left >= static_cast<int>(n) ||
             node.right >= static_cast<int>(n)))
            throw DecodeError("tree model has a dangling child index: " + path);
        m.nodes.push_back(node);
    }
    if (m.nodes.empty()) throw DecodeError("tree model has no nodes: " + path);
    m.pruned = tensorfile::find(tensors, "tree/pruned").values.at(0) != 0.0;
    m.max_depth = static_cast<int>(tensorfile::find(tensors, "tree/max_depth").values.at(0));
    return m;
}

}  // namespace morphforge::detectors
