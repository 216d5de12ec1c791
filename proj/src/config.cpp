#include "morphforge/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace morphforge::cli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
    T out{};
    std::istringstream ss(value);
    ss >> out;
    if (ss.fail() || !ss.eof())
        throw InvalidArgument("config key " + key + " has a malformed value: `" + value + "`");
    return out;
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"synth.subjects", [](RunConfig& c, const std::string& v) { c.synth_subjects = parse_number<int>(v, "synth.subjects"); }},
        {"synth.size", [](RunConfig& c, const std::string& v) { c.synth_size = parse_number<int>(v, "synth.size"); }},
        {"synth.seed", [](RunConfig& c, const std::string& v) { c.synth_seed = parse_number<std::uint64_t>(v, "synth.seed"); }},
        {"split.train", [](RunConfig& c, const std::string& v) { c.split_train = parse_number<double>(v, "split.train"); }},
        {"split.test", [](RunConfig& c, const std::string& v) { c.split_test = parse_number<double>(v, "split.test"); }},
        {"split.val", [](RunConfig& c, const std::string& v) { c.split_val = parse_number<double>(v, "split.val"); }},
        {"split.seed", [](RunConfig& c, const std::string& v) { c.split_seed = parse_number<std::uint64_t>(v, "split.seed"); }},
        {"pairs.train", [](RunConfig& c, const std::string& v) { c.pairs_train = parse_number<int>(v, "pairs.train"); }},
        {"pairs.test", [](RunConfig& c, const std::string& v) { c.pairs_test = parse_number<int>(v, "pairs.test"); }},
        {"pairs.seed", [](RunConfig& c, const std::string& v) { c.pairs_seed = parse_number<std::uint64_t>(v, "pairs.seed"); }},
        {"morph.alpha", [](RunConfig& c, const std::string& v) { c.morph_alpha = parse_number<double>(v, "morph.alpha"); }},
        {"morph.clone_into", [](RunConfig& c, const std::string& v) { c.morph_clone_into = v; }},
        {"norm.size", [](RunConfig& c, const std::string& v) { c.norm_size = parse_number<int>(v, "norm.size"); }},
        {"net.channels", [](RunConfig& c, const std::string& v) { c.net_channels = v; }},
        {"net.seed", [](RunConfig& c, const std::string& v) { c.net_seed = parse_number<std::uint64_t>(v, "net.seed"); }},
        {"net.weights", [](RunConfig& c, const std::string& v) { c.net_weights = v; }},
        {"loss.content_weight", [](RunConfig& c, const std::string& v) { c.loss_content_weight = parse_number<double>(v, "loss.content_weight"); }},
        {"loss.style_weight", [](RunConfig& c, const std::string& v) { c.loss_style_weight = parse_number<double>(v, "loss.style_weight"); }},
        {"loss.content_layers", [](RunConfig& c, const std::string& v) { c.loss_content_layers = v; }},
        {"loss.style_layers", [](RunConfig& c, const std::string& v) { c.loss_style_layers = v; }},
        {"opt.memory", [](RunConfig& c, const std::string& v) { c.opt_memory = parse_number<int>(v, "opt.memory"); }},
        {"opt.max_iters", [](RunConfig& c, const std::string& v) { c.opt_max_iters = parse_number<int>(v, "opt.max_iters"); }},
        {"opt.grad_tol", [](RunConfig& c, const std::string& v) { c.opt_grad_tol = parse_number<double>(v, "opt.grad_tol"); }},
        {"opt.loss_rel_tol", [](RunConfig& c, const std::string& v) { c.opt_loss_rel_tol = parse_number<double>(v, "opt.loss_rel_tol"); }},
        {"sharp.sigma", [](RunConfig& c, const std::string& v) { c.sharp_sigma = parse_number<double>(v, "sharp.sigma"); }},
        {"sharp.amount", [](RunConfig& c, const std::string& v) { c.sharp_amount = parse_number<double>(v, "sharp.amount"); }},
        {"sharp.threshold", [](RunConfig& c, const std::string& v) { c.sharp_threshold = parse_number<double>(v, "sharp.threshold"); }},
        {"hequ.reference", [](RunConfig& c, const std::string& v) { c.hequ_reference = v; }},
        {"features.scheme", [](RunConfig& c, const std::string& v) { c.features_scheme = v; }},
        {"features.quality", [](RunConfig& c, const std::string& v) { c.features_quality = parse_number<int>(v, "features.quality"); }},
        {"bsif.seed", [](RunConfig& c, const std::string& v) { c.bsif_seed = parse_number<std::uint64_t>(v, "bsif.seed"); }},
        {"bsif.bank", [](RunConfig& c, const std::string& v) { c.bsif_bank = v; }},
        {"train.model", [](RunConfig& c, const std::string& v) { c.train_model = v; }},
        {"train.mode", [](RunConfig& c, const std::string& v) { c.train_mode = v; }},
        {"train.lambda", [](RunConfig& c, const std::string& v) { c.train_lambda = parse_number<double>(v, "train.lambda"); }},
        {"train.epochs", [](RunConfig& c, const std::string& v) { c.train_epochs = parse_number<int>(v, "train.epochs"); }},
        {"train.seed", [](RunConfig& c, const std::string& v) { c.train_seed = parse_number<std::uint64_t>(v, "train.seed"); }},
        {"tree.max_depth", [](RunConfig& c, const std::string& v) { c.tree_max_depth = parse_number<int>(v, "tree.max_depth"); }},
        {"tree.min_leaf", [](RunConfig& c, const std::string& v) { c.tree_min_leaf = parse_number<int>(v, "tree.min_leaf"); }},
        {"tree.prune_frac", [](RunConfig& c, const std::string& v) { c.tree_prune_frac = parse_number<double>(v, "tree.prune_frac"); }},
        {"eval.targets", [](RunConfig& c, const std::string& v) { c.eval_targets = v; }},
        {"mar.threshold", [](RunConfig& c, const std::string& v) { c.mar_threshold = parse_number<double>(v, "mar.threshold"); }},
    };
    return table;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> unknown;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) {
            unknown.push_back(key);
            continue;
        }
        it->second(cfg, value);
    }
    if (!unknown.empty()) {
        std::string msg = origin + ": unknown config key";
        if (unknown.size() > 1) msg += "s";
        msg += ":";
        for (const auto& k : unknown) msg += " " + k;
        throw InvalidArgument(msg);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::stringstream buffer;
    buffer << f.rdbuf();
    return parse_config(buffer.str(), path);
}

void RunConfig::validate() const {
    if (synth_subjects < 1) throw InvalidArgument("synth.subjects must be >= 1");
    if (synth_size < 32) throw InvalidArgument("synth.size must be >= 32");
    if (!(morph_alpha >= 0.0 && morph_alpha <= 1.0))
        throw InvalidArgument("morph.alpha must be in [0,1]");
    if (morph_clone_into != "none" && morph_clone_into != "A" && morph_clone_into != "B")
        throw InvalidArgument("morph.clone_into must be none, A or B");
    if (norm_size < 16) throw InvalidArgument("norm.size must be >= 16");
    if (hequ_reference != "A" && hequ_reference != "B")
        throw InvalidArgument("hequ.reference must be A or B");
    if (features_scheme != "lbp59" && features_scheme != "bsif4096" && features_scheme != "edgefeat")
        throw InvalidArgument("features.scheme must be lbp59, bsif4096 or edgefeat");
    if (features_quality < 1 || features_quality > 100)
        throw InvalidArgument("features.quality must be 1..100");
    if (train_model != "linear" && train_model != "tree")
        throw InvalidArgument("train.model must be linear or tree");
    if (train_mode != "g11" && train_mode != "g12")
        throw InvalidArgument("train.mode must be g11 or g12");
    if (!(train_lambda > 0.0)) throw InvalidArgument("train.lambda must be > 0");
    if (train_epochs < 1) throw InvalidArgument("train.epochs must be >= 1");
    if (tree_max_depth < 1) throw InvalidArgument("tree.max_depth must be >= 1");
    if (tree_min_leaf < 1) throw InvalidArgument("tree.min_leaf must be >= 1");
    if (!(tree_prune_frac >= 0.0 && tree_prune_frac < 1.0))
        throw InvalidArgument("tree.prune_frac must be in [0,1)");
    eval_target_list();
    net_channel_list();
}

std::vector<double> RunConfig::eval_target_list() const {
    std::vector<double> out;
    std::istringstream ss(eval_targets);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const double t = parse_number<double>(trim(item), "eval.targets");
        if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("eval.targets entries must be in (0,1]");
        out.push_back(t);
    }
    if (out.empty()) throw InvalidArgument("eval.targets must not be empty");
    return out;
}

std::vector<int> RunConfig::net_channel_list() const {
    std::vector<int> out;
    std::istringstream ss(net_channels);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const int c = parse_number<int>(trim(item), "net.channels");
        if (c < 1) throw InvalidArgument("net.channels entries must be >= 1");
        out.push_back(c);
    }
    if (out.empty()) throw InvalidArgument("net.channels must not be empty");
    return out;
}

}  // namespace morphforge::cli
