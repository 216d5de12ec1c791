#include "morphforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "morphforge/enhance.hpp"
#include "morphforge/features.hpp"
#include "morphforge/image_io.hpp"
#include "morphforge/imageops.hpp"
#include "morphforge/metrics.hpp"
#include "morphforge/morph.hpp"
#include "morphforge/postprocess.hpp"
#include "morphforge/synthetic.hpp"

namespace morphforge::cli {

using detectors::FeatureScheme;
using detectors::FeatureVector;
using detectors::Label;
using detectors::LabeledSample;
using detectors::Variant;
using imagekit::Image;
using imagekit::LandmarkSet;

namespace {

constexpr char kMorphHeader[] = "id,image_path,landmarks_path,entry_a,entry_b,variant,split";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

MorphManifest load_morph_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open morph manifest: " + path);
    std::string line;
    if (!std::getline(f, line) || line != kMorphHeader)
        throw DecodeError("morph manifest must start with `" + std::string(kMorphHeader) + "`: " + path);
    MorphManifest morphs;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 7)
            throw DecodeError(path + ":" + std::to_string(lineno) + ": expected 7 fields");
        MorphRecord r;
        r.id = fields[0];
        r.image_path = fields[1];
        r.landmarks_path = fields[2];
        r.entry_a = fields[3];
        r.entry_b = fields[4];
        r.variant = detectors::variant_from_name(fields[5]);
        r.split = split_from_name(fields[6]);
        morphs.push_back(std::move(r));
    }
    return morphs;
}

void save_morph_manifest(const MorphManifest& morphs, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << kMorphHeader << "\n";
    for (const auto& r : morphs)
        f << r.id << "," << r.image_path << "," << r.landmarks_path << "," << r.entry_a << ","
          << r.entry_b << "," << detectors::variant_name(r.variant) << "," << split_name(r.split)
          << "\n";
    if (!f) throw IoError("write failed: " + path);
}

void save_feature_rows(const std::vector<LabeledSample>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    for (const auto& s : rows) {
        s.validate();
        f << detectors::scheme_name(s.features.scheme) << "," << detectors::label_name(s.label)
          << "," << detectors::variant_name(s.variant);
        for (double v : s.features.values) f << "," << fmt17(v);
        f << "\n";
    }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<LabeledSample> load_feature_rows(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open features: " + path);
    std::vector<LabeledSample> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() < 4)
            throw DecodeError(path + ":" + std::to_string(lineno) + ": too few fields");
        LabeledSample s;
        s.features.scheme = detectors::scheme_from_name(fields[0]);
        s.label = detectors::label_from_name(fields[1]);
        s.variant = detectors::variant_from_name(fields[2]);
        for (std::size_t i = 3; i < fields.size(); ++i)
            s.features.values.push_back(std::stod(fields[i]));
        s.validate();
        rows.push_back(std::move(s));
    }
    return rows;
}

std::string resolve_path(const std::string& manifest_path, const std::string& entry_path) {
    if (!entry_path.empty() && entry_path.front() == '/') return entry_path;
    const auto parent = std::filesystem::path(manifest_path).parent_path();
    return (parent / entry_path).string();
}

styletransfer::ConvNet net_from_config(const RunConfig& cfg) {
    if (!cfg.net_weights.empty()) return styletransfer::load_weights(cfg.net_weights);
    return styletransfer::build_test_net(cfg.net_seed, cfg.net_channel_list(), 3);
}

namespace {

std::vector<std::string> comma_list(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

styletransfer::LossConfig loss_config_for(const RunConfig& cfg, const styletransfer::ConvNet& net) {
    styletransfer::LossConfig loss = styletransfer::LossConfig::defaults_for(net);
    if (!cfg.loss_content_layers.empty()) loss.content_layers = comma_list(cfg.loss_content_layers);
    if (!cfg.loss_style_layers.empty()) loss.style_layers = comma_list(cfg.loss_style_layers);
    loss.content_weights.assign(loss.content_layers.size(), cfg.loss_content_weight);
    loss.style_weights.assign(loss.style_layers.size(), cfg.loss_style_weight);
    loss.validate();
    return loss;
}

styletransfer::OptimizerConfig optimizer_config_for(const RunConfig& cfg) {
    styletransfer::OptimizerConfig opt;
    opt.memory = cfg.opt_memory;
    opt.max_iters = cfg.opt_max_iters;
    opt.grad_tol = cfg.opt_grad_tol;
    opt.loss_rel_tol = cfg.opt_loss_rel_tol;
    return opt;
}

Manifest run_synth(const RunConfig& cfg, const std::string& out_dir) {
    return generate_dataset(out_dir, cfg.synth_subjects, cfg.synth_size, cfg.synth_seed);
}

Manifest run_split(const RunConfig& cfg, const std::string& manifest_path) {
    Manifest manifest = load_manifest(manifest_path);
    manifest = split_dataset(std::move(manifest), cfg.split_train, cfg.split_test, cfg.split_val,
                             cfg.split_seed);
    save_manifest(manifest, manifest_path);
    return manifest;
}

namespace {

struct EntryIndex {
    std::map<std::string, const ManifestEntry*> by_id;
    explicit EntryIndex(const Manifest& manifest) {
        for (const auto& e : manifest) by_id[e.id] = &e;
    }
    const ManifestEntry& at(const std::string& id) const {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw InvalidArgument("unknown manifest entry id: " + id);
        return *it->second;
    }
};

morphgen::CloneInto clone_mode(const std::string& name) {
    if (name == "none") return morphgen::CloneInto::None;
    if (name == "A") return morphgen::CloneInto::A;
    return morphgen::CloneInto::B;
}

// Normalized detector crop of a morph record (full-size records are
// normalized on the fly; "-" records are stored as ready crops).
Image record_crop(const RunConfig& cfg, const std::string& morphs_path, const MorphRecord& r) {
    Image img = imagekit::load_image(resolve_path(morphs_path, r.image_path));
    if (r.landmarks_path == "-") return img;
    const LandmarkSet lm = imagekit::load_landmarks(resolve_path(morphs_path, r.landmarks_path));
    return imagekit::normalize_face(img, lm, cfg.norm_size).first;
}

Image entry_crop(const RunConfig& cfg, const std::string& manifest_path, const ManifestEntry& e) {
    const Image img = imagekit::load_image(resolve_path(manifest_path, e.image_path));
    const LandmarkSet lm = imagekit::load_landmarks(resolve_path(manifest_path, e.landmarks_path));
    return imagekit::normalize_face(img, lm, cfg.norm_size).first;
}

}  // namespace

MorphManifest run_morph(const RunConfig& cfg, const std::string& manifest_path,
                        const std::string& out_dir) {
    const Manifest manifest = load_manifest(manifest_path);
    const EntryIndex index(manifest);
    std::filesystem::create_directories(out_dir);

    MorphManifest morphs;
    const std::pair<Split, int> jobs[2] = {{Split::Train, cfg.pairs_train},
                                           {Split::Test, cfg.pairs_test}};
    for (const auto& [split, wanted] : jobs) {
        if (wanted <= 0) continue;
        const PairPlan plan =
            plan_pairs(manifest, split, static_cast<std::size_t>(wanted), cfg.pairs_seed);
        for (const auto& [id_a, id_b] : plan.pairs) {
            const ManifestEntry& ea = index.at(id_a);
            const ManifestEntry& eb = index.at(id_b);
            const Image img_a = imagekit::load_image(resolve_path(manifest_path, ea.image_path));
            const Image img_b = imagekit::load_image(resolve_path(manifest_path, eb.image_path));
            const LandmarkSet lm_a =
                imagekit::load_landmarks(resolve_path(manifest_path, ea.landmarks_path));
            const LandmarkSet lm_b =
                imagekit::load_landmarks(resolve_path(manifest_path, eb.landmarks_path));

            const Image morph = morphgen::make_simple_morph(img_a, lm_a, img_b, lm_b,
                                                            cfg.morph_alpha,
                                                            clone_mode(cfg.morph_clone_into));
            const LandmarkSet avg = morphgen::average_landmarks(lm_a, lm_b, cfg.morph_alpha);

            MorphRecord r;
            r.id = "morph_" + id_a + "_" + id_b;
            r.image_path = r.id + ".png";
            r.landmarks_path = r.id + ".landmarks.txt";
            r.entry_a = id_a;
            r.entry_b = id_b;
            r.variant = Variant::Simple;
            r.split = split;
            imagekit::save_image(morph, out_dir + "/" + r.image_path);
            imagekit::save_landmarks(avg, out_dir + "/" + r.landmarks_path);
            morphs.push_back(std::move(r));
        }
    }
    save_morph_manifest(morphs, out_dir + "/morphs.csv");
    return morphs;
}

void run_enhance(const RunConfig& cfg, const std::string& manifest_path,
                 const std::string& morphs_path, const std::string& out_dir) {
    const Manifest manifest = load_manifest(manifest_path);
    const EntryIndex index(manifest);
    MorphManifest morphs = load_morph_manifest(morphs_path);
    std::filesystem::create_directories(out_dir);

    const styletransfer::ConvNet net = net_from_config(cfg);
    const styletransfer::LossConfig loss = loss_config_for(cfg, net);
    const styletransfer::OptimizerConfig opt = optimizer_config_for(cfg);

    std::vector<const MorphRecord*> simple;
    for (const auto& r : morphs)
        if (r.variant == Variant::Simple) simple.push_back(&r);
    std::sort(simple.begin(), simple.end(),
              [](const MorphRecord* a, const MorphRecord* b) { return a->id < b->id; });

    std::string trace_csv = "morph_id,iter,total,content,style\n";
    MorphManifest added;
    for (const MorphRecord* r : simple) {
        const Image crop = record_crop(cfg, morphs_path, *r);
        const Image crop_a = entry_crop(cfg, manifest_path, index.at(r->entry_a));
        const Image crop_b = entry_crop(cfg, manifest_path, index.at(r->entry_b));
        const styletransfer::EnhanceResult res = enhance_morph(crop, crop_a, crop_b, net, loss, opt);

        MorphRecord imp;
        imp.id = r->id + "_improved";
        imp.image_path = imp.id + ".png";
        imp.landmarks_path = "-";
        imp.entry_a = r->entry_a;
        imp.entry_b = r->entry_b;
        imp.variant = Variant::Improved;
        imp.split = r->split;
        imagekit::save_image(res.image, out_dir + "/" + imp.image_path);
        added.push_back(std::move(imp));

        for (const auto& row : res.trace)
            trace_csv += r->id + "," + std::to_string(row.iter) + "," + fmt17(row.total) + "," +
                         fmt17(row.content) + "," + fmt17(row.style) + "\n";
    }

    {
        std::ofstream f(out_dir + "/enhance_trace.csv", std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + out_dir + "/enhance_trace.csv");
        f << trace_csv;
    }
    morphs.insert(morphs.end(), added.begin(), added.end());
    save_morph_manifest(morphs, morphs_path);
}

void run_post(const RunConfig& cfg, const std::string& manifest_path,
              const std::string& morphs_path, const std::string& out_dir) {
    const Manifest manifest = load_manifest(manifest_path);
    const EntryIndex index(manifest);
    MorphManifest morphs = load_morph_manifest(morphs_path);
    std::filesystem::create_directories(out_dir);

    auto reference_crop = [&](const MorphRecord& r) {
        const std::string& id = cfg.hequ_reference == "A" ? r.entry_a : r.entry_b;
        return entry_crop(cfg, manifest_path, index.at(id));
    };

    std::vector<const MorphRecord*> simple, improved;
    for (const auto& r : morphs) {
        if (r.variant == Variant::Simple) simple.push_back(&r);
        if (r.variant == Variant::Improved) improved.push_back(&r);
    }
    auto by_id = [](const MorphRecord* a, const MorphRecord* b) { return a->id < b->id; };
    std::sort(simple.begin(), simple.end(), by_id);
    std::sort(improved.begin(), improved.end(), by_id);

    MorphManifest added;
    auto emit = [&](const MorphRecord& src, Variant variant, const std::string& suffix,
                    const Image& crop) {
        MorphRecord r;
        r.id = src.id + suffix;
        r.image_path = r.id + ".png";
        r.landmarks_path = "-";
        r.entry_a = src.entry_a;
        r.entry_b = src.entry_b;
        r.variant = variant;
        r.split = src.split;
        imagekit::save_image(crop, out_dir + "/" + r.image_path);
        added.push_back(std::move(r));
    };

    for (const MorphRecord* r : simple) {
        const Image crop = record_crop(cfg, morphs_path, *r);
        emit(*r, Variant::Sharp, "_sharp",
             postprocess::unsharp_mask(crop, cfg.sharp_sigma, cfg.sharp_amount, cfg.sharp_threshold));
        emit(*r, Variant::Hequ, "_hequ", postprocess::histogram_match(crop, reference_crop(*r)));
    }
    for (const MorphRecord* r : improved) {
        const Image crop = record_crop(cfg, morphs_path, *r);
        emit(*r, Variant::ImpHequ, "_hequ",
             postprocess::histogram_match(crop, reference_crop(*r)));
    }

    morphs.insert(morphs.end(), added.begin(), added.end());
    save_morph_manifest(morphs, morphs_path);
}

namespace {

struct FeatureExtractor {
    const RunConfig& cfg;
    detectors::BsifFilterBank bank;

    explicit FeatureExtractor(const RunConfig& config) : cfg(config) {
        if (cfg.features_scheme == "bsif4096")
            bank = cfg.bsif_bank.empty() ? detectors::generate_bsif_bank(cfg.bsif_seed)
                                         : detectors::load_bsif_bank(cfg.bsif_bank);
    }

    FeatureVector operator()(const Image& crop) const {
        if (cfg.features_scheme == "lbp59")
            return detectors::lbp_histogram(imagekit::to_grayscale(crop));
        if (cfg.features_scheme == "bsif4096")
            return detectors::bsif_histogram(imagekit::to_grayscale(crop), bank);
        return detectors::edge_feature_stats(crop, cfg.features_quality);
    }
};

}  // namespace

void run_features(const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& morphs_path, Split split, const std::string& out_csv) {
    const Manifest manifest = load_manifest(manifest_path);
    const MorphManifest morphs = load_morph_manifest(morphs_path);
    const FeatureExtractor extract(cfg);

    std::vector<LabeledSample> rows;
    for (const auto& e : manifest) {
        if (e.split != split) continue;
        LabeledSample s;
        s.features = extract(entry_crop(cfg, manifest_path, e));
        s.label = Label::BonaFide;
        s.variant = Variant::Genuine;
        rows.push_back(std::move(s));
    }
    for (Variant variant : detectors::attack_variants()) {
        std::vector<const MorphRecord*> records;
        for (const auto& r : morphs)
            if (r.variant == variant && r.split == split) records.push_back(&r);
        std::sort(records.begin(), records.end(),
                  [](const MorphRecord* a, const MorphRecord* b) { return a->id < b->id; });
        for (const MorphRecord* r : records) {
            LabeledSample s;
            s.features = extract(record_crop(cfg, morphs_path, *r));
            s.label = Label::Attack;
            s.variant = variant;
            rows.push_back(std::move(s));
        }
    }
    save_feature_rows(rows, out_csv);
}

void run_train(const RunConfig& cfg, const std::string& features_csv,
               const std::string& model_path) {
    const std::vector<LabeledSample> rows = load_feature_rows(features_csv);

    std::vector<LabeledSample> genuine, simple, improved;
    for (const auto& s : rows) {
        if (s.variant == Variant::Genuine) genuine.push_back(s);
        if (s.variant == Variant::Simple) simple.push_back(s);
        if (s.variant == Variant::Improved) improved.push_back(s);
    }

    std::vector<LabeledSample> training = genuine;
    if (cfg.train_mode == "g11") {
        training.insert(training.end(), simple.begin(), simple.end());
    } else {
        // Half of the morphs give way to their improved versions; an odd
        // count sends the extra one to the improved side.
        const std::size_t replaced = (simple.size() + 1) / 2;
        if (improved.size() < replaced)
            throw InvalidArgument("g12 training needs at least " + std::to_string(replaced) +
                                  " improved-morph rows, found " + std::to_string(improved.size()));
        for (std::size_t i = replaced; i < simple.size(); ++i) training.push_back(simple[i]);
        for (std::size_t i = 0; i < replaced; ++i) training.push_back(improved[i]);
    }

    detectors::DetectorModel model;
    if (cfg.train_model == "linear") {
        model = detectors::train_linear(training, cfg.train_lambda, cfg.train_epochs, cfg.train_seed);
    } else {
        // Carve a deterministic prune slice out of the training rows.
        const int stride =
            cfg.tree_prune_frac > 0.0 ? std::max(2, static_cast<int>(std::lround(1.0 / cfg.tree_prune_frac)))
                                      : 0;
        std::vector<LabeledSample> grow, prune;
        for (std::size_t i = 0; i < training.size(); ++i) {
            if (stride > 0 && static_cast<int>(i % stride) == stride - 1)
                prune.push_back(training[i]);
            else
                grow.push_back(training[i]);
        }
        model = detectors::train_tree(grow, cfg.tree_max_depth, cfg.tree_min_leaf, prune);
    }
    detectors::save_model(model, model_path);
}

EvalArtifacts run_eval(const RunConfig& cfg, const std::string& model_path,
                       const std::string& features_csv, const std::string& out_dir) {
    const detectors::DetectorModel model = detectors::load_model(model_path);
    const std::vector<LabeledSample> rows = load_feature_rows(features_csv);
    std::filesystem::create_directories(out_dir);

    evalkit::ScoreSet scores;
    for (const auto& s : rows) {
        const double value = detectors::score(model, s.features);
        if (s.label == Label::BonaFide)
            scores.bona_fide.push_back(value);
        else
            scores.attacks[s.variant].push_back(value);
    }

    EvalArtifacts artifacts;
    artifacts.scores_csv = out_dir + "/scores.csv";
    artifacts.error_table_csv = out_dir + "/error_table.csv";
    artifacts.bpcer_at_apcer_csv = out_dir + "/bpcer_at_apcer.csv";
    artifacts.det_svg = out_dir + "/det.svg";

    evalkit::save_scores(scores, artifacts.scores_csv);
    evalkit::emit_report(scores, detectors::default_threshold(model), cfg.eval_target_list(),
                         {artifacts.error_table_csv, artifacts.bpcer_at_apcer_csv, artifacts.det_svg});
    return artifacts;
}

double run_mar(const RunConfig& cfg, const std::string& records_csv) {
    return evalkit::mar(evalkit::load_match_records(records_csv), cfg.mar_threshold);
}

}  // namespace morphforge::cli
