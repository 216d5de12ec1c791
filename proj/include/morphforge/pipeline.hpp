#pragma once

#include <string>
#include <vector>

#include "morphforge/classify.hpp"
#include "morphforge/config.hpp"
#include "morphforge/convnet.hpp"
#include "morphforge/dataset.hpp"
#include "morphforge/lbfgsb.hpp"
#include "morphforge/styleloss.hpp"

namespace morphforge::cli {

// One generated morph image. Records whose landmarks_path is "-" are
// already normalized crops; everything else is full-size with a landmark
// file (the averaged geometry for simple morphs).
struct MorphRecord {
    std::string id;
    std::string image_path;
    std::string landmarks_path;
    std::string entry_a;  // manifest entry ids of the two sources
    std::string entry_b;
    detectors::Variant variant = detectors::Variant::Simple;
    Split split = Split::Unassigned;
};

using MorphManifest = std::vector<MorphRecord>;

// CSV `id,image_path,landmarks_path,entry_a,entry_b,variant,split`.
MorphManifest load_morph_manifest(const std::string& path);
void save_morph_manifest(const MorphManifest& morphs, const std::string& path);

// Feature CSV rows `scheme,label,variant,v0,...`.
void save_feature_rows(const std::vector<detectors::LabeledSample>& rows, const std::string& path);
std::vector<detectors::LabeledSample> load_feature_rows(const std::string& path);

// Paths inside manifests are relative to the manifest file's directory.
std::string resolve_path(const std::string& manifest_path, const std::string& entry_path);

// The feature extractor network and loss/optimizer settings named by the
// config (seeded test net unless net.weights points at a container).
styletransfer::ConvNet net_from_config(const RunConfig& cfg);
styletransfer::LossConfig loss_config_for(const RunConfig& cfg, const styletransfer::ConvNet& net);
styletransfer::OptimizerConfig optimizer_config_for(const RunConfig& cfg);

// Subcommand bodies (shared between the CLI tool and the test suites).
Manifest run_synth(const RunConfig& cfg, const std::string& out_dir);
Manifest run_split(const RunConfig& cfg, const std::string& manifest_path);
MorphManifest run_morph(const RunConfig& cfg, const std::string& manifest_path,
                        const std::string& out_dir);
void run_enhance(const RunConfig& cfg, const std::string& manifest_path,
                 const std::string& morphs_path, const std::string& out_dir);
void run_post(const RunConfig& cfg, const std::string& manifest_path,
              const std::string& morphs_path, const std::string& out_dir);
void run_features(const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& morphs_path, Split split, const std::string& out_csv);
void run_train(const RunConfig& cfg, const std::string& features_csv,
               const std::string& model_path);

struct EvalArtifacts {
    std::string scores_csv;
    std::string error_table_csv;
    std::string bpcer_at_apcer_csv;
    std::string det_svg;
};
EvalArtifacts run_eval(const RunConfig& cfg, const std::string& model_path,
                       const std::string& features_csv, const std::string& out_dir);

double run_mar(const RunConfig& cfg, const std::string& records_csv);

}  // namespace morphforge::cli
