#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "morphforge/pipeline.hpp"

using namespace morphforge;

int main(int argc, char** argv) {
    CLI::App app{"morphforge: face morph generation, enhancement and detection toolkit"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, morphs_path, out_dir = ".";
    std::string features_csv, model_path, records_csv, split_name = "train";
    std::uint64_t seed_override = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* cmd, bool needs_manifest) {
        cmd->add_option("--config", config_path, "config file (key = value lines)");
        cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
        auto* seed = cmd->add_option("--seed", seed_override, "override every seed in the config");
        seed->each([&](const std::string&) { seed_given = true; });
        if (needs_manifest)
            cmd->add_option("--manifest", manifest_path, "dataset manifest csv")->required();
    };

    auto* synth = app.add_subcommand("synth", "generate the bundled synthetic dataset");
    add_common(synth, false);

    auto* split = app.add_subcommand("split", "assign train/test/val splits by subject");
    add_common(split, true);

    auto* morph = app.add_subcommand("morph", "plan pairs and build simple morphs");
    add_common(morph, true);

    auto* enhance = app.add_subcommand("enhance", "style-transfer improvement of simple morphs");
    add_common(enhance, true);
    enhance->add_option("--morphs", morphs_path, "morph manifest csv")->required();

    auto* post = app.add_subcommand("post", "sharp / hequ / imp_hequ post-processing variants");
    add_common(post, true);
    post->add_option("--morphs", morphs_path, "morph manifest csv")->required();

    auto* features = app.add_subcommand("features", "extract detector features to csv");
    add_common(features, true);
    features->add_option("--morphs", morphs_path, "morph manifest csv")->required();
    features->add_option("--split", split_name, "split to extract (train|test|val)")
        ->capture_default_str();
    features->add_option("--features", features_csv, "output feature csv")->required();

    auto* train = app.add_subcommand("train", "fit a detector from a feature csv");
    add_common(train, false);
    train->add_option("--features", features_csv, "training feature csv")->required();
    train->add_option("--model", model_path, "output model file")->required();

    auto* eval = app.add_subcommand("eval", "score a feature csv and emit reports");
    add_common(eval, false);
    eval->add_option("--features", features_csv, "test feature csv")->required();
    eval->add_option("--model", model_path, "trained model file")->required();

    auto* mar_cmd = app.add_subcommand("mar", "morph acceptance rate from similarity scores");
    add_common(mar_cmd, false);
    mar_cmd->add_option("--records", records_csv, "csv `morph_id,sim_a,sim_b`")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        cli::RunConfig cfg = config_path.empty() ? cli::RunConfig{} : cli::load_config(config_path);
        if (seed_given) {
            cfg.synth_seed = seed_override;
            cfg.split_seed = seed_override + 1;
            cfg.pairs_seed = seed_override + 2;
            cfg.net_seed = seed_override + 3;
            cfg.bsif_seed = seed_override + 4;
            cfg.train_seed = seed_override + 5;
        }

        if (synth->parsed()) {
            cli::Manifest m = cli::run_synth(cfg, out_dir);
            std::printf("synth: %zu entries -> %s/manifest.csv\n", m.size(), out_dir.c_str());
        } else if (split->parsed()) {
            cli::Manifest m = cli::run_split(cfg, manifest_path);
            std::size_t train_n = 0, test_n = 0, val_n = 0;
            for (const auto& e : m) {
                if (e.split == cli::Split::Train) ++train_n;
                if (e.split == cli::Split::Test) ++test_n;
                if (e.split == cli::Split::Val) ++val_n;
            }
            std::printf("split: %zu train / %zu test / %zu val\n", train_n, test_n, val_n);
        } else if (morph->parsed()) {
            cli::MorphManifest m = cli::run_morph(cfg, manifest_path, out_dir);
            std::printf("morph: %zu simple morphs -> %s/morphs.csv\n", m.size(), out_dir.c_str());
        } else if (enhance->parsed()) {
            cli::run_enhance(cfg, manifest_path, morphs_path, out_dir);
            std::printf("enhance: improved morphs written to %s\n", out_dir.c_str());
        } else if (post->parsed()) {
            cli::run_post(cfg, manifest_path, morphs_path, out_dir);
            std::printf("post: sharp/hequ/imp_hequ variants written to %s\n", out_dir.c_str());
        } else if (features->parsed()) {
            cli::run_features(cfg, manifest_path, morphs_path, cli::split_from_name(split_name),
                              features_csv);
            std::printf("features: %s\n", features_csv.c_str());
        } else if (train->parsed()) {
            cli::run_train(cfg, features_csv, model_path);
            std::printf("train: model written to %s\n", model_path.c_str());
        } else if (eval->parsed()) {
            cli::EvalArtifacts artifacts = cli::run_eval(cfg, model_path, features_csv, out_dir);
            std::printf("eval: %s %s %s %s\n", artifacts.scores_csv.c_str(),
                        artifacts.error_table_csv.c_str(), artifacts.bpcer_at_apcer_csv.c_str(),
                        artifacts.det_svg.c_str());
        } else if (mar_cmd->parsed()) {
            std::printf("mar: %.6f at threshold %.6f\n", cli::run_mar(cfg, records_csv),
                        cfg.mar_threshold);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
