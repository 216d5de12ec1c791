#include <doctest.h>

#include <algorithm>
#include <climits>
#include <filesystem>
#include <fstream>
#include <set>

#include "morphforge/image_io.hpp"
#include "morphforge/imageops.hpp"
#include "morphforge/pipeline.hpp"
#include "morphforge/rng.hpp"
#include "morphforge/synthetic.hpp"

using namespace morphforge;
using namespace morphforge::cli;

namespace {

std::string fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

Manifest toy_manifest(int subjects, int images_per_subject = 1) {
    Manifest m;
    for (int s = 0; s < subjects; ++s)
        for (int i = 0; i < images_per_subject; ++i) {
            ManifestEntry e;
            e.id = "e" + std::to_string(s * 10 + i);
            e.image_path = e.id + ".png";
            e.landmarks_path = e.id + ".txt";
            e.subject_id = "subj" + std::to_string(s);
            e.gender = s % 2 == 0 ? Gender::M : Gender::F;
            e.source_db = "db";
            m.push_back(e);
        }
    return m;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing, defaults, unknown keys") {
    RunConfig def;
    CHECK(def.morph_alpha == 0.5);
    CHECK(def.split_train == 0.7);

    RunConfig cfg = parse_config("# comment\nmorph.alpha = 0.25\n\nsynth.subjects=16 # inline\n",
                                 "test");
    CHECK(cfg.morph_alpha == 0.25);
    CHECK(cfg.synth_subjects == 16);

    CHECK_THROWS_WITH_AS(parse_config("nope.key = 1\n", "test"),
                         doctest::Contains("nope.key"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("morph.alpha = high\n", "test"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("morph.alpha 0.5\n", "test"), InvalidArgument);
}

TEST_CASE("manifest round trip and validation") {
    const std::string dir = fresh_dir("mf_manifest_rt");
    Manifest m = toy_manifest(3, 2);
    save_manifest(m, dir + "/manifest.csv");
    Manifest back = load_manifest(dir + "/manifest.csv");
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(back[i].id == m[i].id);
        CHECK(back[i].subject_id == m[i].subject_id);
        CHECK(back[i].split == m[i].split);
    }

    Manifest dupe = m;
    dupe.push_back(m.front());
    CHECK_THROWS_AS(validate_manifest(dupe), InvalidArgument);

    Manifest conflict = m;
    conflict[1].subject_id = conflict[0].subject_id;
    conflict[1].gender = conflict[0].gender == Gender::M ? Gender::F : Gender::M;
    CHECK_THROWS_AS(validate_manifest(conflict), InvalidArgument);
}

TEST_CASE("split_dataset hits 7/2/1 on ten subjects and is subject-disjoint") {
    Manifest m = split_dataset(toy_manifest(10), 0.7, 0.2, 0.1, 99);
    int train = 0, test = 0, val = 0;
    for (const auto& e : m) {
        if (e.split == Split::Train) ++train;
        if (e.split == Split::Test) ++test;
        if (e.split == Split::Val) ++val;
    }
    CHECK(train == 7);
    CHECK(test == 2);
    CHECK(val == 1);

    // All-train ratio.
    Manifest all = split_dataset(toy_manifest(5), 1.0, 0.0, 0.0, 1);
    for (const auto& e : all) CHECK(e.split == Split::Train);

    // Determinism.
    Manifest a = split_dataset(toy_manifest(20, 2), 0.7, 0.2, 0.1, 5);
    Manifest b = split_dataset(toy_manifest(20, 2), 0.7, 0.2, 0.1, 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].split == b[i].split);

    // Subjects never straddle splits.
    Manifest multi = split_dataset(toy_manifest(12, 3), 0.7, 0.2, 0.1, 3);
    std::map<std::string, std::set<Split>> by_subject;
    for (const auto& e : multi) by_subject[e.subject_id].insert(e.split);
    for (const auto& [subject, splits] : by_subject) {
        (void)subject;
        CHECK(splits.size() == 1);
    }

    CHECK_THROWS_AS(split_dataset(toy_manifest(2), 0.7, 0.2, 0.1, 1), InvalidArgument);
    CHECK_THROWS_AS(split_dataset(toy_manifest(10), 0.7, 0.2, 0.2, 1), InvalidArgument);
}

TEST_CASE("plan_pairs basic behaviour") {
    Manifest m = toy_manifest(2);
    for (auto& e : m) {
        e.gender = Gender::M;
        e.split = Split::Train;
    }
    PairPlan plan = plan_pairs(m, Split::Train, 1, 0);
    REQUIRE(plan.pairs.size() == 1);
    CHECK(plan.pairs[0].first != plan.pairs[0].second);

    // Four compatible subjects, two pairs: everyone used exactly once.
    Manifest four = toy_manifest(4);
    for (auto& e : four) {
        e.gender = Gender::M;
        e.split = Split::Train;
    }
    PairPlan plan4 = plan_pairs(four, Split::Train, 2, 0);
    REQUIRE(plan4.pairs.size() == 2);
    for (const auto& [subject, count] : plan4.usage) {
        (void)subject;
        CHECK(count == 1);
    }

    // Incompatible databases -> no pair exists.
    Manifest split_db = toy_manifest(2);
    for (auto& e : split_db) {
        e.gender = Gender::M;
        e.split = Split::Train;
    }
    split_db[0].source_db = "a";
    split_db[1].source_db = "b";
    CHECK_THROWS_AS(plan_pairs(split_db, Split::Train, 1, 0), InvalidArgument);
}

TEST_CASE("plan_pairs keeps usage balanced on random manifests") {
    rng::Engine g(123);
    for (int trial = 0; trial < 100; ++trial) {
        const int subjects = 3 + static_cast<int>(rng::uniform_index(g, 14));
        Manifest m = toy_manifest(subjects);
        for (auto& e : m) {
            e.split = Split::Train;
            e.gender = rng::uniform01(g) < 0.5 ? Gender::M : Gender::F;
            e.source_db = rng::uniform01(g) < 0.5 ? "a" : "b";
        }
        const std::size_t wanted = 1 + rng::uniform_index(g, 3 * subjects);
        PairPlan plan;
        try {
            plan = plan_pairs(m, Split::Train, wanted, 0);
        } catch (const InvalidArgument&) {
            continue;  // no compatible pair in this draw
        }
        int lo = INT_MAX, hi = INT_MIN;
        for (const auto& [subject, count] : plan.usage) {
            (void)subject;
            lo = std::min(lo, count);
            hi = std::max(hi, count);
        }
        if (!plan.usage.empty()) CHECK(hi - lo <= 1);

        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& p : plan.pairs) {
            CHECK(p.first != p.second);
            const auto key = p.first < p.second ? p : std::make_pair(p.second, p.first);
            CHECK(seen.insert(key).second);  // no repeated pair
        }
    }
}

TEST_CASE("synthetic faces are deterministic and carry sane landmarks") {
    auto [img, lm] = synth_face(42, 96, Gender::M);
    auto [img2, lm2] = synth_face(42, 96, Gender::M);
    CHECK(img.data == img2.data);
    CHECK(lm.same_names(lm2));

    CHECK(img.width == 96);
    CHECK(img.channels == 3);
    for (double v : img.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK_NOTHROW(lm.require_core(true));
    for (const auto& [name, p] : lm.points) {
        (void)name;
        CHECK(p.x >= 0.0);
        CHECK(p.x <= 95.0);
        CHECK(p.y >= 0.0);
        CHECK(p.y <= 95.0);
    }
    // Eyes roughly level and mouth below them.
    CHECK(std::abs(lm.get("eye_left").y - lm.get("eye_right").y) < 15.0);
    CHECK(lm.get("mouth_top").y > lm.get("eye_left").y);

    auto [img3, lm3] = synth_face(43, 96, Gender::M);
    (void)lm3;
    CHECK(img3.data != img.data);
}

TEST_CASE("full pipeline smoke run on the 16-image synthetic set") {
    const std::string dir = fresh_dir("mf_e2e_smoke");
    RunConfig cfg;
    cfg.synth_subjects = 16;
    cfg.synth_size = 96;
    cfg.norm_size = 64;
    cfg.pairs_train = 6;
    cfg.pairs_test = 3;
    cfg.net_channels = "4";
    cfg.opt_max_iters = 4;
    cfg.train_epochs = 20;

    run_synth(cfg, dir + "/data");
    Manifest manifest = run_split(cfg, dir + "/data/manifest.csv");
    CHECK(manifest.size() == 16);

    MorphManifest morphs = run_morph(cfg, dir + "/data/manifest.csv", dir + "/morphs");
    // The balance rule may cap the pair count below the request on this
    // small set; the pipeline just needs a healthy handful.
    CHECK(morphs.size() >= 4);
    for (const auto& r : morphs) CHECK(r.variant == detectors::Variant::Simple);
    bool has_train = false, has_test = false;
    for (const auto& r : morphs) {
        has_train |= r.split == Split::Train;
        has_test |= r.split == Split::Test;
    }
    CHECK(has_train);
    CHECK(has_test);

    run_enhance(cfg, dir + "/data/manifest.csv", dir + "/morphs/morphs.csv", dir + "/morphs");
    run_post(cfg, dir + "/data/manifest.csv", dir + "/morphs/morphs.csv", dir + "/morphs");
    MorphManifest full = load_morph_manifest(dir + "/morphs/morphs.csv");
    // simple + improved + sharp + hequ + imp_hequ
    CHECK(full.size() == morphs.size() * 5);
    CHECK(std::filesystem::exists(dir + "/morphs/enhance_trace.csv"));

    run_features(cfg, dir + "/data/manifest.csv", dir + "/morphs/morphs.csv", Split::Train,
                 dir + "/train_features.csv");
    run_features(cfg, dir + "/data/manifest.csv", dir + "/morphs/morphs.csv", Split::Test,
                 dir + "/test_features.csv");

    run_train(cfg, dir + "/train_features.csv", dir + "/model.cnwt");
    EvalArtifacts artifacts = run_eval(cfg, dir + "/model.cnwt", dir + "/test_features.csv", dir + "/eval");
    CHECK(std::filesystem::exists(artifacts.scores_csv));
    CHECK(std::filesystem::exists(artifacts.error_table_csv));
    CHECK(std::filesystem::exists(artifacts.bpcer_at_apcer_csv));
    CHECK(std::filesystem::exists(artifacts.det_svg));

    // g12 retraining consumes half simple half improved.
    RunConfig g12 = cfg;
    g12.train_mode = "g12";
    run_train(g12, dir + "/train_features.csv", dir + "/model_g12.cnwt");
    CHECK(std::filesystem::exists(dir + "/model_g12.cnwt"));

    // Determinism: repeating feature extraction yields identical bytes.
    run_features(cfg, dir + "/data/manifest.csv", dir + "/morphs/morphs.csv", Split::Test,
                 dir + "/test_features_again.csv");
    std::ifstream f1(dir + "/test_features.csv", std::ios::binary);
    std::ifstream f2(dir + "/test_features_again.csv", std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);

    std::filesystem::remove_all(dir);
}

TEST_CASE("mar subcommand reads the similarity csv") {
    const std::string dir = fresh_dir("mf_mar");
    {
        std::ofstream f(dir + "/records.csv");
        f << "morph_id,sim_a,sim_b\n";
        f << "m1,0.8,0.9\nm2,0.8,0.4\nm3,0.2,0.9\n";
    }
    RunConfig cfg;
    cfg.mar_threshold = 0.5;
    CHECK(run_mar(cfg, dir + "/records.csv") == doctest::Approx(1.0 / 3.0));
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE cli
