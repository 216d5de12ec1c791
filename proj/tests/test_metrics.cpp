#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "morphforge/metrics.hpp"
#include "morphforge/rng.hpp"

using namespace morphforge;
using namespace morphforge::evalkit;
using detectors::Variant;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

ScoreSet random_score_set(std::uint64_t seed) {
    rng::Engine g(seed);
    ScoreSet s;
    const std::size_t nb = 5 + rng::uniform_index(g, 20);
    for (std::size_t i = 0; i < nb; ++i) s.bona_fide.push_back(rng::uniform(g, -2.0, 2.0));
    for (Variant v : {Variant::Simple, Variant::Improved}) {
        const std::size_t na = 5 + rng::uniform_index(g, 20);
        for (std::size_t i = 0; i < na; ++i) s.attacks[v].push_back(rng::uniform(g, -2.0, 2.0));
    }
    return s;
}

}  // namespace

TEST_SUITE("evalkit") {

TEST_CASE("apcer hand examples") {
    std::vector<double> scores = {0.9, 0.2, 0.7};
    CHECK(apcer(scores, 0.5) == doctest::Approx(1.0 / 3.0));
    CHECK(apcer(scores, 0.2) == doctest::Approx(0.0));   // <= min: everything detected
    CHECK(apcer(scores, 0.95) == doctest::Approx(1.0));  // > max: nothing detected
    CHECK_THROWS_AS(apcer({}, 0.5), InvalidArgument);
}

TEST_CASE("bpcer hand examples and the tie rule") {
    CHECK(bpcer({0.1, 0.4}, 0.5) == doctest::Approx(0.0));
    CHECK(bpcer({0.1, 0.6}, 0.5) == doctest::Approx(0.5));
    // A score equal to the threshold counts as attack.
    CHECK(bpcer({0.5, 0.1}, 0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(bpcer({}, 0.5), InvalidArgument);
}

TEST_CASE("det curve of separated scores passes through (0,0)") {
    ScoreSet s;
    s.bona_fide = {0.1, 0.2, 0.3};
    s.attacks[Variant::Simple] = {0.7, 0.8, 0.9};
    DetCurve curve = det_curve(s, Variant::Simple);
    bool found = false;
    for (const auto& p : curve.points)
        if (p.apcer == 0.0 && p.bpcer == 0.0) found = true;
    CHECK(found);
}

TEST_CASE("identical distributions trade off apcer + bpcer = 1") {
    ScoreSet s;
    s.bona_fide = {0.1, 0.3, 0.5, 0.7};
    s.attacks[Variant::Simple] = {0.1, 0.3, 0.5, 0.7};
    DetCurve curve = det_curve(s, Variant::Simple);
    for (const auto& p : curve.points)
        if (std::isfinite(p.threshold))
            CHECK(p.apcer + p.bpcer == doctest::Approx(1.0));
}

TEST_CASE("det sweep is monotone and consistent with direct metrics") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScoreSet s = random_score_set(seed);
        for (Variant v : {Variant::Simple, Variant::Improved}) {
            DetCurve curve = det_curve(s, v);
            for (std::size_t i = 1; i < curve.points.size(); ++i) {
                CHECK(curve.points[i].apcer >= curve.points[i - 1].apcer);
                CHECK(curve.points[i].bpcer <= curve.points[i - 1].bpcer);
            }
            for (const auto& p : curve.points) {
                if (!std::isfinite(p.threshold)) continue;
                CHECK(p.apcer == apcer(s.attacks[v], p.threshold));
                CHECK(p.bpcer == bpcer(s.bona_fide, p.threshold));
            }
        }
    }
}

TEST_CASE("bpcer_at_apcer hand example") {
    ScoreSet s;
    s.attacks[Variant::Simple] = {0.9, 0.8, 0.1};
    s.bona_fide = {0.3, 0.2};
    OperatingPoint pt = bpcer_at_apcer(s, Variant::Simple, 0.34);
    CHECK(pt.achieved);
    CHECK(pt.apcer == doctest::Approx(1.0 / 3.0));
    CHECK(pt.bpcer == doctest::Approx(0.0));
    CHECK(pt.threshold == doctest::Approx(0.8));
}

TEST_CASE("bpcer_at_apcer on the paper grid achieves the target when possible") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        ScoreSet s = random_score_set(seed + 500);
        for (double target : {0.10, 0.05, 0.01}) {
            OperatingPoint pt = bpcer_at_apcer(s, Variant::Simple, target);
            CHECK(pt.achieved);
            CHECK(pt.apcer <= target);
        }
    }
    ScoreSet separable;
    separable.bona_fide = {0.0, 0.1};
    separable.attacks[Variant::Simple] = {0.9, 1.0};
    for (double target : {0.10, 0.05, 0.01})
        CHECK(bpcer_at_apcer(separable, Variant::Simple, target).bpcer == doctest::Approx(0.0));
}

TEST_CASE("mar follows the min rule and is monotone in the threshold") {
    std::vector<MorphMatchRecord> records = {
        {"m1", 0.8, 0.9}, {"m2", 0.8, 0.4}, {"m3", 0.2, 0.9}};
    CHECK(mar(records, 0.5) == doctest::Approx(1.0 / 3.0));
    CHECK(mar(records, 0.0) == doctest::Approx(1.0));
    CHECK(mar(records, 0.95) == doctest::Approx(0.0));

    double prev = 1.0;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        const double m = mar(records, t);
        CHECK(m <= prev);
        prev = m;
    }
    CHECK_THROWS_AS(mar({}, 0.5), InvalidArgument);

    std::vector<MorphMatchRecord> one_fails = {{"m1", 0.9, 0.1}, {"m2", 0.8, 0.2}};
    CHECK(mar(one_fails, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("score csv round trip") {
    ScoreSet s = random_score_set(7);
    const std::string path = temp_path("mf_scores.csv");
    save_scores(s, path);
    ScoreSet back = load_scores(path);
    CHECK(back.bona_fide == s.bona_fide);
    for (const auto& [v, list] : s.attacks) CHECK(back.attacks.at(v) == list);
    std::remove(path.c_str());
}

TEST_CASE("emit_report writes the table, the grid and well-formed svg") {
    ScoreSet s;
    s.bona_fide = {0.05, 0.1, 0.2, 0.9};
    s.attacks[Variant::Simple] = {0.4, 0.8, 0.9};
    s.attacks[Variant::Improved] = {0.3, 0.5, 0.6};
    s.attacks[Variant::Sharp] = {0.45, 0.55, 0.85};
    s.attacks[Variant::Hequ] = {0.35, 0.65, 0.75};
    s.attacks[Variant::ImpHequ] = {0.25, 0.5, 0.7};

    ReportPaths paths{temp_path("mf_table.csv"), temp_path("mf_grid.csv"), temp_path("mf_det.svg")};
    emit_report(s, 0.5, {0.10, 0.05, 0.01}, paths);

    std::ifstream table(paths.error_table_csv);
    std::string header;
    std::getline(table, header);
    CHECK(header ==
          "threshold,bpcer,apcer_simple,apcer_improved,apcer_sharp,apcer_hequ,apcer_imp_hequ");
    std::string row;
    std::getline(table, row);
    CHECK(row.substr(0, 8) == "0.500000");

    std::ifstream grid(paths.bpcer_at_apcer_csv);
    std::getline(grid, header);
    CHECK(header == "apcer_target,variant,bpcer,threshold");
    int rows = 0;
    while (std::getline(grid, row))
        if (!row.empty()) ++rows;
    CHECK(rows == 15);  // 3 targets x 5 variants

    std::ifstream svg(paths.det_svg);
    std::string content((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(content.find("<?xml") == 0);
    CHECK(content.find("</svg>") != std::string::npos);
    int polylines = 0;
    for (std::size_t at = content.find("<polyline"); at != std::string::npos;
         at = content.find("<polyline", at + 1))
        ++polylines;
    CHECK(polylines == 5);

    // Well-formedness: every < has a matching >.
    int depth = 0;
    for (char c : content) {
        if (c == '<') ++depth;
        if (c == '>') --depth;
        CHECK(depth >= 0);
        CHECK(depth <= 1);
    }
    CHECK(depth == 0);

    std::remove(paths.error_table_csv.c_str());
    std::remove(paths.bpcer_at_apcer_csv.c_str());
    std::remove(paths.det_svg.c_str());
}

TEST_CASE("empty attack map is rejected") {
    ScoreSet s;
    s.bona_fide = {0.1};
    ReportPaths paths{temp_path("a.csv"), temp_path("b.csv"), temp_path("c.svg")};
    CHECK_THROWS_AS(emit_report(s, 0.5, {0.1}, paths), InvalidArgument);
}

}  // TEST_SUITE evalkit
