#pragma once

#include <map>
#include <string>
#include <vector>

#include "morphforge/classify.hpp"

namespace morphforge::evalkit {

using detectors::Variant;

// Labeled detector scores; higher = more attack-like, everywhere.
struct ScoreSet {
    std::vector<double> bona_fide;
    std::map<Variant, std::vector<double>> attacks;

    void validate() const;
};

// Fraction of attack scores classified bona fide (score < threshold).
double apcer(const std::vector<double>& attack_scores, double threshold);

// Fraction of bona fide scores classified attack (score >= threshold).
double bpcer(const std::vector<double>& bona_fide_scores, double threshold);

struct DetPoint {
    double apcer = 0.0;
    double bpcer = 0.0;
    double threshold = 0.0;
};

// One point per threshold from the sorted union of all scores plus a +inf
// sentinel; apcer non-decreasing and bpcer non-increasing along the sweep.
struct DetCurve {
    std::vector<DetPoint> points;
};

DetCurve det_curve(const ScoreSet& scores, Variant variant);

struct OperatingPoint {
    double bpcer = 0.0;
    double threshold = 0.0;
    double apcer = 0.0;   // achieved value at the picked threshold
    bool achieved = true;  // false when no sweep point satisfied the target
};

// The largest sweep threshold with apcer <= target.
OperatingPoint bpcer_at_apcer(const ScoreSet& scores, Variant variant, double target);

struct MorphMatchRecord {
    std::string morph_id;
    double sim_a = 0.0;  // subject A probe vs morph, higher = better match
    double sim_b = 0.0;
};

// Fraction of morphs where both subjects verify: min(sim_a, sim_b) >= t.
double mar(const std::vector<MorphMatchRecord>& records, double accept_threshold);

// Score CSV `variant,label,score`.
void save_scores(const ScoreSet& scores, const std::string& path);
ScoreSet load_scores(const std::string& path);

// Similarity CSV `morph_id,sim_a,sim_b`.
std::vector<MorphMatchRecord> load_match_records(const std::string& path);

struct ReportPaths {
    std::string error_table_csv;    // BPCER and per-variant APCER at the default threshold
    std::string bpcer_at_apcer_csv; // one row per (target, variant)
    std::string det_svg;            // log-log DET plot, one polyline per variant
};

void emit_report(const ScoreSet& scores, double default_threshold,
                 const std::vector<double>& targets, const ReportPaths& paths);

}  // namespace morphforge::evalkit
