#include "morphforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace morphforge::evalkit {

void ScoreSet::validate() const {
    if (bona_fide.empty()) throw InvalidArgument("ScoreSet: no bona fide scores");
    if (attacks.empty()) throw InvalidArgument("ScoreSet: no attack variants");
    for (double v : bona_fide)
        if (!std::isfinite(v)) throw InvalidArgument("ScoreSet: non-finite bona fide score");
    for (const auto& [variant, list] : attacks) {
        if (list.empty())
            throw InvalidArgument("ScoreSet: empty score list for variant " +
                                  detectors::variant_name(variant));
        for (double v : list)
            if (!std::isfinite(v)) throw InvalidArgument("ScoreSet: non-finite attack score");
    }
}

double apcer(const std::vector<double>& attack_scores, double threshold) {
    if (attack_scores.empty()) throw InvalidArgument("apcer: empty score list");
    std::size_t missed = 0;
    for (double s : attack_scores)
        if (s < threshold) ++missed;
    return static_cast<double>(missed) / static_cast<double>(attack_scores.size());
}

double bpcer(const std::vector<double>& bona_fide_scores, double threshold) {
    if (bona_fide_scores.empty()) throw InvalidArgument("bpcer: empty score list");
    std::size_t flagged = 0;
    for (double s : bona_fide_scores)
        if (s >= threshold) ++flagged;
    return static_cast<double>(flagged) / static_cast<double>(bona_fide_scores.size());
}

DetCurve det_curve(const ScoreSet& scores, Variant variant) {
    scores.validate();
    auto it = scores.attacks.find(variant);
    if (it == scores.attacks.end())
        throw InvalidArgument("det_curve: missing variant " + detectors::variant_name(variant));
    const auto& attacks = it->second;

    std::set<double> thresholds(scores.bona_fide.begin(), scores.bona_fide.end());
    thresholds.insert(attacks.begin(), attacks.end());

    DetCurve curve;
    for (double t : thresholds)
        curve.points.push_back({apcer(attacks, t), bpcer(scores.bona_fide, t), t});
    curve.points.push_back({1.0, 0.0, std::numeric_limits<double>::infinity()});
    return curve;
}

OperatingPoint bpcer_at_apcer(const ScoreSet& scores, Variant variant, double target) {
    if (!(target > 0.0 && target <= 1.0))
        throw InvalidArgument("bpcer_at_apcer: target must be in (0,1]");
    const DetCurve curve = det_curve(scores, variant);

    OperatingPoint best;
    best.achieved = false;
    for (const auto& p : curve.points) {
        if (p.apcer <= target) {
            best = {p.bpcer, p.threshold, p.apcer, true};  // later = larger threshold
        }
    }
    if (!best.achieved) {
        // Unreachable from a full sweep (the lowest threshold has apcer 0),
        // but kept for partial curves: fall back to the minimal-apcer point.
        const auto it = std::min_element(
            curve.points.begin(), curve.points.end(),
            [](const DetPoint& a, const DetPoint& b) { return a.apcer < b.apcer; });
        best = {it->bpcer, it->threshold, it->apcer, false};
    }
    return best;
}

double mar(const std::vector<MorphMatchRecord>& records, double accept_threshold) {
    if (records.empty()) throw InvalidArgument("mar: no records");
    std::size_t accepted = 0;
    for (const auto& r : records)
        if (std::min(r.sim_a, r.sim_b) >= accept_threshold) ++accepted;
    return static_cast<double>(accepted) / static_cast<double>(records.size());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

void append_scores(std::string& out, Variant variant, const char* label,
                   const std::vector<double>& list) {
    char buf[64];
    for (double s : list) {
        std::snprintf(buf, sizeof(buf), "%.17g", s);  // lossless double round trip
        out += detectors::variant_name(variant) + "," + label + "," + buf + "\n";
    }
}

}  // namespace

void save_scores(const ScoreSet& scores, const std::string& path) {
    scores.validate();
    std::string out = "variant,label,score\n";
    append_scores(out, Variant::Genuine, "bona_fide", scores.bona_fide);
    for (Variant v : detectors::attack_variants()) {
        auto it = scores.attacks.find(v);
        if (it != scores.attacks.end()) append_scores(out, v, "attack", it->second);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << out;
    if (!f) throw IoError("write failed: " + path);
}

ScoreSet load_scores(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "variant,label,score")
        throw DecodeError("score file must start with `variant,label,score`: " + path);
    ScoreSet scores;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw DecodeError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
        const Variant variant = detectors::variant_from_name(fields[0]);
        const detectors::Label label = detectors::label_from_name(fields[1]);
        const double score = std::stod(fields[2]);
        if (label == detectors::Label::BonaFide)
            scores.bona_fide.push_back(score);
        else
            scores.attacks[variant].push_back(score);
    }
    return scores;
}

std::vector<MorphMatchRecord> load_match_records(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "morph_id,sim_a,sim_b")
        throw DecodeError("match file must start with `morph_id,sim_a,sim_b`: " + path);
    std::vector<MorphMatchRecord> records;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw DecodeError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
        records.push_back({fields[0], std::stod(fields[1]), std::stod(fields[2])});
    }
    return records;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Log-log DET polylines clipped to [1e-4, 1].
std::string det_svg_document(const ScoreSet& scores) {
    constexpr double kLo = 1e-4;
    constexpr int kW = 640, kH = 640, kMargin = 60;
    const double span = std::log10(1.0) - std::log10(kLo);
    auto px = [&](double frac) {
        const double clamped = std::clamp(frac, kLo, 1.0);
        return kMargin + (std::log10(clamped) - std::log10(kLo)) / span * (kW - 2 * kMargin);
    };
    auto py = [&](double frac) {
        const double clamped = std::clamp(frac, kLo, 1.0);
        return kH - kMargin - (std::log10(clamped) - std::log10(kLo)) / span * (kH - 2 * kMargin);
    };

    static const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
        << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";

    // Decade grid with labels.
    for (int d = -4; d <= 0; ++d) {
        const double v = std::pow(10.0, d);
        svg << "<line x1=\"" << px(v) << "\" y1=\"" << py(kLo) << "\" x2=\"" << px(v) << "\" y2=\""
            << py(1.0) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<line x1=\"" << px(kLo) << "\" y1=\"" << py(v) << "\" x2=\"" << px(1.0)
            << "\" y2=\"" << py(v) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << px(v) << "\" y=\"" << kH - kMargin + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">1e" << d << "</text>\n";
        svg << "<text x=\"" << kMargin - 10 << "\" y=\"" << py(v) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15
        << "\" font-size=\"14\" text-anchor=\"middle\">APCER</text>\n";
    svg << "<text x=\"18\" y=\"" << kH / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << kH / 2
        << ")\">BPCER</text>\n";

    int color = 0;
    int label_row = 0;
    for (Variant v : detectors::attack_variants()) {
        auto it = scores.attacks.find(v);
        if (it == scores.attacks.end()) continue;
        const DetCurve curve = det_curve(scores, v);
        svg << "<polyline fill=\"none\" stroke=\"" << kColors[color % 5] << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : curve.points) svg << px(p.apcer) << "," << py(p.bpcer) << " ";
        svg << "\"/>\n";
        svg << "<text x=\"" << kW - kMargin - 150 << "\" y=\"" << kMargin + 16 * label_row
            << "\" font-size=\"13\" fill=\"" << kColors[color % 5] << "\">"
            << detectors::variant_name(v) << "</text>\n";
        ++color;
        ++label_row;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

void emit_report(const ScoreSet& scores, double default_threshold,
                 const std::vector<double>& targets, const ReportPaths& paths) {
    scores.validate();

    {
        std::string header = "threshold,bpcer";
        std::string row = fmt(default_threshold) + "," + fmt(bpcer(scores.bona_fide, default_threshold));
        for (Variant v : detectors::attack_variants()) {
            auto it = scores.attacks.find(v);
            if (it == scores.attacks.end()) continue;
            header += ",apcer_" + detectors::variant_name(v);
            row += "," + fmt(apcer(it->second, default_threshold));
        }
        std::ofstream f(paths.error_table_csv, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + paths.error_table_csv);
        f << header << "\n" << row << "\n";
    }

    {
        std::ofstream f(paths.bpcer_at_apcer_csv, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + paths.bpcer_at_apcer_csv);
        f << "apcer_target,variant,bpcer,threshold\n";
        for (double target : targets)
            for (Variant v : detectors::attack_variants()) {
                auto it = scores.attacks.find(v);
                if (it == scores.attacks.end()) continue;
                const OperatingPoint pt = bpcer_at_apcer(scores, v, target);
                f << fmt(target) << "," << detectors::variant_name(v) << "," << fmt(pt.bpcer) << ","
                  << fmt(pt.threshold) << "\n";
            }
    }

    {
        std::ofstream f(paths.det_svg, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + paths.det_svg);
        f << det_svg_document(scores);
    }
}

}  // namespace morphforge::evalkit
