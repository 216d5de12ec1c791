#include "morphforge/dataset.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "morphforge/rng.hpp"

namespace morphforge::cli {

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Test: return "test";
        case Split::Val: return "val";
        case Split::Unassigned: return "unassigned";
    }
    throw InvalidArgument("unknown split");
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "test") return Split::Test;
    if (name == "val") return Split::Val;
    if (name == "unassigned") return Split::Unassigned;
    throw InvalidArgument("unknown split: " + name);
}

std::string gender_name(Gender g) {
    switch (g) {
        case Gender::M: return "m";
        case Gender::F: return "f";
        case Gender::X: return "x";
    }
    throw InvalidArgument("unknown gender");
}

Gender gender_from_name(const std::string& name) {
    if (name == "m") return Gender::M;
    if (name == "f") return Gender::F;
    if (name == "x") return Gender::X;
    throw InvalidArgument("unknown gender: " + name);
}

void validate_manifest(const Manifest& manifest) {
    std::set<std::string> ids;
    std::map<std::string, std::pair<Gender, std::string>> subjects;
    for (const auto& e : manifest) {
        if (e.id.empty()) throw InvalidArgument("manifest entry with empty id");
        if (!ids.insert(e.id).second) throw InvalidArgument("duplicate manifest id: " + e.id);
        auto [it, fresh] = subjects.emplace(e.subject_id, std::make_pair(e.gender, e.source_db));
        if (!fresh && (it->second.first != e.gender || it->second.second != e.source_db))
            throw InvalidArgument("subject " + e.subject_id +
                                  " appears with conflicting gender or source_db");
    }
}

namespace {

constexpr char kManifestHeader[] = "id,image_path,landmarks_path,subject_id,gender,source_db,split";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(f, line) || line != kManifestHeader)
        throw DecodeError("manifest must start with `" + std::string(kManifestHeader) + "`: " + path);
    Manifest manifest;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 7)
            throw DecodeError(path + ":" + std::to_string(lineno) + ": expected 7 fields");
        ManifestEntry e;
        e.id = fields[0];
        e.image_path = fields[1];
        e.landmarks_path = fields[2];
        e.subject_id = fields[3];
        e.gender = gender_from_name(fields[4]);
        e.source_db = fields[5];
        e.split = split_from_name(fields[6]);
        manifest.push_back(std::move(e));
    }
    validate_manifest(manifest);
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
    validate_manifest(manifest);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << kManifestHeader << "\n";
    for (const auto& e : manifest)
        f << e.id << "," << e.image_path << "," << e.landmarks_path << "," << e.subject_id << ","
          << gender_name(e.gender) << "," << e.source_db << "," << split_name(e.split) << "\n";
    if (!f) throw IoError("write failed: " + path);
}

Manifest split_dataset(Manifest manifest, double train, double test, double val,
                       std::uint64_t seed) {
    validate_manifest(manifest);
    if (!(train > 0.0 || test > 0.0 || val > 0.0) || train < 0.0 || test < 0.0 || val < 0.0)
        throw InvalidArgument("split_dataset: ratios must be non-negative with a positive sum");
    if (std::abs(train + test + val - 1.0) > 1e-9)
        throw InvalidArgument("split_dataset: ratios must sum to 1");

    std::set<std::string> subject_set;
    for (const auto& e : manifest) subject_set.insert(e.subject_id);
    std::vector<std::string> subjects(subject_set.begin(), subject_set.end());

    int buckets = 0;
    for (double r : {train, test, val})
        if (r > 0.0) ++buckets;
    if (static_cast<int>(subjects.size()) < buckets)
        throw InvalidArgument("split_dataset: fewer subjects than non-empty split buckets");

    rng::Engine g(seed);
    rng::shuffle(subjects, g);

    const double n = static_cast<double>(subjects.size());
    const double ratios[3] = {train, test, val};
    std::size_t counts[3];
    double remainders[3];
    std::size_t assigned = 0;
    for (int b = 0; b < 3; ++b) {
        const double exact = ratios[b] * n;
        counts[b] = static_cast<std::size_t>(std::floor(exact));
        remainders[b] = exact - std::floor(exact);
        assigned += counts[b];
    }
    // Largest remainder; ties fall to the earlier bucket (train, test, val).
    while (assigned < subjects.size()) {
        int best = 0;
        for (int b = 1; b < 3; ++b)
            if (remainders[b] > remainders[best]) best = b;
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }

    std::map<std::string, Split> assignment;
    std::size_t at = 0;
    const Split order[3] = {Split::Train, Split::Test, Split::Val};
    for (int b = 0; b < 3; ++b)
        for (std::size_t k = 0; k < counts[b]; ++k) assignment[subjects[at++]] = order[b];

    for (auto& e : manifest) e.split = assignment.at(e.subject_id);
    return manifest;
}

PairPlan plan_pairs(const Manifest& manifest, Split split, std::size_t pairs_wanted,
                    std::uint64_t seed) {
    (void)seed;  // reserved; the greedy matching below is fully deterministic
    validate_manifest(manifest);

    struct Subject {
        Gender gender = Gender::X;
        std::string source_db;
        std::vector<std::string> entries;  // entry ids, ascending
    };
    std::map<std::string, Subject> subjects;
    for (const auto& e : manifest) {
        if (e.split != split) continue;
        Subject& s = subjects[e.subject_id];
        s.gender = e.gender;
        s.source_db = e.source_db;
        s.entries.push_back(e.id);
    }
    for (auto& [id, s] : subjects) {
        (void)id;
        std::sort(s.entries.begin(), s.entries.end());
    }

    auto compatible = [&](const Subject& a, const Subject& b) {
        return a.gender == b.gender && a.source_db == b.source_db;
    };

    std::vector<std::string> pairable;
    for (const auto& [ida, sa] : subjects)
        for (const auto& [idb, sb] : subjects)
            if (ida != idb && compatible(sa, sb)) {
                pairable.push_back(ida);
                break;
            }
    if (pairable.size() < 2) throw InvalidArgument("plan_pairs: no compatible pair exists");

    PairPlan plan;
    for (const auto& id : pairable) plan.usage[id] = 0;
    std::set<std::pair<std::string, std::string>> used;  // ordered subject pairs
    std::vector<std::pair<std::string, std::string>> subject_pairs;

    while (plan.pairs.size() < pairs_wanted) {
        // Least-used admissible pairing: the subject with minimal usage goes
        // first, its least-used unused compatible partner second; between
        // candidate pairings the one with the smaller (max, min, ids) usage
        // key wins. This defers catch-up pairings (which must push a partner
        // one use ahead) until every even pairing is exhausted.
        std::string s_id, p_id;
        int best_hi = INT_MAX, best_lo = INT_MAX;
        for (const auto& cand : pairable)
            for (const auto& other : pairable) {
                if (other == cand || !compatible(subjects[cand], subjects[other])) continue;
                const auto key = cand < other ? std::make_pair(cand, other)
                                              : std::make_pair(other, cand);
                if (used.count(key)) continue;
                const int u_cand = plan.usage[cand];
                const int u_other = plan.usage[other];
                // Orient the pairing so the less-used subject (ties by id)
                // is the one that "picks".
                const std::string& first = u_cand < u_other || (u_cand == u_other && cand < other)
                                               ? cand
                                               : other;
                const std::string& second = first == cand ? other : cand;
                const int hi = std::max(u_cand, u_other);
                const int lo = std::min(u_cand, u_other);
                const bool better =
                    hi < best_hi || (hi == best_hi && lo < best_lo) ||
                    (hi == best_hi && lo == best_lo &&
                     (s_id.empty() || first < s_id || (first == s_id && second < p_id)));
                if (better) {
                    best_hi = hi;
                    best_lo = lo;
                    s_id = first;
                    p_id = second;
                }
            }
        if (s_id.empty()) break;  // exhausted

        const Subject& sa = subjects[s_id];
        const Subject& sb = subjects[p_id];
        const std::string& entry_a = sa.entries[plan.usage[s_id] % sa.entries.size()];
        const std::string& entry_b = sb.entries[plan.usage[p_id] % sb.entries.size()];
        plan.pairs.emplace_back(entry_a, entry_b);
        subject_pairs.emplace_back(s_id, p_id);
        used.insert(s_id < p_id ? std::make_pair(s_id, p_id) : std::make_pair(p_id, s_id));
        ++plan.usage[s_id];
        ++plan.usage[p_id];
    }

    // The stop may fall between two catch-up pairings; unwind until usage is
    // spread by at most one over the pairable subjects.
    while (!plan.pairs.empty()) {
        int lo = INT_MAX, hi = INT_MIN;
        for (const auto& [id, count] : plan.usage) {
            (void)id;
            lo = std::min(lo, count);
            hi = std::max(hi, count);
        }
        if (hi - lo <= 1) break;
        --plan.usage[subject_pairs.back().first];
        --plan.usage[subject_pairs.back().second];
        used.erase(subject_pairs.back().first < subject_pairs.back().second
                       ? subject_pairs.back()
                       : std::make_pair(subject_pairs.back().second, subject_pairs.back().first));
        subject_pairs.pop_back();
        plan.pairs.pop_back();
    }
    return plan;
}

}  // namespace morphforge::cli
