#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "morphforge/error.hpp"

namespace morphforge::cli {

enum class Split { Train, Test, Val, Unassigned };
enum class Gender { M, F, X };

std::string split_name(Split s);
Split split_from_name(const std::string& name);
std::string gender_name(Gender g);
Gender gender_from_name(const std::string& name);

struct ManifestEntry {
    std::string id;
    std::string image_path;
    std::string landmarks_path;
    std::string subject_id;
    Gender gender = Gender::X;
    std::string source_db;
    Split split = Split::Unassigned;
};

using Manifest = std::vector<ManifestEntry>;

// Unique ids; one subject maps to one gender and one source database.
void validate_manifest(const Manifest& manifest);

// CSV with header `id,image_path,landmarks_path,subject_id,gender,source_db,split`.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

// Assigns splits per subject (all images of a subject share one split):
// subjects are shuffled by seed, bucket sizes come from largest-remainder
// rounding of the ratios over the subject count.
Manifest split_dataset(Manifest manifest, double train, double test, double val,
                       std::uint64_t seed);

struct PairPlan {
    std::vector<std::pair<std::string, std::string>> pairs;  // entry ids
    std::map<std::string, int> usage;                        // subject id -> count
};

// Greedy deterministic matching within a split: repeatedly the least-used
// subject (ties by id) pairs with its least-used compatible unused partner
// (ties by id). Compatible = same gender and source database, different
// subject. Stops at pairs_wanted, at exhaustion, or as soon as another pair
// would spread subject usage further than one. The seed parameter is part
// of the interface; the greedy rule itself is deterministic without it.
PairPlan plan_pairs(const Manifest& manifest, Split split, std::size_t pairs_wanted,
                    std::uint64_t seed);

}  // namespace morphforge::cli
