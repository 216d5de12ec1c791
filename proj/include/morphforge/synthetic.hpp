#pragma once

#include <cstdint>
#include <utility>

#include "morphforge/dataset.hpp"
#include "morphforge/image.hpp"
#include "morphforge/landmarks.hpp"

namespace morphforge::cli {

using imagekit::Image;
using imagekit::LandmarkSet;

// Procedural face: smooth elliptical head with eyes, brows, nose and mouth,
// per-subject low-frequency blotches and high-frequency grain, plus the
// landmark set the rest of the pipeline expects. Deterministic in the seed.
std::pair<Image, LandmarkSet> synth_face(std::uint64_t seed, int size, Gender gender);

// Renders `subjects` one-image subjects into out_dir (PNG + landmark file
// per subject, manifest.csv alongside) with balanced genders and two source
// databases. Returns the manifest; splits are left unassigned.
Manifest generate_dataset(const std::string& out_dir, int subjects, int size, std::uint64_t seed);

}  // namespace morphforge::cli
