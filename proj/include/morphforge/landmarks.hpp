#pragma once

#include <map>
#include <string>
#include <vector>

#include "morphforge/error.hpp"

namespace morphforge::imagekit {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Named 2-D points in image coordinates (pixel centers, origin top-left).
// An ordered map keeps every iteration over the set deterministic.
struct LandmarkSet {
    std::map<std::string, Point> points;

    bool has(const std::string& name) const { return points.count(name) != 0; }

    const Point& get(const std::string& name) const {
        auto it = points.find(name);
        if (it == points.end()) throw InvalidArgument("missing landmark: " + name);
        return it->second;
    }

    void set(const std::string& name, Point p) { points[name] = p; }

    // Names with the given prefix, in lexicographic order.
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;

    // Checks the base invariants: eye_left/eye_right present, at least one
    // brow_* and one mouth_* point when `for_normalization`.
    void require_core(bool for_normalization) const;

    bool same_names(const LandmarkSet& other) const;
};

// Text format: one `name x y` triple per line, whitespace-separated,
// `#` starts a comment.
LandmarkSet load_landmarks(const std::string& path);
void save_landmarks(const LandmarkSet& lm, const std::string& path);

}  // namespace morphforge::imagekit
