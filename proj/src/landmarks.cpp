#include "morphforge/landmarks.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace morphforge::imagekit {

std::vector<std::string> LandmarkSet::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, p] : points) {
        (void)p;
        if (name.rfind(prefix, 0) == 0) out.push_back(name);
    }
    return out;
}

void LandmarkSet::require_core(bool for_normalization) const {
    if (!has("eye_left") || !has("eye_right"))
        throw InvalidArgument("landmark set must contain eye_left and eye_right");
    if (for_normalization) {
        if (names_with_prefix("brow_").empty())
            throw InvalidArgument("landmark set has no brow_* point");
        if (names_with_prefix("mouth_").empty())
            throw InvalidArgument("landmark set has no mouth_* point");
    }
    for (const auto& [name, p] : points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw InvalidArgument("non-finite landmark: " + name);
}

bool LandmarkSet::same_names(const LandmarkSet& other) const {
    if (points.size() != other.points.size()) return false;
    auto a = points.begin();
    auto b = other.points.begin();
    for (; a != points.end(); ++a, ++b)
        if (a->first != b->first) return false;
    return true;
}

LandmarkSet load_landmarks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open landmarks: " + path);
    LandmarkSet lm;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;  // blank line
        double x, y;
        if (!(ls >> x >> y))
            throw DecodeError(path + ":" + std::to_string(lineno) + ": expected `name x y`");
        std::string extra;
        if (ls >> extra)
            throw DecodeError(path + ":" + std::to_string(lineno) + ": trailing tokens");
        lm.points[name] = Point{x, y};
    }
    return lm;
}

void save_landmarks(const LandmarkSet& lm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[128];
    for (const auto& [name, p] : lm.points) {
        std::snprintf(buf, sizeof(buf), " %.9g %.9g\n", p.x, p.y);
        out << name << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace morphforge::imagekit
