#pragma once

#include <cstddef>
#include <vector>

#include "morphforge/error.hpp"

namespace morphforge::imagekit {

// Planar raster: data[c * w*h + y*w + x], samples nominally in [0,1].
// Pixel centers sit at integer coordinates, origin at the top-left.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {
        if (w < 1 || h < 1 || (c != 1 && c != 3))
            throw InvalidArgument("Image: bad shape " + std::to_string(w) + "x" +
                                  std::to_string(h) + "x" + std::to_string(c));
    }

    std::size_t plane() const { return static_cast<std::size_t>(width) * height; }
    std::size_t size() const { return data.size(); }

    double& at(int x, int y, int c) {
        return data[static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(y) * width + x];
    }
    double at(int x, int y, int c) const {
        return data[static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(y) * width + x];
    }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

struct Kernel2D {
    int rows = 0;
    int cols = 0;
    std::vector<double> taps;

    Kernel2D() = default;
    Kernel2D(int r, int c, std::vector<double> t) : rows(r), cols(c), taps(std::move(t)) {
        if (r < 1 || c < 1 || r % 2 == 0 || c % 2 == 0)
            throw InvalidArgument("Kernel2D: sides must be odd and positive");
        if (taps.size() != static_cast<std::size_t>(r) * c)
            throw InvalidArgument("Kernel2D: tap count does not match shape");
    }
};

enum class Border { Replicate, Zero };

}  // namespace morphforge::imagekit
