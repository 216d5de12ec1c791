#include "morphforge/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "morphforge/image_io.hpp"
#include "morphforge/imageops.hpp"

namespace morphforge::postprocess {

Image unsharp_mask(const Image& img, double sigma, double amount, double threshold) {
    if (!(sigma > 0.0)) throw InvalidArgument("unsharp_mask: sigma must be > 0");
    if (amount < 0.0 || threshold < 0.0)
        throw InvalidArgument("unsharp_mask: amount and threshold must be >= 0");
    const Image blurred = imagekit::gaussian_blur(img, sigma);
    Image out = img;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double detail = img.data[i] - blurred.data[i];
        if (std::abs(detail) > threshold)
            out.data[i] = std::clamp(img.data[i] + amount * detail, 0.0, 1.0);
    }
    return out;
}

namespace {

std::array<double, 256> channel_cdf(const Image& img, int c) {
    std::array<double, 256> hist{};
    const std::size_t plane = img.plane();
    const double* p = img.data.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) hist[imagekit::quantize8(p[i])] += 1.0;
    std::array<double, 256> cdf{};
    double acc = 0.0;
    for (int b = 0; b < 256; ++b) {
        acc += hist[b] / static_cast<double>(plane);
        cdf[b] = acc;
    }
    return cdf;
}

// m(v) = smallest reference bin whose CDF >= CDF_img(v).
std::array<int, 256> matching_map(const std::array<double, 256>& cdf_img,
                                  const std::array<double, 256>& cdf_ref) {
    std::array<int, 256> map{};
    int bin = 0;
    for (int v = 0; v < 256; ++v) {
        while (bin < 255 && cdf_ref[bin] < cdf_img[v] - 1e-12) ++bin;
        map[v] = bin;
    }
    return map;
}

}  // namespace

Image histogram_match(const Image& img, const Image& reference) {
    if (img.channels != reference.channels)
        throw InvalidArgument("histogram_match: channel counts differ");
    Image out = img;
    const std::size_t plane = img.plane();
    for (int c = 0; c < img.channels; ++c) {
        const auto cdf_img = channel_cdf(img, c);
        const auto cdf_ref = channel_cdf(reference, c);
        const auto map = matching_map(cdf_img, cdf_ref);
        double* p = out.data.data() + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] = map[imagekit::quantize8(p[i])] / 255.0;
    }
    return out;
}

Image histogram_equalize(const Image& img) {
    // A flat CDF is linear in the bin index.
    Image out = img;
    const std::size_t plane = img.plane();
    std::array<double, 256> cdf_ref{};
    for (int b = 0; b < 256; ++b) cdf_ref[b] = (b + 1) / 256.0;
    for (int c = 0; c < img.channels; ++c) {
        const auto cdf_img = channel_cdf(img, c);
        const auto map = matching_map(cdf_img, cdf_ref);
        double* p = out.data.data() + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] = map[imagekit::quantize8(p[i])] / 255.0;
    }
    return out;
}

}  // namespace morphforge::postprocess
