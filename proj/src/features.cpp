#include "morphforge/features.hpp"

#include <algorithm>
#include <cmath>

#include "morphforge/imageops.hpp"
#include "morphforge/rng.hpp"
#include "morphforge/tensorfile.hpp"

namespace morphforge::detectors {

std::string scheme_name(FeatureScheme s) {
    switch (s) {
        case FeatureScheme::Lbp59: return "lbp59";
        case FeatureScheme::Bsif4096: return "bsif4096";
        case FeatureScheme::EdgeFeat: return "edgefeat";
    }
    throw InvalidArgument("unknown feature scheme");
}

FeatureScheme scheme_from_name(const std::string& name) {
    if (name == "lbp59") return FeatureScheme::Lbp59;
    if (name == "bsif4096") return FeatureScheme::Bsif4096;
    if (name == "edgefeat") return FeatureScheme::EdgeFeat;
    throw InvalidArgument("unknown feature scheme: " + name);
}

std::size_t scheme_length(FeatureScheme s) {
    switch (s) {
        case FeatureScheme::Lbp59: return 59;
        case FeatureScheme::Bsif4096: return 4096;
        case FeatureScheme::EdgeFeat: return 6;
    }
    throw InvalidArgument("unknown feature scheme");
}

void FeatureVector::validate() const {
    if (values.size() != scheme_length(scheme))
        throw InvalidArgument("feature vector length does not match its scheme");
    if (scheme != FeatureScheme::EdgeFeat)
        for (double v : values)
            if (v < 0.0) throw InvalidArgument("histogram feature must be non-negative");
}

// ----------------------------------------------------------------- LBP ----

namespace {

int circular_transitions(unsigned pattern) {
    int t = 0;
    for (int b = 0; b < 8; ++b) {
        const unsigned cur = (pattern >> b) & 1u;
        const unsigned nxt = (pattern >> ((b + 1) % 8)) & 1u;
        t += cur != nxt;
    }
    return t;
}

std::array<int, 256> build_lbp_bins() {
    std::array<int, 256> bins{};
    int next = 0;
    for (unsigned p = 0; p < 256; ++p)
        bins[p] = circular_transitions(p) <= 2 ? next++ : -1;
    for (unsigned p = 0; p < 256; ++p)
        if (bins[p] < 0) bins[p] = 58;
    return bins;
}

const std::array<int, 256>& lbp_bins() {
    static const std::array<int, 256> bins = build_lbp_bins();
    return bins;
}

}  // namespace

int lbp_uniform_bin(unsigned pattern) { return lbp_bins()[pattern & 0xFF]; }

FeatureVector lbp_histogram(const Image& gray) {
    if (gray.channels != 1) throw InvalidArgument("lbp_histogram: grayscale input required");
    if (gray.width < 3 || gray.height < 3) throw InvalidArgument("lbp_histogram: image too small");

    // Ring neighbours starting east, walking toward decreasing y.
    static constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

    FeatureVector f;
    f.scheme = FeatureScheme::Lbp59;
    f.values.assign(59, 0.0);
    std::size_t count = 0;
    for (int y = 1; y < gray.height - 1; ++y)
        for (int x = 1; x < gray.width - 1; ++x) {
            const double centre = gray.at(x, y, 0);
            unsigned pattern = 0;
            for (int b = 0; b < 8; ++b)
                if (gray.at(x + kDx[b], y + kDy[b], 0) >= centre) pattern |= 1u << b;
            f.values[lbp_bins()[pattern]] += 1.0;
            ++count;
        }
    for (auto& v : f.values) v /= static_cast<double>(count);
    return f;
}

// ---------------------------------------------------------------- BSIF ----

void BsifFilterBank::validate() const {
    for (const auto& flt : filters) {
        if (flt.size() != 121) throw InvalidArgument("BSIF filter must be 11x11");
        double mean = 0.0;
        for (double t : flt) mean += t;
        if (std::abs(mean / 121.0) > 1e-6) throw InvalidArgument("BSIF filter is not zero-mean");
    }
    for (std::size_t i = 0; i < filters.size(); ++i)
        for (std::size_t j = i; j < filters.size(); ++j) {
            double dot = 0.0;
            for (int k = 0; k < 121; ++k) dot += filters[i][k] * filters[j][k];
            const double expect = i == j ? 1.0 : 0.0;
            if (std::abs(dot - expect) > 1e-4)
                throw InvalidArgument("BSIF filters are not orthonormal");
        }
}

BsifFilterBank generate_bsif_bank(std::uint64_t seed) {
    rng::Engine g(seed);
    BsifFilterBank bank;
    bank.seeded = true;
    bank.seed = seed;
    for (auto& flt : bank.filters) {
        flt.resize(121);
        for (auto& t : flt) t = rng::normal(g);
        double mean = 0.0;
        for (double t : flt) mean += t;
        mean /= 121.0;
        for (auto& t : flt) t -= mean;
    }
    // Gram-Schmidt; zero-mean is preserved by linear combination.
    for (int i = 0; i < 12; ++i) {
        auto& fi = bank.filters[i];
        for (int j = 0; j < i; ++j) {
            const auto& fj = bank.filters[j];
            double dot = 0.0;
            for (int k = 0; k < 121; ++k) dot += fi[k] * fj[k];
            for (int k = 0; k < 121; ++k) fi[k] -= dot * fj[k];
        }
        double norm = 0.0;
        for (double t : fi) norm += t * t;
        norm = std::sqrt(norm);
        if (norm < 1e-9) throw Error("generate_bsif_bank: degenerate random draw");
        for (auto& t : fi) t /= norm;
        // Quantize to the container precision so save/load is bit-exact.
        for (auto& t : fi) t = static_cast<double>(static_cast<float>(t));
    }
    return bank;
}

BsifFilterBank load_bsif_bank(const std::string& path) {
    const auto tensors = tensorfile::load_tensors(path);
    if (tensors.size() != 12)
        throw DecodeError("BSIF bank must hold 12 tensors, found " + std::to_string(tensors.size()));
    BsifFilterBank bank;
    for (int i = 0; i < 12; ++i) {
        const auto& t = tensors[i];
        if (t.dims != std::vector<std::uint32_t>{11, 11})
            throw DecodeError("BSIF filter " + t.name + " must be 11x11");
        bank.filters[i].assign(t.values.begin(), t.values.end());
    }
    return bank;
}

void save_bsif_bank(const BsifFilterBank& bank, const std::string& path) {
    std::vector<tensorfile::Tensor> tensors;
    for (int i = 0; i < 12; ++i) {
        tensorfile::Tensor t;
        t.name = "bsif/filter" + std::to_string(i);
        t.dims = {11, 11};
        t.values.reserve(121);
        for (double v : bank.filters[i]) t.values.push_back(static_cast<float>(v));
        tensors.push_back(std::move(t));
    }
    tensorfile::save_tensors(tensors, path);
}

FeatureVector bsif_histogram(const Image& gray, const BsifFilterBank& bank) {
    if (gray.channels != 1) throw InvalidArgument("bsif_histogram: grayscale input required");
    if (gray.width < 11 || gray.height < 11) throw InvalidArgument("bsif_histogram: image too small");

    FeatureVector f;
    f.scheme = FeatureScheme::Bsif4096;
    f.values.assign(4096, 0.0);
    std::size_t count = 0;
    for (int y = 5; y < gray.height - 5; ++y)
        for (int x = 5; x < gray.width - 5; ++x) {
            // Responses are taken against the window centre so that constant
            // regions yield exact zeros (the filters are zero-mean).
            const double centre = gray.at(x, y, 0);
            unsigned code = 0;
            for (int k = 0; k < 12; ++k) {
                const auto& flt = bank.filters[k];
                double response = 0.0;
                for (int ky = 0; ky < 11; ++ky)
                    for (int kx = 0; kx < 11; ++kx)
                        response += flt[ky * 11 + kx] * (gray.at(x + kx - 5, y + ky - 5, 0) - centre);
                if (response > 0.0) code |= 1u << k;
            }
            f.values[code] += 1.0;
            ++count;
        }
    for (auto& v : f.values) v /= static_cast<double>(count);
    return f;
}

// ----------------------------------------------------------------- DCT ----

namespace {

constexpr int kLumaTable[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

struct DctTables {
    double cosine[8][8];  // cosine[x][u] = cos((2x+1) u pi / 16)
    double cu[8];
    DctTables() {
        for (int x = 0; x < 8; ++x)
            for (int u = 0; u < 8; ++u)
                cosine[x][u] = std::cos((2.0 * x + 1.0) * u * 3.14159265358979323846 / 16.0);
        cu[0] = 1.0 / std::sqrt(2.0);
        for (int u = 1; u < 8; ++u) cu[u] = 1.0;
    }
};

const DctTables& dct_tables() {
    static const DctTables t;
    return t;
}

}  // namespace

void dct8_forward(const double in[64], double out[64]) {
    const auto& t = dct_tables();
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    acc += in[y * 8 + x] * t.cosine[x][u] * t.cosine[y][v];
            out[v * 8 + u] = 0.25 * t.cu[u] * t.cu[v] * acc;
        }
}

void dct8_inverse(const double in[64], double out[64]) {
    const auto& t = dct_tables();
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v)
                    acc += t.cu[u] * t.cu[v] * in[v * 8 + u] * t.cosine[x][u] * t.cosine[y][v];
            out[y * 8 + x] = 0.25 * acc;
        }
}

Image dct_recompress(const Image& img, int quality) {
    if (quality < 1 || quality > 100) throw InvalidArgument("dct_recompress: quality must be 1..100");

    const int scale_pct = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    int table[64];
    for (int i = 0; i < 64; ++i)
        table[i] = std::clamp((kLumaTable[i] * scale_pct + 50) / 100, 1, 255);

    const int bw = (img.width + 7) / 8;
    const int bh = (img.height + 7) / 8;
    Image out = img;
    double block[64], coef[64], back[64];
    for (int c = 0; c < img.channels; ++c)
        for (int by = 0; by < bh; ++by)
            for (int bx = 0; bx < bw; ++bx) {
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        // Edge-replicated read keeps partial blocks defined.
                        const int sx = std::min(bx * 8 + x, img.width - 1);
                        const int sy = std::min(by * 8 + y, img.height - 1);
                        block[y * 8 + x] = img.at(sx, sy, c) * 255.0 - 128.0;
                    }
                dct8_forward(block, coef);
                for (int i = 0; i < 64; ++i)
                    coef[i] = static_cast<double>(std::llround(coef[i] / table[i])) * table[i];
                dct8_inverse(coef, back);
                for (int y = 0; y < 8; ++y) {
                    const int sy = by * 8 + y;
                    if (sy >= img.height) break;
                    for (int x = 0; x < 8; ++x) {
                        const int sx = bx * 8 + x;
                        if (sx >= img.width) break;
                        out.at(sx, sy, c) = std::clamp((back[y * 8 + x] + 128.0) / 255.0, 0.0, 1.0);
                    }
                }
            }
    return out;
}

// -------------------------------------------------------- edge features ----

namespace {

void sobel(const Image& gray, Image& gx, Image& gy) {
    static const imagekit::Kernel2D kx(3, 3, {-1, 0, 1, -2, 0, 2, -1, 0, 1});
    static const imagekit::Kernel2D ky(3, 3, {-1, -2, -1, 0, 0, 0, 1, 2, 1});
    gx = imagekit::convolve2d(gray, kx, imagekit::Border::Replicate);
    gy = imagekit::convolve2d(gray, ky, imagekit::Border::Replicate);
}

}  // namespace

int count_edge_pixels(const Image& gray) {
    Image gx, gy;
    sobel(gray, gx, gy);
    int count = 0;
    for (int y = 1; y < gray.height - 1; ++y)
        for (int x = 1; x < gray.width - 1; ++x)
            if (std::hypot(gx.at(x, y, 0), gy.at(x, y, 0)) > 0.1) ++count;
    return count;
}

int count_harris_corners(const Image& gray) {
    Image gx, gy;
    sobel(gray, gx, gy);
    Image response(gray.width, gray.height, 1, 0.0);
    for (int y = 1; y < gray.height - 1; ++y)
        for (int x = 1; x < gray.width - 1; ++x) {
            double sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double ix = gx.at(x + dx, y + dy, 0);
                    const double iy = gy.at(x + dx, y + dy, 0);
                    sxx += ix * ix;
                    syy += iy * iy;
                    sxy += ix * iy;
                }
            response.at(x, y, 0) = sxx * syy - sxy * sxy - 0.04 * (sxx + syy) * (sxx + syy);
        }
    int count = 0;
    for (int y = 2; y < gray.height - 2; ++y)
        for (int x = 2; x < gray.width - 2; ++x) {
            const double r = response.at(x, y, 0);
            if (r <= 1e-4) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1 && is_max; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (response.at(x + dx, y + dy, 0) > r) is_max = false;
                }
            if (is_max) ++count;
        }
    return count;
}

FeatureVector edge_feature_stats(const Image& img, int quality) {
    const Image gray = imagekit::to_grayscale(img);
    const Image regray = imagekit::to_grayscale(dct_recompress(img, quality));

    const double edges_before = count_edge_pixels(gray);
    const double corners_before = count_harris_corners(gray);
    const double edges_after = count_edge_pixels(regray);
    const double corners_after = count_harris_corners(regray);

    FeatureVector f;
    f.scheme = FeatureScheme::EdgeFeat;
    f.values = {edges_before,
                corners_before,
                edges_after,
                corners_after,
                (edges_after - edges_before) / std::max(edges_before, 1.0),
                (corners_after - corners_before) / std::max(corners_before, 1.0)};
    return f;
}

}  // namespace morphforge::detectors
