#include "morphforge/imageops.hpp"

#include <algorithm>
#include <cmath>

namespace morphforge::imagekit {

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    const std::size_t n = img.plane();
    const double* r = img.data.data();
    const double* g = r + n;
    const double* b = g + n;
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

Image convolve2d(const Image& img, const Kernel2D& k, Border border) {
    const int rr = k.rows / 2;
    const int rc = k.cols / 2;
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int ky = 0; ky < k.rows; ++ky) {
                    int sy = y + ky - rr;
                    if (border == Border::Replicate) {
                        sy = std::clamp(sy, 0, img.height - 1);
                    } else if (sy < 0 || sy >= img.height) {
                        continue;
                    }
                    for (int kx = 0; kx < k.cols; ++kx) {
                        int sx = x + kx - rc;
                        if (border == Border::Replicate) {
                            sx = std::clamp(sx, 0, img.width - 1);
                        } else if (sx < 0 || sx >= img.width) {
                            continue;
                        }
                        acc += k.taps[static_cast<std::size_t>(ky) * k.cols + kx] * img.at(sx, sy, c);
                    }
                }
                out.at(x, y, c) = acc;
            }
        }
    }
    return out;
}

double sample_bilinear(const Image& img, double x, double y, int c) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    auto pick = [&](int xi, int yi) {
        xi = std::clamp(xi, 0, img.width - 1);
        yi = std::clamp(yi, 0, img.height - 1);
        return img.at(xi, yi, c);
    };
    const double top = (1.0 - fx) * pick(x0, y0) + fx * pick(x0 + 1, y0);
    const double bot = (1.0 - fx) * pick(x0, y0 + 1) + fx * pick(x0 + 1, y0 + 1);
    return (1.0 - fy) * top + fy * bot;
}

Image resize_bilinear(const Image& img, int w, int h) {
    if (w < 1 || h < 1) throw InvalidArgument("resize_bilinear: target must be >= 1x1");
    Image out(w, h, img.channels);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y) {
            const double v = (y + 0.5) * sy - 0.5;
            for (int x = 0; x < w; ++x) {
                const double u = (x + 0.5) * sx - 0.5;
                out.at(x, y, c) = sample_bilinear(img, u, v, c);
            }
        }
    return out;
}

Image rotate_about(const Image& img, Point center, double angle) {
    // Inverse mapping: each output pixel pulls from the source rotated back.
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const double dx = x - center.x;
                const double dy = y - center.y;
                const double u = center.x + ca * dx - sa * dy;
                const double v = center.y + sa * dx + ca * dy;
                out.at(x, y, c) = sample_bilinear(img, u, v, c);
            }
    return out;
}

std::vector<double> gaussian_taps(double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian_taps: sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double t = std::exp(-(i * i) / (2.0 * sigma * sigma));
        taps[i + radius] = t;
        sum += t;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

Image gaussian_blur(const Image& img, double sigma) {
    const std::vector<double> taps = gaussian_taps(sigma);
    const int n = static_cast<int>(taps.size());
    Kernel2D kx(1, n, taps);
    Kernel2D ky(n, 1, taps);
    return convolve2d(convolve2d(img, kx, Border::Replicate), ky, Border::Replicate);
}

std::pair<Image, LandmarkSet> normalize_face(const Image& img, const LandmarkSet& lm, int out_size) {
    lm.require_core(true);

    const Point el = lm.get("eye_left");
    const Point er = lm.get("eye_right");
    const double angle = std::atan2(er.y - el.y, er.x - el.x);
    const Point mid{0.5 * (el.x + er.x), 0.5 * (el.y + er.y)};

    // Leveling the eyes means rotating the content by -angle; the inverse
    // map inside rotate_about then uses +angle.
    Image rotated = rotate_about(img, mid, angle);

    const double ca = std::cos(-angle);
    const double sa = std::sin(-angle);
    LandmarkSet turned;
    for (const auto& [name, p] : lm.points) {
        const double dx = p.x - mid.x;
        const double dy = p.y - mid.y;
        turned.points[name] = Point{mid.x + ca * dx - sa * dy, mid.y + sa * dx + ca * dy};
    }

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& [name, p] : turned.points) {
        if (name.rfind("brow_", 0) == 0 || name.rfind("mouth_", 0) == 0) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    }
    if (!(x1 > x0) || !(y1 > y0))
        throw InvalidArgument("normalize_face: degenerate brow/mouth bounding box");

    // The box of landmark centers spans pixel area [x0-0.5, x1+0.5]; sampling
    // follows the half-pixel-center convention so that a full-image box
    // reduces to resize_bilinear exactly.
    const double bw = x1 - x0 + 1.0;
    const double bh = y1 - y0 + 1.0;
    Image out(out_size, out_size, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < out_size; ++y) {
            const double v = (y0 - 0.5) + (y + 0.5) * bh / out_size;
            for (int x = 0; x < out_size; ++x) {
                const double u = (x0 - 0.5) + (x + 0.5) * bw / out_size;
                out.at(x, y, c) = sample_bilinear(rotated, u, v, c);
            }
        }

    LandmarkSet mapped;
    for (const auto& [name, p] : turned.points)
        mapped.points[name] = Point{(p.x - (x0 - 0.5)) * out_size / bw - 0.5,
                                    (p.y - (y0 - 0.5)) * out_size / bh - 0.5};
    return {std::move(out), std::move(mapped)};
}

}  // namespace morphforge::imagekit
