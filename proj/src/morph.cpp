#include "morphforge/morph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "morphforge/image_io.hpp"
#include "morphforge/imageops.hpp"

namespace morphforge::morphgen {

namespace {

double orient2d(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Positive when d lies strictly inside the circumcircle of (a,b,c); the
// caller supplies (a,b,c) with positive orientation. Values within eps of
// zero count as cocircular and are reported as "not inside".
double incircle_det(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

double incircle_eps(const Point& a, const Point& b, const Point& c, const Point& d) {
    double m = 1.0;
    for (const Point* p : {&a, &b, &c, &d})
        m = std::max({m, std::abs(p->x), std::abs(p->y)});
    return 1e-9 * m * m * m * m;
}

bool in_circumcircle(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double orient = orient2d(a, b, c);
    const double det = orient >= 0.0 ? incircle_det(a, b, c, d) : incircle_det(a, c, b, d);
    return det > incircle_eps(a, b, c, d);
}

struct EdgeKey {
    int u, v;
    EdgeKey(int a, int b) : u(std::min(a, b)), v(std::max(a, b)) {}
    bool operator<(const EdgeKey& o) const { return u < o.u || (u == o.u && v < o.v); }
};

// Resolves cocircular quads deterministically: the diagonal touching the
// lowest vertex index wins. Each flip strictly lowers the diagonal's lowest
// index, so the pass terminates.
void canonicalize_ties(TriangleMesh& mesh) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<EdgeKey, std::vector<int>> edge_tris;
        for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
            const auto& tri = mesh.triangles[t];
            for (int e = 0; e < 3; ++e)
                edge_tris[EdgeKey(tri[e], tri[(e + 1) % 3])].push_back(t);
        }
        for (const auto& [edge, tris] : edge_tris) {
            if (tris.size() != 2) continue;
            const auto& t0 = mesh.triangles[tris[0]];
            const auto& t1 = mesh.triangles[tris[1]];
            int a = -1, b = -1;
            for (int v : t0)
                if (v != edge.u && v != edge.v) a = v;
            for (int v : t1)
                if (v != edge.u && v != edge.v) b = v;
            if (a < 0 || b < 0 || a == b) continue;
            if (std::min(a, b) >= std::min(edge.u, edge.v)) continue;
            const Point& pu = mesh.vertices[edge.u];
            const Point& pv = mesh.vertices[edge.v];
            const Point& pa = mesh.vertices[a];
            const Point& pb = mesh.vertices[b];
            const double orient = orient2d(pu, pv, pa);
            const double det = orient >= 0.0 ? incircle_det(pu, pv, pa, pb) : incircle_det(pu, pa, pv, pb);
            if (std::abs(det) > incircle_eps(pu, pv, pa, pb)) continue;  // not a tie
            // Flip only when the quad is strictly convex, i.e. the new
            // diagonal (a,b) crosses the old one (u,v).
            const double s1 = orient2d(pa, pb, pu);
            const double s2 = orient2d(pa, pb, pv);
            if (s1 * s2 >= -1e-12) continue;
            mesh.triangles[tris[0]] = {a, b, edge.u};
            mesh.triangles[tris[1]] = {b, a, edge.v};
            changed = true;
            break;  // adjacency is stale; rebuild
        }
    }
}

// Barycentric coordinates of p in triangle (a,b,c).
bool barycentric(const Point& a, const Point& b, const Point& c, double px, double py,
                 double tol, double& l0, double& l1, double& l2) {
    l0 = l1 = l2 = 0.0;
    const double det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
    if (det == 0.0) return false;
    l0 = ((b.y - c.y) * (px - c.x) + (c.x - b.x) * (py - c.y)) / det;
    l1 = ((c.y - a.y) * (px - c.x) + (a.x - c.x) * (py - c.y)) / det;
    l2 = 1.0 - l0 - l1;
    return l0 >= -tol && l1 >= -tol && l2 >= -tol;
}

std::vector<Point> frame_ring(int width, int height) {
    const double w1 = width - 1.0;
    const double h1 = height - 1.0;
    return {Point{0.0, 0.0},      Point{w1, 0.0},      Point{w1, h1},      Point{0.0, h1},
            Point{w1 / 2.0, 0.0}, Point{w1, h1 / 2.0}, Point{w1 / 2.0, h1}, Point{0.0, h1 / 2.0}};
}

}  // namespace

LandmarkSet average_landmarks(const LandmarkSet& a, const LandmarkSet& b, double alpha) {
    if (!a.same_names(b)) throw InvalidArgument("average_landmarks: name sets differ");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("average_landmarks: alpha outside [0,1]");
    LandmarkSet out;
    auto ia = a.points.begin();
    auto ib = b.points.begin();
    for (; ia != a.points.end(); ++ia, ++ib)
        out.points[ia->first] = Point{(1.0 - alpha) * ia->second.x + alpha * ib->second.x,
                                      (1.0 - alpha) * ia->second.y + alpha * ib->second.y};
    return out;
}

TriangleMesh delaunay_triangulate(const LandmarkSet& lm, int width, int height) {
    if (width < 2 || height < 2) throw InvalidArgument("delaunay_triangulate: frame too small");

    TriangleMesh mesh;
    for (const auto& [name, p] : lm.points) {
        mesh.vertices.push_back(p);
        mesh.names.push_back(name);
    }
    const auto ring = frame_ring(width, height);
    for (std::size_t i = 0; i < ring.size(); ++i) {
        mesh.vertices.push_back(ring[i]);
        mesh.names.push_back("__frame_" + std::to_string(i));
    }

    // Insertion order: lexicographic by coordinate; exact duplicates keep
    // only the first-listed vertex.
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
        bool dupe = false;
        for (int j : order) {
            if (std::abs(mesh.vertices[j].x - mesh.vertices[i].x) < 1e-9 &&
                std::abs(mesh.vertices[j].y - mesh.vertices[i].y) < 1e-9) {
                dupe = true;
                break;
            }
        }
        if (!dupe) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        const Point& a = mesh.vertices[i];
        const Point& b = mesh.vertices[j];
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return i < j;
    });

    // Super-triangle vertices, deliberately off-axis.
    double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
    const double cx = (width - 1.0) / 2.0;
    const double cy = (height - 1.0) / 2.0;
    std::vector<Point> verts = mesh.vertices;
    const int s0 = static_cast<int>(verts.size());
    verts.push_back(Point{cx - 4.13 * diag, cy - 2.87 * diag});
    verts.push_back(Point{cx + 4.31 * diag, cy - 2.71 * diag});
    verts.push_back(Point{cx + 0.17 * diag, cy + 4.53 * diag});

    std::vector<std::array<int, 3>> tris = {{s0, s0 + 1, s0 + 2}};
    for (int pi : order) {
        const Point& p = verts[pi];
        std::vector<std::array<int, 3>> keep;
        std::vector<std::array<int, 2>> cavity_edges;
        std::map<EdgeKey, int> edge_count;
        std::vector<std::array<int, 3>> bad;
        for (const auto& t : tris) {
            if (in_circumcircle(verts[t[0]], verts[t[1]], verts[t[2]], p))
                bad.push_back(t);
            else
                keep.push_back(t);
        }
        for (const auto& t : bad)
            for (int e = 0; e < 3; ++e) {
                EdgeKey k(t[e], t[(e + 1) % 3]);
                if (++edge_count[k] == 1)
                    cavity_edges.push_back({t[e], t[(e + 1) % 3]});
            }
        tris = std::move(keep);
        for (const auto& e : cavity_edges) {
            if (edge_count[EdgeKey(e[0], e[1])] != 1) continue;  // interior to the cavity
            tris.push_back({e[0], e[1], pi});
        }
    }

    // Drop triangles touching the super-triangle; orient the rest so the
    // signed area in image coordinates is positive.
    mesh.triangles.clear();
    for (const auto& t : tris) {
        if (t[0] >= s0 || t[1] >= s0 || t[2] >= s0) continue;
        std::array<int, 3> tri = t;
        if (orient2d(verts[tri[0]], verts[tri[1]], verts[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
        mesh.triangles.push_back(tri);
    }
    std::sort(mesh.triangles.begin(), mesh.triangles.end());

    if (mesh.triangles.empty()) throw InvalidArgument("delaunay_triangulate: all points collinear");

    canonicalize_ties(mesh);
    for (auto& tri : mesh.triangles) {
        if (orient2d(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]) < 0.0)
            std::swap(tri[1], tri[2]);
        const double area = 0.5 * std::abs(orient2d(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                                    mesh.vertices[tri[2]]));
        if (area <= 1e-9) throw InvalidArgument("delaunay_triangulate: degenerate triangle produced");
    }
    std::sort(mesh.triangles.begin(), mesh.triangles.end());
    return mesh;
}

Image warp_piecewise_affine(const Image& img, const LandmarkSet& src, const LandmarkSet& dst,
                            const TriangleMesh& mesh) {
    if (!src.same_names(dst)) throw InvalidArgument("warp: src/dst name sets differ");

    // Source position for every mesh vertex: landmarks map by name, the
    // auxiliary frame ring stays fixed.
    std::vector<Point> src_pos(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const std::string& name = mesh.names[i];
        src_pos[i] = src.has(name) ? src.get(name) : mesh.vertices[i];
    }

    Image out(img.width, img.height, img.channels);
    std::vector<int> owner(img.plane(), -1);
    for (double tol : {1e-9, 1e-6}) {
        for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
            const auto& tri = mesh.triangles[t];
            const Point& a = mesh.vertices[tri[0]];
            const Point& b = mesh.vertices[tri[1]];
            const Point& c = mesh.vertices[tri[2]];
            const int x_lo = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
            const int x_hi = std::min(img.width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
            const int y_lo = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
            const int y_hi = std::min(img.height - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
            for (int y = y_lo; y <= y_hi; ++y)
                for (int x = x_lo; x <= x_hi; ++x) {
                    std::size_t idx = static_cast<std::size_t>(y) * img.width + x;
                    if (owner[idx] >= 0) continue;
                    double l0, l1, l2;
                    if (barycentric(a, b, c, x, y, tol, l0, l1, l2)) owner[idx] = t;
                }
        }
    }

    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * img.width + x;
            const int t = owner[idx];
            if (t < 0)
                throw Error("warp_piecewise_affine: pixel (" + std::to_string(x) + "," +
                            std::to_string(y) + ") outside every triangle");
            const auto& tri = mesh.triangles[t];
            double l0, l1, l2;
            barycentric(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]],
                        x, y, 1e9, l0, l1, l2);
            const double sx = l0 * src_pos[tri[0]].x + l1 * src_pos[tri[1]].x + l2 * src_pos[tri[2]].x;
            const double sy = l0 * src_pos[tri[0]].y + l1 * src_pos[tri[1]].y + l2 * src_pos[tri[2]].y;
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = imagekit::sample_bilinear(img, sx, sy, c);
        }
    return out;
}

Image blend(const Image& a, const Image& b, double alpha) {
    if (!a.same_shape(b)) throw InvalidArgument("blend: shape mismatch");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("blend: alpha outside [0,1]");
    Image out(a.width, a.height, a.channels);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = (1.0 - alpha) * a.data[i] + alpha * b.data[i];
    return out;
}

CloneMask convex_hull_mask(const LandmarkSet& lm, int width, int height, int erode_px) {
    if (lm.points.size() < 3) throw InvalidArgument("convex_hull_mask: need at least 3 points");

    std::vector<Point> pts;
    for (const auto& [name, p] : lm.points) {
        (void)name;
        pts.push_back(p);
    }
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });

    // Andrew monotone chain.
    auto cross = [](const Point& o, const Point& a, const Point& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k > 1 ? k - 1 : k);
    if (hull.size() < 3) throw InvalidArgument("convex_hull_mask: points are collinear");

    CloneMask mask;
    mask.width = width;
    mask.height = height;
    mask.inside.assign(static_cast<std::size_t>(width) * height, 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            bool in = true;
            for (std::size_t i = 0; i < hull.size() && in; ++i) {
                const Point& a = hull[i];
                const Point& b = hull[(i + 1) % hull.size()];
                if (cross(a, b, Point{static_cast<double>(x), static_cast<double>(y)}) < 0.0) in = false;
            }
            mask.set(x, y, in);
        }

    for (int pass = 0; pass < erode_px; ++pass) {
        CloneMask eroded = mask;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                bool keep = mask.at(x, y);
                for (int dy = -1; dy <= 1 && keep; ++dy)
                    for (int dx = -1; dx <= 1 && keep; ++dx) {
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= width || ny >= height || !mask.at(nx, ny))
                            keep = false;
                    }
                eroded.set(x, y, keep);
            }
        mask = std::move(eroded);
    }

    for (int x = 0; x < width; ++x) {
        mask.set(x, 0, false);
        mask.set(x, height - 1, false);
    }
    for (int y = 0; y < height; ++y) {
        mask.set(0, y, false);
        mask.set(width - 1, y, false);
    }
    return mask;
}

CloneMask load_clone_mask(const std::string& path) {
    Image img = imagekit::load_image(path);
    if (img.channels != 1) throw DecodeError("clone mask must be single-channel: " + path);
    CloneMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.inside.resize(img.plane());
    for (std::size_t i = 0; i < img.plane(); ++i) mask.inside[i] = img.data[i] >= 0.5 ? 1 : 0;
    return mask;
}

void save_clone_mask(const CloneMask& mask, const std::string& path) {
    Image img(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < img.plane(); ++i) img.data[i] = mask.inside[i] ? 1.0 : 0.0;
    imagekit::save_image(img, path);
}

Image seamless_clone(const Image& src, const Image& dst, const CloneMask& mask) {
    if (!src.same_shape(dst)) throw InvalidArgument("seamless_clone: src/dst shape mismatch");
    if (mask.width != dst.width || mask.height != dst.height)
        throw InvalidArgument("seamless_clone: mask shape mismatch");
    for (int x = 0; x < mask.width; ++x)
        if (mask.at(x, 0) || mask.at(x, mask.height - 1))
            throw InvalidArgument("seamless_clone: mask touches the border");
    for (int y = 0; y < mask.height; ++y)
        if (mask.at(0, y) || mask.at(mask.width - 1, y))
            throw InvalidArgument("seamless_clone: mask touches the border");

    std::vector<int> index(static_cast<std::size_t>(mask.width) * mask.height, -1);
    std::vector<std::pair<int, int>> cells;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) {
                index[static_cast<std::size_t>(y) * mask.width + x] = static_cast<int>(cells.size());
                cells.emplace_back(x, y);
            }

    Image out = dst;
    if (cells.empty()) return out;

    const int n = static_cast<int>(cells.size());
    static constexpr int kDx[4] = {1, -1, 0, 0};
    static constexpr int kDy[4] = {0, 0, 1, -1};

    // A f = b with A = 4 I - adjacency (SPD); matrix-free conjugate gradient.
    auto apply = [&](const std::vector<double>& v, std::vector<double>& av) {
        for (int i = 0; i < n; ++i) {
            const auto [x, y] = cells[i];
            double acc = 4.0 * v[i];
            for (int d = 0; d < 4; ++d) {
                const int j = index[static_cast<std::size_t>(y + kDy[d]) * mask.width + (x + kDx[d])];
                if (j >= 0) acc -= v[j];
            }
            av[i] = acc;
        }
    };

    for (int c = 0; c < dst.channels; ++c) {
        std::vector<double> b(n), f(n);
        for (int i = 0; i < n; ++i) {
            const auto [x, y] = cells[i];
            double rhs = 4.0 * src.at(x, y, c);
            for (int d = 0; d < 4; ++d) {
                const int nx = x + kDx[d];
                const int ny = y + kDy[d];
                rhs -= src.at(nx, ny, c);
                if (!mask.at(nx, ny)) rhs += dst.at(nx, ny, c);
            }
            b[i] = rhs;
            f[i] = dst.at(x, y, c);
        }

        std::vector<double> r(n), p(n), ap(n);
        apply(f, ap);
        double rr = 0.0;
        for (int i = 0; i < n; ++i) {
            r[i] = b[i] - ap[i];
            rr += r[i] * r[i];
        }
        const double target = 1e-16 * rr;  // (1e-8 * ||r0||)^2
        p = r;
        int iter = 0;
        while (rr > target && rr > 0.0) {
            if (iter++ >= 10000)
                throw SolverError("seamless_clone: conjugate gradient did not converge", std::sqrt(rr));
            apply(p, ap);
            double pap = 0.0;
            for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
            const double alpha = rr / pap;
            for (int i = 0; i < n; ++i) {
                f[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            double rr_next = 0.0;
            for (int i = 0; i < n; ++i) rr_next += r[i] * r[i];
            const double beta = rr_next / rr;
            rr = rr_next;
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        }

        for (int i = 0; i < n; ++i) {
            const auto [x, y] = cells[i];
            out.at(x, y, c) = std::clamp(f[i], 0.0, 1.0);
        }
    }
    return out;
}

Image make_simple_morph(const Image& img_a, const LandmarkSet& lm_a, const Image& img_b,
                        const LandmarkSet& lm_b, double alpha, CloneInto clone_into) {
    if (!img_a.same_shape(img_b)) throw InvalidArgument("make_simple_morph: image shapes differ");
    if (!lm_a.same_names(lm_b)) throw InvalidArgument("make_simple_morph: landmark names differ");

    const LandmarkSet avg = average_landmarks(lm_a, lm_b, alpha);
    const TriangleMesh mesh = delaunay_triangulate(avg, img_a.width, img_a.height);
    const Image warped_a = warp_piecewise_affine(img_a, lm_a, avg, mesh);
    const Image warped_b = warp_piecewise_affine(img_b, lm_b, avg, mesh);
    Image blended = blend(warped_a, warped_b, alpha);

    if (clone_into == CloneInto::None) return blended;
    const CloneMask mask = convex_hull_mask(avg, img_a.width, img_a.height, 2);
    return seamless_clone(blended, clone_into == CloneInto::A ? img_a : img_b, mask);
}

}  // namespace morphforge::morphgen
