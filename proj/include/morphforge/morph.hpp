#pragma once

#include <array>
#include <string>
#include <vector>

#include "morphforge/image.hpp"
#include "morphforge/landmarks.hpp"

namespace morphforge::morphgen {

using imagekit::Image;
using imagekit::LandmarkSet;
using imagekit::Point;

// Triangulation over landmark points plus an 8-point frame ring (4 corners,
// 4 edge midpoints) so the mesh always covers the pixel rectangle.
// `names[i]` identifies vertex i: a landmark name, or "__frame_0".."__frame_7"
// for the auxiliary ring.
struct TriangleMesh {
    std::vector<Point> vertices;
    std::vector<std::string> names;
    std::vector<std::array<int, 3>> triangles;
};

struct CloneMask {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> inside;  // row-major, 1 = inside

    bool at(int x, int y) const { return inside[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { inside[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
};

// Per-point convex combination (1-alpha)*a + alpha*b; name sets must match.
LandmarkSet average_landmarks(const LandmarkSet& a, const LandmarkSet& b, double alpha);

// Bowyer-Watson Delaunay over the landmarks plus the frame ring of the
// width x height pixel rectangle. Deterministic: insertion in lexicographic
// coordinate order, cocircular ties resolved toward the lowest vertex index.
TriangleMesh delaunay_triangulate(const LandmarkSet& lm, int width, int height);

// For each output pixel: locate its triangle in the dst-geometry mesh, apply
// that triangle's inverse affine map into src geometry, sample bilinearly.
Image warp_piecewise_affine(const Image& img, const LandmarkSet& src, const LandmarkSet& dst,
                            const TriangleMesh& mesh);

// Per-sample (1-alpha)*a + alpha*b.
Image blend(const Image& a, const Image& b, double alpha);

// Filled convex hull of the landmark points, eroded by `erode_px` passes of
// 8-neighbour erosion; the 1-pixel border ring is always cleared.
CloneMask convex_hull_mask(const LandmarkSet& lm, int width, int height, int erode_px);

CloneMask load_clone_mask(const std::string& path);
void save_clone_mask(const CloneMask& mask, const std::string& path);

// Poisson blend: solves the 5-point Laplace equation for src's gradients
// inside the mask with dst as Dirichlet boundary, per channel, by conjugate
// gradients (relative residual 1e-8, at most 10000 iterations). Pixels
// outside the mask are copied from dst bit-identically; the result is
// clamped to [0,1].
Image seamless_clone(const Image& src, const Image& dst, const CloneMask& mask);

enum class CloneInto { None, A, B };

// The full morph: averaged geometry, both images warped to it, blended with
// alpha; optionally the blended inner face is seamlessly cloned into one of
// the originals.
Image make_simple_morph(const Image& img_a, const LandmarkSet& lm_a, const Image& img_b,
                        const LandmarkSet& lm_b, double alpha, CloneInto clone_into);

}  // namespace morphforge::morphgen
