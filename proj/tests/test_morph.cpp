#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "morphforge/image_io.hpp"
#include "morphforge/morph.hpp"
#include "morphforge/rng.hpp"

using namespace morphforge;
using imagekit::Image;
using imagekit::LandmarkSet;
using imagekit::Point;
using namespace morphforge::morphgen;

namespace {

Image random_image(int w, int h, int c, std::uint64_t seed) {
    rng::Engine g(seed);
    Image img(w, h, c);
    for (auto& v : img.data) v = rng::uniform01(g);
    return img;
}

// Random landmark set with a margin so hulls and warps stay interior.
LandmarkSet random_landmarks(int w, int h, int count, std::uint64_t seed) {
    rng::Engine g(seed);
    LandmarkSet lm;
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "p%02d", i);
        lm.set(name, {rng::uniform(g, 3.0, w - 4.0), rng::uniform(g, 3.0, h - 4.0)});
    }
    return lm;
}

// Definitional check: no vertex strictly inside any triangle's circumcircle.
bool delaunay_property_holds(const TriangleMesh& mesh, double tol) {
    for (const auto& tri : mesh.triangles) {
        const Point& a = mesh.vertices[tri[0]];
        const Point& b = mesh.vertices[tri[1]];
        const Point& c = mesh.vertices[tri[2]];
        const double ax = a.x, ay = a.y;
        const double d = 2.0 * (ax * (b.y - c.y) + b.x * (c.y - ay) + c.x * (ay - b.y));
        if (d == 0.0) return false;
        const double ux = ((ax * ax + ay * ay) * (b.y - c.y) + (b.x * b.x + b.y * b.y) * (c.y - ay) +
                           (c.x * c.x + c.y * c.y) * (ay - b.y)) /
                          d;
        const double uy = ((ax * ax + ay * ay) * (c.x - b.x) + (b.x * b.x + b.y * b.y) * (ax - c.x) +
                           (c.x * c.x + c.y * c.y) * (b.x - ax)) /
                          d;
        const double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
        for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v) {
            if (v == tri[0] || v == tri[1] || v == tri[2]) continue;
            const Point& p = mesh.vertices[v];
            const double d2 = (p.x - ux) * (p.x - ux) + (p.y - uy) * (p.y - uy);
            if (r2 - d2 > tol * r2) return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("morphgen") {

TEST_CASE("average_landmarks endpoints and midpoint") {
    LandmarkSet a, b;
    a.set("p", {0, 0});
    b.set("p", {10, 20});
    CHECK(average_landmarks(a, a, 0.7).get("p").x == doctest::Approx(0.0));
    CHECK(average_landmarks(a, b, 0.0).get("p").x == 0.0);
    const auto mid = average_landmarks(a, b, 0.5).get("p");
    CHECK(mid.x == doctest::Approx(5.0));
    CHECK(mid.y == doctest::Approx(10.0));

    LandmarkSet c;
    c.set("other", {1, 1});
    CHECK_THROWS_AS(average_landmarks(a, c, 0.5), InvalidArgument);
}

TEST_CASE("delaunay of one centered landmark is an 8-triangle fan") {
    LandmarkSet lm;
    lm.set("center", {16, 16});
    TriangleMesh mesh = delaunay_triangulate(lm, 33, 33);
    CHECK(mesh.triangles.size() == 8);
    // Vertex 0 is the landmark; every triangle should touch it.
    for (const auto& tri : mesh.triangles)
        CHECK((tri[0] == 0 || tri[1] == 0 || tri[2] == 0));
    CHECK(delaunay_property_holds(mesh, 1e-7));
}

TEST_CASE("delaunay of the empty landmark set covers the frame") {
    LandmarkSet lm;
    TriangleMesh mesh = delaunay_triangulate(lm, 20, 10);
    CHECK(mesh.vertices.size() == 8);
    CHECK(mesh.triangles.size() == 6);  // 2n-2-h for 8 hull points
    CHECK(delaunay_property_holds(mesh, 1e-7));
}

TEST_CASE("delaunay property on random landmark sets") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        LandmarkSet lm = random_landmarks(64, 48, 12, seed);
        TriangleMesh mesh = delaunay_triangulate(lm, 64, 48);
        CHECK(delaunay_property_holds(mesh, 1e-7));
    }
}

TEST_CASE("identity warp reproduces the image") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        LandmarkSet lm = random_landmarks(24, 18, 6, seed + 100);
        TriangleMesh mesh = delaunay_triangulate(lm, 24, 18);
        Image img = random_image(24, 18, 1, seed);
        Image out = warp_piecewise_affine(img, lm, lm, mesh);
        double max_err = 0.0;
        for (std::size_t i = 0; i < img.data.size(); ++i)
            max_err = std::max(max_err, std::abs(out.data[i] - img.data[i]));
        CHECK(max_err < 1e-6);
    }
}

TEST_CASE("warp of a constant image is constant") {
    LandmarkSet src = random_landmarks(20, 20, 5, 31);
    LandmarkSet dst = random_landmarks(20, 20, 5, 32);
    TriangleMesh mesh = delaunay_triangulate(dst, 20, 20);
    Image img(20, 20, 3, 0.42);
    Image out = warp_piecewise_affine(img, src, dst, mesh);
    for (double v : out.data) CHECK(v == doctest::Approx(0.42).epsilon(1e-9));
}

TEST_CASE("known affine map matches the hand-solved sample") {
    // Both triangles of a hand-built mesh encode a pure x-compression by
    // 0.5 (dst x in [0,9] pulls from src x in [0,4.5]).
    LandmarkSet src, dst;
    src.set("a", {0, 0});
    src.set("b", {4.5, 0});
    src.set("c", {0, 9});
    src.set("d", {4.5, 9});
    dst.set("a", {0, 0});
    dst.set("b", {9, 0});
    dst.set("c", {0, 9});
    dst.set("d", {9, 9});
    TriangleMesh mesh;
    mesh.vertices = {{0, 0}, {9, 0}, {0, 9}, {9, 9}};
    mesh.names = {"a", "b", "c", "d"};
    mesh.triangles = {{0, 1, 2}, {1, 3, 2}};

    Image img(10, 10, 1);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) img.at(x, y, 0) = 0.1 * x;  // value encodes source x

    // Solving the 3-point system for pixel (4,2) by hand gives source (2,2).
    Image out = warp_piecewise_affine(img, src, dst, mesh);
    CHECK(out.at(4, 2, 0) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("blend formula, symmetry and range") {
    Image a(2, 1, 1);
    a.data = {0.2, 1.0};
    Image b(2, 1, 1);
    b.data = {0.6, 0.0};
    Image m = blend(a, b, 0.5);
    CHECK(m.data[0] == doctest::Approx(0.4));
    CHECK(blend(a, a, 0.3).data[1] == doctest::Approx(1.0));

    rng::Engine g(5);
    for (int trial = 0; trial < 20; ++trial) {
        const double alpha = rng::uniform01(g);
        Image x = random_image(6, 4, 3, 60 + trial);
        Image y = random_image(6, 4, 3, 90 + trial);
        Image lhs = blend(x, y, alpha);
        Image rhs = blend(y, x, 1.0 - alpha);
        for (std::size_t i = 0; i < lhs.data.size(); ++i) {
            CHECK(lhs.data[i] == doctest::Approx(rhs.data[i]).epsilon(1e-6));
            CHECK(lhs.data[i] >= 0.0);
            CHECK(lhs.data[i] <= 1.0);
        }
    }

    Image wrong(3, 1, 1);
    CHECK_THROWS_AS(blend(a, wrong, 0.5), InvalidArgument);
}

TEST_CASE("seamless clone of src==dst returns dst") {
    Image img = random_image(12, 12, 3, 7);
    CloneMask mask;
    mask.width = 12;
    mask.height = 12;
    mask.inside.assign(144, 0);
    for (int y = 3; y < 9; ++y)
        for (int x = 3; x < 9; ++x) mask.set(x, y, true);
    Image out = seamless_clone(img, img, mask);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(out.data[i] - img.data[i]) < 1e-3);
}

TEST_CASE("seamless clone of constants keeps the destination level") {
    Image src(10, 10, 1, 0.9);
    Image dst(10, 10, 1, 0.2);
    CloneMask mask;
    mask.width = 10;
    mask.height = 10;
    mask.inside.assign(100, 0);
    for (int y = 2; y < 8; ++y)
        for (int x = 2; x < 8; ++x) mask.set(x, y, true);
    Image out = seamless_clone(src, dst, mask);
    for (double v : out.data) CHECK(v == doctest::Approx(0.2).epsilon(1e-3));
}

TEST_CASE("5x5 poisson clone matches a dense direct solve") {
    Image src = random_image(5, 5, 1, 81);
    Image dst = random_image(5, 5, 1, 82);
    CloneMask mask;
    mask.width = 5;
    mask.height = 5;
    mask.inside.assign(25, 0);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x) mask.set(x, y, true);

    // Dense 9x9 oracle solved by Gaussian elimination.
    double A[9][9] = {};
    double rhs[9] = {};
    auto idx = [](int x, int y) { return (y - 1) * 3 + (x - 1); };
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x) {
            const int i = idx(x, y);
            A[i][i] = 4.0;
            rhs[i] = 4.0 * src.at(x, y, 0);
            for (int d = 0; d < 4; ++d) {
                const int nx = x + dx[d];
                const int ny = y + dy[d];
                rhs[i] -= src.at(nx, ny, 0);
                if (nx >= 1 && nx <= 3 && ny >= 1 && ny <= 3)
                    A[i][idx(nx, ny)] = -1.0;
                else
                    rhs[i] += dst.at(nx, ny, 0);
            }
        }
    for (int col = 0; col < 9; ++col) {
        int piv = col;
        for (int r = col + 1; r < 9; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        for (int c = 0; c < 9; ++c) std::swap(A[col][c], A[piv][c]);
        std::swap(rhs[col], rhs[piv]);
        for (int r = 0; r < 9; ++r) {
            if (r == col) continue;
            const double f = A[r][col] / A[col][col];
            for (int c = 0; c < 9; ++c) A[r][c] -= f * A[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    double expect[9];
    for (int i = 0; i < 9; ++i) expect[i] = rhs[i] / A[i][i];

    Image out = seamless_clone(src, dst, mask);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x)
            CHECK(out.at(x, y, 0) ==
                  doctest::Approx(std::clamp(expect[idx(x, y)], 0.0, 1.0)).epsilon(1e-6));

    // Outside the mask the destination must be untouched, bit for bit.
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            if (!mask.at(x, y)) CHECK(out.at(x, y, 0) == dst.at(x, y, 0));
}

TEST_CASE("mask touching the border is rejected") {
    Image img = random_image(6, 6, 1, 3);
    CloneMask mask;
    mask.width = 6;
    mask.height = 6;
    mask.inside.assign(36, 0);
    mask.set(0, 3, true);
    CHECK_THROWS_AS(seamless_clone(img, img, mask), InvalidArgument);
}

TEST_CASE("clone mask pgm round trip") {
    LandmarkSet lm = random_landmarks(32, 32, 8, 44);
    CloneMask mask = convex_hull_mask(lm, 32, 32, 2);
    const std::string path =
        (std::filesystem::temp_directory_path() / "mf_mask.pgm").string();
    save_clone_mask(mask, path);
    CloneMask back = load_clone_mask(path);
    CHECK(back.inside == mask.inside);
    std::remove(path.c_str());
}

TEST_CASE("self-morph is the identity within 1/255") {
    Image img = random_image(48, 48, 3, 10);
    LandmarkSet lm = random_landmarks(48, 48, 10, 11);
    Image out = make_simple_morph(img, lm, img, lm, 0.5, CloneInto::None);
    double max_err = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        max_err = std::max(max_err, std::abs(out.data[i] - img.data[i]));
    CHECK(max_err <= 1.0 / 255.0);
}

TEST_CASE("alpha 0 yields warped A in A geometry") {
    Image img_a = random_image(32, 32, 1, 20);
    Image img_b = random_image(32, 32, 1, 21);
    LandmarkSet lm = random_landmarks(32, 32, 6, 22);
    // With both landmark sets equal the average geometry is A's own, so the
    // warp is the identity and alpha 0 must return A.
    Image out = make_simple_morph(img_a, lm, img_b, lm, 0.0, CloneInto::None);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(img_a.data[i]).epsilon(1e-6));
}

TEST_CASE("morph symmetry under (A,B,alpha) swap") {
    Image img_a = random_image(40, 40, 3, 30);
    Image img_b = random_image(40, 40, 3, 31);
    LandmarkSet lm_a = random_landmarks(40, 40, 7, 32);
    LandmarkSet lm_b = random_landmarks(40, 40, 7, 33);
    for (double alpha : {0.25, 0.5, 0.75}) {
        Image ab = make_simple_morph(img_a, lm_a, img_b, lm_b, alpha, CloneInto::None);
        Image ba = make_simple_morph(img_b, lm_b, img_a, lm_a, 1.0 - alpha, CloneInto::None);
        for (std::size_t i = 0; i < ab.data.size(); ++i)
            CHECK(ab.data[i] == doctest::Approx(ba.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("clone_into produces a morph anchored to the original") {
    Image img_a = random_image(48, 48, 3, 50);
    Image img_b = random_image(48, 48, 3, 51);
    LandmarkSet lm_a = random_landmarks(48, 48, 8, 52);
    LandmarkSet lm_b = random_landmarks(48, 48, 8, 53);
    Image out = make_simple_morph(img_a, lm_a, img_b, lm_b, 0.5, CloneInto::A);
    CloneMask mask =
        convex_hull_mask(average_landmarks(lm_a, lm_b, 0.5), 48, 48, 2);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            if (!mask.at(x, y))
                for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == img_a.at(x, y, c));
}

}  // TEST_SUITE morphgen
