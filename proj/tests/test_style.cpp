#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "morphforge/enhance.hpp"
#include "morphforge/morph.hpp"
#include "morphforge/rng.hpp"

using namespace morphforge;
using namespace morphforge::styletransfer;
using imagekit::Image;

namespace {

Image random_image(int w, int h, int c, std::uint64_t seed) {
    rng::Engine g(seed);
    Image img(w, h, c);
    for (auto& v : img.data) v = rng::uniform01(g);
    return img;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Loss-only evaluation for finite differencing.
double loss_at(const ConvNet& net, const Image& img, const FeatureMaps& content,
               const StyleTarget& style, const LossConfig& cfg) {
    return loss_and_grad(net, img, content, style, cfg, nullptr).total;
}

}  // namespace

TEST_SUITE("styletransfer") {

TEST_CASE("forward with zero weights yields zero maps") {
    ConvNet net = build_test_net(3, {2}, 1);
    for (auto& layer : net.layers)
        if (layer.kind == LayerKind::Conv) {
            std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
            std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
        }
    FeatureMaps maps = forward(net, random_image(8, 8, 1, 1));
    for (const auto& e : maps.entries)
        for (double v : e.values) CHECK(v == 0.0);
}

TEST_CASE("identity center tap reproduces the input map") {
    ConvNet net;
    net.input_channels = 1;
    Layer conv;
    conv.kind = LayerKind::Conv;
    conv.name = "conv1_1";
    conv.in_channels = 1;
    conv.out_channels = 1;
    conv.weights.assign(9, 0.0);
    conv.weights[4] = 1.0;  // center tap
    conv.bias = {0.0};
    net.layers.push_back(conv);
    Image img = random_image(7, 5, 1, 2);
    FeatureMaps maps = forward(net, img);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(maps.entries[0].values[i] == doctest::Approx(img.data[i]).epsilon(1e-15));
}

TEST_CASE("single conv output matches hand correlation with zero padding") {
    ConvNet net;
    net.input_channels = 1;
    Layer conv;
    conv.kind = LayerKind::Conv;
    conv.name = "conv1_1";
    conv.in_channels = 1;
    conv.out_channels = 1;
    conv.weights = {0.1, -0.2, 0.3, 0.4, 0.5, -0.6, 0.7, 0.8, -0.9};
    conv.bias = {0.05};
    net.layers.push_back(conv);

    Image img = random_image(4, 4, 1, 7);
    FeatureMaps maps = forward(net, img);

    auto probe = [&](int px, int py) {
        double acc = 0.05;
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const int sx = px + kx - 1;
                const int sy = py + ky - 1;
                if (sx < 0 || sy < 0 || sx >= 4 || sy >= 4) continue;  // zero pad
                acc += conv.weights[ky * 3 + kx] * img.at(sx, sy, 0);
            }
        return acc;
    };
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(maps.entries[0].values[y * 4 + x] == doctest::Approx(probe(x, y)).epsilon(1e-12));
}

TEST_CASE("gram of known maps and of zero maps") {
    FeatureMaps maps;
    FeatureMaps::Entry e;
    e.name = "conv1_1";
    e.channels = 2;
    e.width = 2;
    e.height = 1;
    e.values = {1, 2, 3, 4};  // F1=(1,2), F2=(3,4)
    maps.entries.push_back(e);
    GramMatrix g = gram(maps, "conv1_1");
    CHECK(g.at(0, 0) == doctest::Approx(5.0));
    CHECK(g.at(0, 1) == doctest::Approx(11.0));
    CHECK(g.at(1, 0) == doctest::Approx(11.0));
    CHECK(g.at(1, 1) == doctest::Approx(25.0));

    FeatureMaps zero;
    e.values = {0, 0, 0, 0};
    zero.entries.push_back(e);
    for (double v : gram(zero, "conv1_1").values) CHECK(v == 0.0);

    CHECK_THROWS_AS(gram(maps, "nope"), InvalidArgument);
}

TEST_CASE("gram matches a naive double loop and is symmetric PSD") {
    rng::Engine g(5);
    for (int trial = 0; trial < 20; ++trial) {
        FeatureMaps maps;
        FeatureMaps::Entry e;
        e.name = "layer";
        e.channels = 3;
        e.width = 4;
        e.height = 1;
        e.values.resize(12);
        for (auto& v : e.values) v = rng::uniform(g, -1.0, 1.0);
        maps.entries.push_back(e);
        GramMatrix gm = gram(maps, "layer");

        double trace = 0.0;
        for (int i = 0; i < 3; ++i) {
            trace += gm.at(i, i);
            for (int j = 0; j < 3; ++j) {
                double naive = 0.0;
                for (int p = 0; p < 4; ++p) naive += e.values[i * 4 + p] * e.values[j * 4 + p];
                CHECK(std::abs(gm.at(i, j) - naive) < 1e-6);
                CHECK(gm.at(i, j) == gm.at(j, i));
            }
        }
        // Quadratic form stays nonnegative within tolerance.
        for (int probe = 0; probe < 20; ++probe) {
            double x[3], norm2 = 0.0;
            for (auto& value : x) {
                value = rng::uniform(g, -1.0, 1.0);
                norm2 += value * value;
            }
            double q = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) q += x[i] * gm.at(i, j) * x[j];
            CHECK(q >= -1e-6 * trace * norm2);
        }
    }
}

TEST_CASE("style target average") {
    GramMatrix a, b;
    a.size = b.size = 1;
    a.values = {2.0};
    b.values = {6.0};
    StyleTarget ta{{"conv1_1", a}};
    StyleTarget tb{{"conv1_1", b}};
    CHECK(style_target_average(ta, tb).at("conv1_1").values[0] == doctest::Approx(4.0));
    CHECK(style_target_average(ta, ta).at("conv1_1").values[0] == doctest::Approx(2.0));
    StyleTarget tc{{"conv9_1", a}};
    CHECK_THROWS_AS(style_target_average(ta, tc), InvalidArgument);
}

TEST_CASE("loss vanishes at the target and scales with weights") {
    ConvNet net = build_test_net(11, {2, 2}, 3);
    Image img = random_image(8, 8, 3, 21);
    LossConfig cfg = LossConfig::defaults_for(net);
    FeatureMaps content = forward(net, img);
    StyleTarget style = style_target_from(content, cfg.style_layers);

    std::vector<double> grad;
    LossBreakdown zero = loss_and_grad(net, img, content, style, cfg, &grad);
    CHECK(zero.total == doctest::Approx(0.0).epsilon(1e-18));
    for (double v : grad) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));

    // Pure content loss doubles when every v_l doubles.
    Image other = random_image(8, 8, 3, 22);
    LossConfig content_only = cfg;
    content_only.style_weights.assign(content_only.style_layers.size(), 0.0);
    const double base = loss_at(net, other, content, style, content_only);
    CHECK(base > 0.0);
    LossConfig doubled = content_only;
    for (auto& v : doubled.content_weights) v *= 2.0;
    CHECK(loss_at(net, other, content, style, doubled) == doctest::Approx(2.0 * base).epsilon(1e-12));
    LossBreakdown pure = loss_and_grad(net, other, content, style, content_only, nullptr);
    CHECK(pure.style == 0.0);
    CHECK(pure.total == doctest::Approx(pure.content));
}

TEST_CASE("analytic gradient matches central differences on a tiny net") {
    // Two conv layers, two channels, 6x6 image, seed 7.
    ConvNet net = build_test_net(7, {2}, 1);
    Image img = random_image(6, 6, 1, 7);
    Image content_src = random_image(6, 6, 1, 8);
    Image style_src = random_image(6, 6, 1, 9);
    LossConfig cfg = LossConfig::defaults_for(net);
    FeatureMaps content = forward(net, content_src);
    StyleTarget style = style_target_from(forward(net, style_src), cfg.style_layers);

    std::vector<double> grad;
    loss_and_grad(net, img, content, style, cfg, &grad);

    rng::Engine g(7);
    const double h = 1e-3;
    double max_rel = 0.0;
    for (int probe = 0; probe < 20; ++probe) {
        const std::size_t i = rng::uniform_index(g, img.data.size());
        Image plus = img, minus = img;
        plus.data[i] += h;
        minus.data[i] -= h;
        const double fd = (loss_at(net, plus, content, style, cfg) -
                           loss_at(net, minus, content, style, cfg)) /
                          (2.0 * h);
        const double err = std::abs(grad[i] - fd);
        const double rel = std::abs(fd) >= 1e-8 ? err / std::abs(fd) : err;
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-3);
}

TEST_CASE("loss is invariant under simultaneous channel and Gram permutation") {
    ConvNet net = build_test_net(13, {2}, 1);
    Image img = random_image(10, 10, 1, 31);
    Image style_src = random_image(10, 10, 1, 32);
    LossConfig cfg = LossConfig::defaults_for(net);
    FeatureMaps content = forward(net, random_image(10, 10, 1, 33));
    StyleTarget style = style_target_from(forward(net, style_src), cfg.style_layers);
    const double base = loss_at(net, img, content, style, cfg);

    // Swap conv1_1's two output channels, and conv1_2's input channels to
    // keep the downstream computation identical.
    ConvNet permuted = net;
    for (auto& layer : permuted.layers) {
        if (layer.name == "conv1_1") {
            std::swap_ranges(layer.weights.begin(), layer.weights.begin() + 9,
                             layer.weights.begin() + 9);
            std::swap(layer.bias[0], layer.bias[1]);
        }
        if (layer.name == "conv1_2") {
            // weights are [out][in][3][3]; swap in-channel slices per out.
            for (int out = 0; out < layer.out_channels; ++out) {
                auto base_it = layer.weights.begin() + out * layer.in_channels * 9;
                std::swap_ranges(base_it, base_it + 9, base_it + 9);
            }
        }
    }
    StyleTarget permuted_style = style;
    GramMatrix& gm = permuted_style.at("conv1_1");
    GramMatrix swapped = gm;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) swapped.values[(1 - i) * 2 + (1 - j)] = gm.at(i, j);
    permuted_style.at("conv1_1") = swapped;

    const double permuted_loss = loss_at(permuted, img, forward(permuted, random_image(10, 10, 1, 33)),
                                         permuted_style, cfg);
    CHECK(permuted_loss == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("gram shape is independent of the input size") {
    ConvNet net = build_test_net(17, {3, 4}, 3);
    Image small = random_image(12, 10, 3, 41);
    Image big(24, 20, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 24; ++x) big.at(x, y, c) = small.at(x / 2, y / 2, c);  // nearest
    for (const auto& name : net.first_convs_per_block()) {
        GramMatrix gs = gram(forward(net, small), name);
        GramMatrix gb = gram(forward(net, big), name);
        CHECK(gs.size == gb.size);
    }
}

TEST_CASE("build_test_net naming, chain, determinism, round trip") {
    ConvNet net = build_test_net(99, {4, 8}, 3);
    std::vector<std::string> conv_pool_names;
    std::vector<int> chain;
    for (const auto& layer : net.layers) {
        if (layer.kind == LayerKind::Conv) {
            conv_pool_names.push_back(layer.name);
            chain.push_back(layer.out_channels);
        } else if (layer.kind == LayerKind::Pool) {
            conv_pool_names.push_back(layer.name);
        }
    }
    CHECK(conv_pool_names ==
          std::vector<std::string>{"conv1_1", "conv1_2", "pool1", "conv2_1", "conv2_2", "pool2"});
    CHECK(chain == std::vector<int>{4, 4, 8, 8});

    ConvNet again = build_test_net(99, {4, 8}, 3);
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        CHECK(net.layers[i].weights == again.layers[i].weights);

    const std::string path = temp_path("mf_net.cnwt");
    save_weights(net, path);
    ConvNet loaded = load_weights(path);
    REQUIRE(loaded.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        CHECK(loaded.layers[i].name == net.layers[i].name);
        CHECK(loaded.layers[i].weights == net.layers[i].weights);
        CHECK(loaded.layers[i].bias == net.layers[i].bias);
    }
    CHECK(loaded.input_channels == 3);
    std::remove(path.c_str());
}

TEST_CASE("default layer roles mirror the block structure") {
    ConvNet net = build_test_net(1, {2, 3, 4}, 3);
    LossConfig cfg = LossConfig::defaults_for(net);
    CHECK(cfg.style_layers == std::vector<std::string>{"conv1_1", "conv2_1", "conv3_1"});
    CHECK(cfg.content_layers == std::vector<std::string>{"conv1_2", "conv2_2", "conv3_2"});
    CHECK(cfg.style_weights[0] == doctest::Approx(1e3));
    CHECK(cfg.content_weights[0] == doctest::Approx(1.0));
}

TEST_CASE("forward rejects channel mismatch") {
    ConvNet net = build_test_net(1, {2}, 3);
    CHECK_THROWS_AS(forward(net, random_image(8, 8, 1, 1)), InvalidArgument);
}

}  // TEST_SUITE styletransfer

TEST_SUITE("lbfgsb") {

TEST_CASE("unconstrained quadratic converges to the center") {
    const int n = 10;
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) c[i] = 0.1 * i - 0.3;
    auto obj = [&](const std::vector<double>& x, std::vector<double>& g) {
        double f = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = x[i] - c[i];
            f += d * d;
            g[i] = 2.0 * d;
        }
        return f;
    };
    OptimizerConfig cfg;
    cfg.max_iters = 100;
    OptimizeResult res = lbfgsb_minimize(obj, std::vector<double>(n, 5.0), cfg);
    for (int i = 0; i < n; ++i) CHECK(std::abs(res.x[i] - c[i]) < 1e-6);
    for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
}

TEST_CASE("box-constrained quadratic projects onto the box") {
    const int n = 100;
    auto obj = [&](const std::vector<double>& x, std::vector<double>& g) {
        double f = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = x[i] - 2.0;
            f += d * d;
            g[i] = 2.0 * d;
        }
        return f;
    };
    OptimizerConfig cfg;
    cfg.max_iters = 200;
    cfg.lower.assign(n, 0.0);
    cfg.upper.assign(n, 1.0);
    OptimizeResult res = lbfgsb_minimize(obj, std::vector<double>(n, 0.25), cfg);
    CHECK(res.iterations <= 200);
    for (double v : res.x) CHECK(std::abs(v - 1.0) < 1e-6);
    CHECK(res.reason == StopReason::GradTol);
}

TEST_CASE("already-converged start returns after zero iterations") {
    auto obj = [](const std::vector<double>& x, std::vector<double>& g) {
        g[0] = 2.0 * x[0];
        return x[0] * x[0];
    };
    OptimizerConfig cfg;
    OptimizeResult res = lbfgsb_minimize(obj, {0.0}, cfg);
    CHECK(res.iterations == 0);
    CHECK(res.x[0] == 0.0);
    CHECK(res.reason == StopReason::GradTol);
}

TEST_CASE("out-of-box start is clamped and flagged") {
    auto obj = [](const std::vector<double>& x, std::vector<double>& g) {
        g[0] = 2.0 * x[0];
        return x[0] * x[0];
    };
    OptimizerConfig cfg;
    cfg.lower = {0.25};
    cfg.upper = {1.0};
    OptimizeResult res = lbfgsb_minimize(obj, {7.0}, cfg);
    CHECK(res.clamped_start);
    CHECK(std::abs(res.x[0] - 0.25) < 1e-9);
}

TEST_CASE("non-finite objective at the start throws") {
    auto obj = [](const std::vector<double>&, std::vector<double>& g) {
        g[0] = 0.0;
        return std::numeric_limits<double>::quiet_NaN();
    };
    OptimizerConfig cfg;
    CHECK_THROWS_AS(lbfgsb_minimize(obj, {1.0}, cfg), Error);
}

TEST_CASE("rosenbrock valley is handled by the two-loop recursion") {
    auto obj = [](const std::vector<double>& x, std::vector<double>& g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    OptimizerConfig cfg;
    cfg.max_iters = 2000;
    cfg.grad_tol = 1e-8;
    OptimizeResult res = lbfgsb_minimize(obj, {-1.2, 1.0}, cfg);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-4);
    CHECK(std::abs(res.x[1] - 1.0) < 1e-4);
    for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
}

}  // TEST_SUITE lbfgsb

TEST_SUITE("enhance") {

TEST_CASE("fixed point returns the blended image bit-identically") {
    ConvNet net = build_test_net(5, {2, 3}, 3);
    Image blended = random_image(16, 16, 3, 55);
    LossConfig cfg = LossConfig::defaults_for(net);
    OptimizerConfig opt;
    opt.max_iters = 50;
    EnhanceResult res = enhance_morph(blended, blended, blended, net, cfg, opt);
    CHECK(res.reason == StopReason::GradTol);
    REQUIRE(res.image.data.size() == blended.data.size());
    for (std::size_t i = 0; i < blended.data.size(); ++i)
        CHECK(res.image.data[i] == blended.data[i]);
    REQUIRE(!res.trace.empty());
    CHECK(res.trace.size() == 1);  // only the starting row; zero iterations
}

TEST_CASE("style loss falls on a textured pair while total never rises") {
    ConvNet net = build_test_net(5, {4}, 3);
    rng::Engine g(77);
    Image a(24, 24, 3), b(24, 24, 3);
    for (auto& v : a.data) v = 0.5 + 0.4 * (rng::uniform01(g) - 0.5);
    for (auto& v : b.data) v = 0.5 + 0.4 * (rng::uniform01(g) - 0.5);
    Image blended = morphforge::morphgen::blend(a, b, 0.5);

    LossConfig cfg = LossConfig::defaults_for(net);
    OptimizerConfig opt;
    opt.max_iters = 20;
    opt.grad_tol = 1e-12;
    opt.loss_rel_tol = 0.0;
    EnhanceResult res = enhance_morph(blended, a, b, net, cfg, opt);
    REQUIRE(res.trace.size() >= 2);
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace[i].total <= res.trace[i - 1].total);
    CHECK(res.trace.back().style < res.trace.front().style);
    for (double v : res.image.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("dimension mismatch is rejected") {
    ConvNet net = build_test_net(5, {2}, 3);
    Image a = random_image(16, 16, 3, 1);
    Image b = random_image(8, 8, 3, 2);
    OptimizerConfig opt;
    CHECK_THROWS_AS(enhance_morph(a, a, b, net, LossConfig::defaults_for(net), opt),
                    InvalidArgument);
}

}  // TEST_SUITE enhance
