#include "morphforge/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "morphforge/rng.hpp"
#include "morphforge/tensorfile.hpp"

namespace morphforge::styletransfer {

void ConvNet::validate() const {
    std::set<std::string> names;
    int channels = input_channels;
    for (const auto& layer : layers) {
        if (!names.insert(layer.name).second)
            throw InvalidArgument("ConvNet: duplicate layer name " + layer.name);
        if (layer.kind == LayerKind::Conv) {
            if (layer.in_channels != channels)
                throw InvalidArgument("ConvNet: channel chain broken at " + layer.name);
            if (layer.weights.size() !=
                static_cast<std::size_t>(layer.out_channels) * layer.in_channels * 9)
                throw InvalidArgument("ConvNet: weight count wrong at " + layer.name);
            if (layer.bias.size() != static_cast<std::size_t>(layer.out_channels))
                throw InvalidArgument("ConvNet: bias count wrong at " + layer.name);
            for (double w : layer.weights)
                if (!std::isfinite(w)) throw InvalidArgument("ConvNet: non-finite weight in " + layer.name);
            channels = layer.out_channels;
        }
    }
}

namespace {

// Block/index from a conv name like "conv3_2"; returns false for other names.
bool parse_conv_name(const std::string& name, int& block, int& index) {
    if (name.rfind("conv", 0) != 0) return false;
    const auto us = name.find('_', 4);
    if (us == std::string::npos) return false;
    try {
        block = std::stoi(name.substr(4, us - 4));
        index = std::stoi(name.substr(us + 1));
    } catch (...) {
        return false;
    }
    return block >= 1 && index >= 1;
}

}  // namespace

std::vector<std::string> ConvNet::first_convs_per_block() const {
    std::vector<std::string> out;
    for (const auto& layer : layers) {
        int b, i;
        if (layer.kind == LayerKind::Conv && parse_conv_name(layer.name, b, i) && i == 1)
            out.push_back(layer.name);
    }
    return out;
}

std::vector<std::string> ConvNet::last_convs_per_block() const {
    std::map<int, std::pair<int, std::string>> best;  // block -> (index, name)
    for (const auto& layer : layers) {
        int b, i;
        if (layer.kind == LayerKind::Conv && parse_conv_name(layer.name, b, i)) {
            auto it = best.find(b);
            if (it == best.end() || i > it->second.first) best[b] = {i, layer.name};
        }
    }
    std::vector<std::string> out;
    for (const auto& [b, entry] : best) {
        (void)b;
        out.push_back(entry.second);
    }
    return out;
}

bool FeatureMaps::has(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return true;
    return false;
}

const FeatureMaps::Entry& FeatureMaps::by_name(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return e;
    throw InvalidArgument("FeatureMaps: unknown layer " + name);
}

FeatureMaps forward(const ConvNet& net, const Image& img) {
    if (img.channels != net.input_channels)
        throw InvalidArgument("forward: image has " + std::to_string(img.channels) +
                              " channels, net expects " + std::to_string(net.input_channels));

    FeatureMaps maps;
    maps.input_width = img.width;
    maps.input_height = img.height;
    maps.input_channels = img.channels;

    const std::vector<double>* src = &img.data;
    int w = img.width;
    int h = img.height;
    int channels = img.channels;

    for (const auto& layer : net.layers) {
        FeatureMaps::Entry e;
        e.name = layer.name;
        e.kind = layer.kind;
        if (layer.kind == LayerKind::Conv) {
            e.channels = layer.out_channels;
            e.width = w;
            e.height = h;
            e.values.assign(static_cast<std::size_t>(e.channels) * w * h, 0.0);
            const std::size_t plane = static_cast<std::size_t>(w) * h;
            for (int co = 0; co < layer.out_channels; ++co) {
                double* out = e.values.data() + static_cast<std::size_t>(co) * plane;
                for (std::size_t i = 0; i < plane; ++i) out[i] = layer.bias[co];
                for (int ci = 0; ci < layer.in_channels; ++ci) {
                    const double* in = src->data() + static_cast<std::size_t>(ci) * plane;
                    const double* wk =
                        layer.weights.data() + (static_cast<std::size_t>(co) * layer.in_channels + ci) * 9;
                    for (int y = 0; y < h; ++y) {
                        const int ky_lo = y == 0 ? 1 : 0;
                        const int ky_hi = y == h - 1 ? 1 : 2;
                        for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                            const double* row = in + static_cast<std::size_t>(y + ky - 1) * w;
                            double* orow = out + static_cast<std::size_t>(y) * w;
                            const double w0 = wk[ky * 3 + 0];
                            const double w1 = wk[ky * 3 + 1];
                            const double w2 = wk[ky * 3 + 2];
                            orow[0] += w1 * row[0] + w2 * row[1];
                            for (int x = 1; x < w - 1; ++x)
                                orow[x] += w0 * row[x - 1] + w1 * row[x] + w2 * row[x + 1];
                            if (w > 1) orow[w - 1] += w0 * row[w - 2] + w1 * row[w - 1];
                        }
                    }
                }
            }
        } else if (layer.kind == LayerKind::Relu) {
            e.channels = channels;
            e.width = w;
            e.height = h;
            e.values.resize(src->size());
            for (std::size_t i = 0; i < src->size(); ++i)
                e.values[i] = (*src)[i] > 0.0 ? (*src)[i] : 0.0;
        } else {  // Pool
            const int ow = w / 2;
            const int oh = h / 2;
            if (ow < 1 || oh < 1) throw InvalidArgument("forward: input too small to pool at " + layer.name);
            e.channels = channels;
            e.width = ow;
            e.height = oh;
            e.values.assign(static_cast<std::size_t>(channels) * ow * oh, 0.0);
            const std::size_t in_plane = static_cast<std::size_t>(w) * h;
            const std::size_t out_plane = static_cast<std::size_t>(ow) * oh;
            for (int c = 0; c < channels; ++c) {
                const double* in = src->data() + c * in_plane;
                double* out = e.values.data() + c * out_plane;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x)
                        out[static_cast<std::size_t>(y) * ow + x] =
                            0.25 * (in[static_cast<std::size_t>(2 * y) * w + 2 * x] +
                                    in[static_cast<std::size_t>(2 * y) * w + 2 * x + 1] +
                                    in[static_cast<std::size_t>(2 * y + 1) * w + 2 * x] +
                                    in[static_cast<std::size_t>(2 * y + 1) * w + 2 * x + 1]);
            }
            w = ow;
            h = oh;
        }
        channels = e.channels;
        maps.entries.push_back(std::move(e));
        src = &maps.entries.back().values;
    }
    return maps;
}

std::vector<double> backward_to_input(const ConvNet& net, const FeatureMaps& maps,
                                      std::vector<std::vector<double>>& layer_grads) {
    if (layer_grads.size() != maps.entries.size())
        throw InvalidArgument("backward_to_input: gradient list does not match layer count");

    std::vector<double> grad;  // gradient w.r.t. the current layer's output
    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        const Layer& layer = net.layers[li];
        const FeatureMaps::Entry& out_e = maps.entries[li];

        if (grad.empty()) grad.assign(out_e.values.size(), 0.0);
        if (!layer_grads[li].empty()) {
            if (layer_grads[li].size() != out_e.values.size())
                throw InvalidArgument("backward_to_input: bad gradient shape at " + layer.name);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += layer_grads[li][i];
        }

        const int in_w = li > 0 ? maps.entries[li - 1].width : maps.input_width;
        const int in_h = li > 0 ? maps.entries[li - 1].height : maps.input_height;
        const int in_c = li > 0 ? maps.entries[li - 1].channels : maps.input_channels;
        std::vector<double> grad_in(static_cast<std::size_t>(in_w) * in_h * in_c, 0.0);

        if (layer.kind == LayerKind::Conv) {
            const std::size_t plane = static_cast<std::size_t>(out_e.width) * out_e.height;
            const int w = out_e.width;
            const int h = out_e.height;
            for (int co = 0; co < layer.out_channels; ++co) {
                const double* gout = grad.data() + static_cast<std::size_t>(co) * plane;
                for (int ci = 0; ci < layer.in_channels; ++ci) {
                    double* gin = grad_in.data() + static_cast<std::size_t>(ci) * plane;
                    const double* wk =
                        layer.weights.data() + (static_cast<std::size_t>(co) * layer.in_channels + ci) * 9;
                    for (int y = 0; y < h; ++y)
                        for (int ky = 0; ky < 3; ++ky) {
                            const int sy = y + ky - 1;
                            if (sy < 0 || sy >= h) continue;
                            const double* grow = gout + static_cast<std::size_t>(y) * w;
                            double* irow = gin + static_cast<std::size_t>(sy) * w;
                            const double w0 = wk[ky * 3 + 0];
                            const double w1 = wk[ky * 3 + 1];
                            const double w2 = wk[ky * 3 + 2];
                            for (int x = 0; x < w; ++x) {
                                const double gv = grow[x];
                                if (x > 0) irow[x - 1] += w0 * gv;
                                irow[x] += w1 * gv;
                                if (x < w - 1) irow[x + 1] += w2 * gv;
                            }
                        }
                }
            }
        } else if (layer.kind == LayerKind::Relu) {
            if (li == 0) throw InvalidArgument("backward_to_input: relu cannot be the first layer");
            const std::vector<double>& pre = maps.entries[li - 1].values;
            for (std::size_t i = 0; i < grad.size(); ++i)
                grad_in[i] = pre[i] > 0.0 ? grad[i] : 0.0;
        } else {  // Pool
            const int ow = out_e.width;
            const int oh = out_e.height;
            const std::size_t in_plane = static_cast<std::size_t>(in_w) * in_h;
            const std::size_t out_plane = static_cast<std::size_t>(ow) * oh;
            for (int c = 0; c < out_e.channels; ++c) {
                const double* gout = grad.data() + c * out_plane;
                double* gin = grad_in.data() + c * in_plane;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        const double q = 0.25 * gout[static_cast<std::size_t>(y) * ow + x];
                        gin[static_cast<std::size_t>(2 * y) * in_w + 2 * x] += q;
                        gin[static_cast<std::size_t>(2 * y) * in_w + 2 * x + 1] += q;
                        gin[static_cast<std::size_t>(2 * y + 1) * in_w + 2 * x] += q;
                        gin[static_cast<std::size_t>(2 * y + 1) * in_w + 2 * x + 1] += q;
                    }
            }
        }
        grad = std::move(grad_in);
    }
    return grad;
}

ConvNet build_test_net(std::uint64_t seed, const std::vector<int>& channels_per_block,
                       int input_channels) {
    if (channels_per_block.empty())
        throw InvalidArgument("build_test_net: need at least one block");
    rng::Engine g(seed);
    ConvNet net;
    net.input_channels = input_channels;
    int in_c = input_channels;
    char name[32];
    for (std::size_t b = 0; b < channels_per_block.size(); ++b) {
        const int out_c = channels_per_block[b];
        if (out_c < 1) throw InvalidArgument("build_test_net: channel counts must be positive");
        for (int i = 1; i <= 2; ++i) {
            Layer conv;
            conv.kind = LayerKind::Conv;
            std::snprintf(name, sizeof(name), "conv%zu_%d", b + 1, i);
            conv.name = name;
            conv.in_channels = in_c;
            conv.out_channels = out_c;
            const double scale = 1.0 / std::sqrt(static_cast<double>(in_c) * 9.0);
            conv.weights.resize(static_cast<std::size_t>(out_c) * in_c * 9);
            for (auto& wv : conv.weights)
                wv = static_cast<double>(static_cast<float>(rng::normal(g) * scale));
            conv.bias.assign(out_c, 0.0);
            net.layers.push_back(std::move(conv));

            Layer relu;
            relu.kind = LayerKind::Relu;
            std::snprintf(name, sizeof(name), "relu%zu_%d", b + 1, i);
            relu.name = name;
            relu.in_channels = relu.out_channels = out_c;
            net.layers.push_back(std::move(relu));
            in_c = out_c;
        }
        Layer pool;
        pool.kind = LayerKind::Pool;
        std::snprintf(name, sizeof(name), "pool%zu", b + 1);
        pool.name = name;
        pool.in_channels = pool.out_channels = in_c;
        net.layers.push_back(std::move(pool));
    }
    net.validate();
    return net;
}

void save_weights(const ConvNet& net, const std::string& path) {
    std::vector<tensorfile::Tensor> tensors;
    for (const auto& layer : net.layers) {
        if (layer.kind != LayerKind::Conv) continue;
        tensorfile::Tensor w;
        w.name = layer.name + "/weight";
        w.dims = {static_cast<std::uint32_t>(layer.out_channels),
                  static_cast<std::uint32_t>(layer.in_channels), 3, 3};
        w.values.reserve(layer.weights.size());
        for (double v : layer.weights) w.values.push_back(static_cast<float>(v));
        tensors.push_back(std::move(w));

        tensorfile::Tensor b;
        b.name = layer.name + "/bias";
        b.dims = {static_cast<std::uint32_t>(layer.out_channels)};
        b.values.reserve(layer.bias.size());
        for (double v : layer.bias) b.values.push_back(static_cast<float>(v));
        tensors.push_back(std::move(b));
    }
    tensorfile::save_tensors(tensors, path);
}

ConvNet load_weights(const std::string& path) {
    const auto tensors = tensorfile::load_tensors(path);

    std::map<std::pair<int, int>, std::string> convs;
    for (const auto& t : tensors) {
        const auto slash = t.name.find('/');
        if (slash == std::string::npos) continue;
        const std::string base = t.name.substr(0, slash);
        int b, i;
        if (parse_conv_name(base, b, i)) convs[{b, i}] = base;
    }
    if (convs.empty()) throw DecodeError("load_weights: no conv tensors in " + path);

    ConvNet net;
    net.input_channels = 0;
    int in_c = 0;
    int last_block = convs.begin()->first.first;
    char name[32];
    for (const auto& [key, base] : convs) {
        const auto& wt = tensorfile::find(tensors, base + "/weight");
        const auto& bt = tensorfile::find(tensors, base + "/bias");
        if (wt.dims.size() != 4 || wt.dims[2] != 3 || wt.dims[3] != 3)
            throw DecodeError("load_weights: " + base + "/weight must be [out,in,3,3]");
        if (bt.dims.size() != 1 || bt.dims[0] != wt.dims[0])
            throw DecodeError("load_weights: " + base + "/bias rank mismatch");

        if (key.first != last_block) {
            Layer pool;
            pool.kind = LayerKind::Pool;
            std::snprintf(name, sizeof(name), "pool%d", last_block);
            pool.name = name;
            pool.in_channels = pool.out_channels = in_c;
            net.layers.push_back(std::move(pool));
            last_block = key.first;
        }

        Layer conv;
        conv.kind = LayerKind::Conv;
        conv.name = base;
        conv.in_channels = static_cast<int>(wt.dims[1]);
        conv.out_channels = static_cast<int>(wt.dims[0]);
        conv.weights.assign(wt.values.begin(), wt.values.end());
        conv.bias.assign(bt.values.begin(), bt.values.end());
        if (net.input_channels == 0) net.input_channels = conv.in_channels;
        net.layers.push_back(std::move(conv));

        Layer relu;
        relu.kind = LayerKind::Relu;
        std::snprintf(name, sizeof(name), "relu%d_%d", key.first, key.second);
        relu.name = name;
        relu.in_channels = relu.out_channels = conv.out_channels;
        in_c = conv.out_channels;
        net.layers.push_back(std::move(relu));
    }
    Layer pool;
    pool.kind = LayerKind::Pool;
    std::snprintf(name, sizeof(name), "pool%d", last_block);
    pool.name = name;
    pool.in_channels = pool.out_channels = in_c;
    net.layers.push_back(std::move(pool));

    try {
        net.validate();
    } catch (const InvalidArgument& e) {
        throw DecodeError(std::string("load_weights: ") + e.what());
    }
    return net;
}

}  // namespace morphforge::styletransfer
