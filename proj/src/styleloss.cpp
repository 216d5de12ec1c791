#include "morphforge/styleloss.hpp"

#include <cmath>

namespace morphforge::styletransfer {

GramMatrix gram(const FeatureMaps& maps, const std::string& layer) {
    const auto& e = maps.by_name(layer);
    const int n = e.channels;
    const std::size_t m = e.pixels();
    GramMatrix g;
    g.size = n;
    g.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* fi = e.values.data() + static_cast<std::size_t>(i) * m;
        for (int j = i; j < n; ++j) {
            const double* fj = e.values.data() + static_cast<std::size_t>(j) * m;
            double acc = 0.0;
            for (std::size_t p = 0; p < m; ++p) acc += fi[p] * fj[p];
            g.values[static_cast<std::size_t>(i) * n + j] = acc;
            g.values[static_cast<std::size_t>(j) * n + i] = acc;
        }
    }
    return g;
}

StyleTarget style_target_from(const FeatureMaps& maps, const std::vector<std::string>& layers) {
    StyleTarget t;
    for (const auto& name : layers) t[name] = gram(maps, name);
    return t;
}

StyleTarget style_target_average(const StyleTarget& a, const StyleTarget& b) {
    if (a.size() != b.size()) throw InvalidArgument("style_target_average: layer sets differ");
    StyleTarget out;
    auto ib = b.begin();
    for (auto ia = a.begin(); ia != a.end(); ++ia, ++ib) {
        if (ia->first != ib->first) throw InvalidArgument("style_target_average: layer sets differ");
        if (ia->second.size != ib->second.size)
            throw InvalidArgument("style_target_average: Gram shapes differ at " + ia->first);
        GramMatrix g;
        g.size = ia->second.size;
        g.values.resize(ia->second.values.size());
        for (std::size_t i = 0; i < g.values.size(); ++i)
            g.values[i] = 0.5 * (ia->second.values[i] + ib->second.values[i]);
        out[ia->first] = std::move(g);
    }
    return out;
}

LossConfig LossConfig::defaults_for(const ConvNet& net) {
    LossConfig cfg;
    cfg.content_layers = net.last_convs_per_block();
    cfg.style_layers = net.first_convs_per_block();
    cfg.content_weights.assign(cfg.content_layers.size(), 1.0);
    cfg.style_weights.assign(cfg.style_layers.size(), 1e3);
    return cfg;
}

void LossConfig::validate() const {
    if (content_layers.size() != content_weights.size() ||
        style_layers.size() != style_weights.size())
        throw InvalidArgument("LossConfig: weight lists must parallel the layer lists");
    double positive = 0.0;
    for (double v : content_weights) {
        if (v < 0.0) throw InvalidArgument("LossConfig: negative content weight");
        positive += v;
    }
    for (double w : style_weights) {
        if (w < 0.0) throw InvalidArgument("LossConfig: negative style weight");
        positive += w;
    }
    if (positive <= 0.0) throw InvalidArgument("LossConfig: all weights are zero");
}

LossBreakdown loss_and_grad(const ConvNet& net, const Image& img,
                            const FeatureMaps& content_targets, const StyleTarget& style_target,
                            const LossConfig& cfg, std::vector<double>* grad_out) {
    cfg.validate();
    const FeatureMaps maps = forward(net, img);

    // Layer index by name for gradient injection.
    auto layer_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < maps.entries.size(); ++i)
            if (maps.entries[i].name == name) return static_cast<int>(i);
        throw InvalidArgument("loss_and_grad: unknown layer " + name);
    };

    LossBreakdown out;
    std::vector<std::vector<double>> layer_grads(maps.entries.size());

    for (std::size_t k = 0; k < cfg.content_layers.size(); ++k) {
        const std::string& name = cfg.content_layers[k];
        const double v_l = cfg.content_weights[k];
        const int li = layer_index(name);
        const auto& f = maps.entries[li];
        const auto& p = content_targets.by_name(name);
        if (p.channels != f.channels || p.width != f.width || p.height != f.height)
            throw InvalidArgument("loss_and_grad: content target shape mismatch at " + name);

        const double n = static_cast<double>(f.channels);
        const double m = static_cast<double>(f.pixels());
        double ssd = 0.0;
        if (grad_out) {
            auto& g = layer_grads[li];
            if (g.empty()) g.assign(f.values.size(), 0.0);
            const double scale = v_l / (n * m);
            for (std::size_t i = 0; i < f.values.size(); ++i) {
                const double d = f.values[i] - p.values[i];
                ssd += d * d;
                g[i] += scale * d;
            }
        } else {
            for (std::size_t i = 0; i < f.values.size(); ++i) {
                const double d = f.values[i] - p.values[i];
                ssd += d * d;
            }
        }
        const double c_l = ssd / (2.0 * n * m);
        out.per_layer[name] += v_l * c_l;
        out.content += v_l * c_l;
    }

    for (std::size_t k = 0; k < cfg.style_layers.size(); ++k) {
        const std::string& name = cfg.style_layers[k];
        const double w_l = cfg.style_weights[k];
        const int li = layer_index(name);
        const auto& f = maps.entries[li];
        auto it = style_target.find(name);
        if (it == style_target.end())
            throw InvalidArgument("loss_and_grad: style target missing layer " + name);
        const GramMatrix& a = it->second;
        if (a.size != f.channels)
            throw InvalidArgument("loss_and_grad: style target shape mismatch at " + name);

        const GramMatrix g = gram(maps, name);
        const int n = f.channels;
        const double nd = static_cast<double>(n);
        const double md = static_cast<double>(f.pixels());
        double ssd = 0.0;
        std::vector<double> diff(g.values.size());
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            diff[i] = g.values[i] - a.values[i];
            ssd += diff[i] * diff[i];
        }
        const double s_l = ssd / (4.0 * nd * nd * md * md);
        out.per_layer[name] += w_l * s_l;
        out.style += w_l * s_l;

        if (grad_out) {
            // dS/dF = 1/(N^2 M^2) (G - A) F, times w_l.
            auto& lg = layer_grads[li];
            if (lg.empty()) lg.assign(f.values.size(), 0.0);
            const double scale = w_l / (nd * nd * md * md);
            const std::size_t m = f.pixels();
            for (int i = 0; i < n; ++i) {
                double* gi = lg.data() + static_cast<std::size_t>(i) * m;
                for (int j = 0; j < n; ++j) {
                    const double dij = diff[static_cast<std::size_t>(i) * n + j] * scale;
                    if (dij == 0.0) continue;
                    const double* fj = f.values.data() + static_cast<std::size_t>(j) * m;
                    for (std::size_t p = 0; p < m; ++p) gi[p] += dij * fj[p];
                }
            }
        }
    }

    out.total = out.content + out.style;
    if (grad_out) *grad_out = backward_to_input(net, maps, layer_grads);
    return out;
}

}  // namespace morphforge::styletransfer
