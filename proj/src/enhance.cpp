#include "morphforge/enhance.hpp"

namespace morphforge::styletransfer {

EnhanceResult enhance_morph(const Image& blended, const Image& orig_a, const Image& orig_b,
                            const ConvNet& net, const LossConfig& loss_cfg,
                            const OptimizerConfig& opt_cfg) {
    if (!blended.same_shape(orig_a) || !blended.same_shape(orig_b))
        throw InvalidArgument("enhance_morph: the three crops must share dimensions");
    loss_cfg.validate();

    const FeatureMaps content_targets = forward(net, blended);
    const StyleTarget style_a = style_target_from(forward(net, orig_a), loss_cfg.style_layers);
    const StyleTarget style_b = style_target_from(forward(net, orig_b), loss_cfg.style_layers);
    const StyleTarget style_avg = style_target_average(style_a, style_b);

    OptimizerConfig box = opt_cfg;
    box.lower.assign(blended.data.size(), 0.0);
    box.upper.assign(blended.data.size(), 1.0);

    Image scratch(blended.width, blended.height, blended.channels);
    LossBreakdown last;
    auto objective = [&](const std::vector<double>& x, std::vector<double>& grad) {
        scratch.data = x;
        last = loss_and_grad(net, scratch, content_targets, style_avg, loss_cfg, &grad);
        return last.total;
    };

    EnhanceResult out;
    auto on_accept = [&](int iter, const std::vector<double>&, double f) {
        // `last` still holds the breakdown of the accepting evaluation.
        out.trace.push_back({iter, f, last.content, last.style});
    };

    OptimizeResult opt = lbfgsb_minimize(objective, blended.data, box, on_accept);
    out.image = Image(blended.width, blended.height, blended.channels);
    out.image.data = std::move(opt.x);
    out.reason = opt.reason;
    return out;
}

}  // namespace morphforge::styletransfer
