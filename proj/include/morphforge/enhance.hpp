#pragma once

#include "morphforge/lbfgsb.hpp"
#include "morphforge/styleloss.hpp"

namespace morphforge::styletransfer {

struct EnhanceTraceRow {
    int iter = 0;
    double total = 0.0;
    double content = 0.0;
    double style = 0.0;
};

struct EnhanceResult {
    Image image;
    std::vector<EnhanceTraceRow> trace;  // one row per accepted iterate, row 0 = start
    StopReason reason = StopReason::MaxIters;
};

// The morph improvement step: content target from the blended crop, style
// target as the average style of the two originals, minimized from the
// blended crop under per-sample [0,1] box constraints.
EnhanceResult enhance_morph(const Image& blended, const Image& orig_a, const Image& orig_b,
                            const ConvNet& net, const LossConfig& loss_cfg,
                            const OptimizerConfig& opt_cfg);

}  // namespace morphforge::styletransfer
