#pragma once

#include <functional>
#include <vector>

#include "morphforge/error.hpp"

namespace morphforge::styletransfer {

struct OptimizerConfig {
    int memory = 10;             // stored (s,y) pair count
    int max_iters = 100;
    double grad_tol = 1e-6;      // infinity norm of the projected gradient
    double loss_rel_tol = 1e-9;  // relative decrease of accepted losses
    std::vector<double> lower;   // per-variable; empty means unbounded
    std::vector<double> upper;
};

enum class StopReason { GradTol, LossRelTol, MaxIters, LineSearchFailed };

struct OptimizeResult {
    std::vector<double> x;
    std::vector<double> trace;  // accepted losses; trace[0] is f at the start
    int iterations = 0;
    bool clamped_start = false;  // x0 was outside the box and got projected
    StopReason reason = StopReason::MaxIters;
};

// Evaluates f(x) and writes its gradient.
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

// Projected L-BFGS: two-loop recursion over the stored pairs, backtracking
// Armijo line search (c1 = 1e-4, halving) along the projection arc, pairs
// with <s,y> <= 1e-10 skipped. Accepted losses never increase.
// `on_accept`, when set, fires once per accepted iterate (after the accepting
// objective evaluation) and once for the starting point with iter = 0.
OptimizeResult lbfgsb_minimize(
    const Objective& objective, std::vector<double> x0, const OptimizerConfig& cfg,
    const std::function<void(int iter, const std::vector<double>& x, double f)>& on_accept = {});

}  // namespace morphforge::styletransfer
