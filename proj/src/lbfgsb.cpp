#include "morphforge/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace morphforge::styletransfer {

namespace {

constexpr double kArmijoC1 = 1e-4;
constexpr double kCurvatureMin = 1e-10;
constexpr double kMinStep = 1e-20;
constexpr int kMaxBacktracks = 60;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

OptimizeResult lbfgsb_minimize(
    const Objective& objective, std::vector<double> x0, const OptimizerConfig& cfg,
    const std::function<void(int, const std::vector<double>&, double)>& on_accept) {
    const std::size_t n = x0.size();
    if (cfg.memory < 1) throw InvalidArgument("lbfgsb: memory must be >= 1");
    if (!cfg.lower.empty() && cfg.lower.size() != n)
        throw InvalidArgument("lbfgsb: lower bound size mismatch");
    if (!cfg.upper.empty() && cfg.upper.size() != n)
        throw InvalidArgument("lbfgsb: upper bound size mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (!cfg.lower.empty() && !cfg.upper.empty() && cfg.lower[i] > cfg.upper[i])
            throw InvalidArgument("lbfgsb: lower bound exceeds upper bound");

    auto project = [&](std::vector<double>& v) {
        if (!cfg.lower.empty())
            for (std::size_t i = 0; i < n; ++i) v[i] = std::max(v[i], cfg.lower[i]);
        if (!cfg.upper.empty())
            for (std::size_t i = 0; i < n; ++i) v[i] = std::min(v[i], cfg.upper[i]);
    };

    OptimizeResult res;
    res.x = std::move(x0);
    {
        std::vector<double> clamped = res.x;
        project(clamped);
        if (clamped != res.x) {
            res.clamped_start = true;
            res.x = std::move(clamped);
        }
    }

    std::vector<double> g(n);
    double f = objective(res.x, g);
    if (!std::isfinite(f) || !all_finite(g))
        throw Error("lbfgsb: objective returned a non-finite value or gradient at the start");
    res.trace.push_back(f);
    if (on_accept) on_accept(0, res.x, f);

    auto projected_grad_norm = [&]() {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double step = res.x[i] - g[i];
            if (!cfg.lower.empty()) step = std::max(step, cfg.lower[i]);
            if (!cfg.upper.empty()) step = std::min(step, cfg.upper[i]);
            norm = std::max(norm, std::abs(step - res.x[i]));
        }
        return norm;
    };

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> pairs;

    std::vector<double> d(n), x_next(n), g_next(n), alpha_buf;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        if (projected_grad_norm() <= cfg.grad_tol) {
            res.reason = StopReason::GradTol;
            return res;
        }

        // Two-loop recursion: d = -H g.
        d.assign(g.begin(), g.end());
        alpha_buf.assign(pairs.size(), 0.0);
        for (int k = static_cast<int>(pairs.size()) - 1; k >= 0; --k) {
            const Pair& p = pairs[k];
            alpha_buf[k] = p.rho * dot(p.s, d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha_buf[k] * p.y[i];
        }
        if (!pairs.empty()) {
            const Pair& last = pairs.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (auto& v : d) v *= gamma;
        }
        for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
            const Pair& p = pairs[k];
            const double beta = p.rho * dot(p.y, d);
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha_buf[k] - beta) * p.s[i];
        }
        for (auto& v : d) v = -v;
        if (dot(g, d) >= 0.0)
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];

        // Armijo backtracking along the projection arc: the sufficient
        // decrease is measured against g'(x+ - x), which accounts for the
        // clipped part of the step.
        double step = 1.0;
        double f_next = f;
        bool accepted = false;
        for (int bt = 0; bt < kMaxBacktracks && step >= kMinStep; ++bt, step *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) x_next[i] = res.x[i] + step * d[i];
            project(x_next);
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_next[i] - res.x[i]);
            if (decrease >= 0.0) continue;  // projection removed all descent
            f_next = objective(x_next, g_next);
            if (std::isfinite(f_next) && all_finite(g_next) &&
                f_next <= f + kArmijoC1 * decrease) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.reason = StopReason::LineSearchFailed;
            return res;
        }

        Pair p;
        p.s.resize(n);
        p.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            p.s[i] = x_next[i] - res.x[i];
            p.y[i] = g_next[i] - g[i];
        }
        const double sy = dot(p.s, p.y);
        if (sy > kCurvatureMin) {
            p.rho = 1.0 / sy;
            pairs.push_back(std::move(p));
            if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
        }

        const double drop = f - f_next;
        res.x = x_next;
        g = g_next;
        f = f_next;
        res.trace.push_back(f);
        res.iterations = iter;
        if (on_accept) on_accept(iter, res.x, f);

        if (drop <= cfg.loss_rel_tol * std::max({std::abs(f), std::abs(f + drop), 1.0})) {
            res.reason = StopReason::LossRelTol;
            return res;
        }
    }
    res.reason = StopReason::MaxIters;
    return res;
}

}  // namespace morphforge::styletransfer
