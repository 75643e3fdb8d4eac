#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "afgm/graph.hpp"
#include "afgm/ops.hpp"
#include "afgm/oracles/finite_difference.hpp"
#include "afgm/rng.hpp"

namespace afgm::testing {

using GraphFn = std::function<Var(Graph&, const std::vector<Var>&)>;

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0;
    double den = 1e-300;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max({den, std::abs(a[i]), std::abs(b[i])});
    }
    return num / den;
}

/// Largest elementwise relative error (|a - f| / max(|a|, |f|, floor)) between
/// backward adjoints and central differences, over every input.
inline double max_grad_error(const GraphFn& fn, const std::vector<Tensor>& inputs, double h = 1e-5,
                             double floor = 1e-6) {
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : inputs) {
        vars.push_back(g.parameter(t));
    }
    g.backward(fn(g, vars));

    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::vector<double> x(inputs[i].data().begin(), inputs[i].data().end());
        auto scalar = [&](const std::vector<double>& probe) {
            Graph gi(Graph::Mode::inference);
            std::vector<Var> vs;
            for (std::size_t j = 0; j < inputs.size(); ++j) {
                vs.push_back(gi.constant(j == i ? Tensor(inputs[i].shape(), probe) : inputs[j]));
            }
            return fn(gi, vs).value().item();
        };
        const auto fd = oracles::fd_gradient(scalar, x, h);
        const auto analytic = g.grad(vars[i]).data();
        for (std::size_t k = 0; k < fd.size(); ++k) {
            const double scale = std::max({std::abs(fd[k]), std::abs(analytic[k]), floor});
            worst = std::max(worst, std::abs(fd[k] - analytic[k]) / scale);
        }
    }
    return worst;
}

/// Weighted sum with fixed random weights so every output element matters.
inline Var probe_loss(Graph& g, Var out, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return sum_all(mul(out, g.constant(rng.uniform_tensor(out.shape(), -1.0, 1.0))));
}

}  // namespace afgm::testing
