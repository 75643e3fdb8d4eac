#pragma once

#include <cstddef>
#include <vector>

namespace afgm::oracles {

/// Arithmetic-operation counts of one channel's frequency-gated scan, by
/// component. The total is a polynomial in (M, S, V, Vh) whose leading term is
/// 4*M*S^2*V (the four S x S by S x V products per step); the remaining
/// coefficients are listed in opcount.cpp.
struct OpCountModel {
    std::size_t M = 0;
    std::size_t S = 0;
    std::size_t V = 0;
    std::size_t adapter_hidden = 0;

    double adapter = 0.0;
    double trig = 0.0;
    double gates = 0.0;
    double state_update = 0.0;
    double output = 0.0;

    static OpCountModel of(std::size_t M, std::size_t S, std::size_t V, std::size_t adapter_hidden);

    [[nodiscard]] double total() const { return adapter + trig + gates + state_update + output; }
    /// The M*S^2*V part of total().
    [[nodiscard]] double dominant() const;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace afgm::oracles
