#include "afgm/oracles/opcount.hpp"

#include <stdexcept>

namespace afgm::oracles {

// Per scan step (one patch row), counting every multiply, add and
// transcendental evaluation once:
//   trig          3V             omega*m, cos, sin
//   gates         2V^2 + 3SV + S + V
//                                M_time (two V x V products), M_fre (two S x V),
//                                outer product, sigmoids
//   state update  7SV            B = W_B u, then A (.) f + outer(B, .) for re and im
//   output        4S^2V + 13SV   C E, D_y y, W_g_amp E, W_g_y y; amplitude,
//                                outer terms, sums, gate sigmoid, z reduction
// Once per channel:
//   adapter       MV + 2V*Vh + Vh + 2V
OpCountModel OpCountModel::of(std::size_t M, std::size_t S, std::size_t V, std::size_t adapter_hidden) {
    OpCountModel c;
    c.M = M;
    c.S = S;
    c.V = V;
    c.adapter_hidden = adapter_hidden;
    const double m = static_cast<double>(M);
    const double s = static_cast<double>(S);
    const double v = static_cast<double>(V);
    const double vh = static_cast<double>(adapter_hidden);
    c.trig = m * 3.0 * v;
    c.gates = m * (2.0 * v * v + 3.0 * s * v + s + v);
    c.state_update = m * 7.0 * s * v;
    c.output = m * (4.0 * s * s * v + 13.0 * s * v);
    c.adapter = m * v + 2.0 * v * vh + vh + 2.0 * v;
    return c;
}

double OpCountModel::dominant() const {
    return 4.0 * static_cast<double>(M) * static_cast<double>(S) * static_cast<double>(S) * static_cast<double>(V);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line: need at least two paired samples");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

}  // namespace afgm::oracles
