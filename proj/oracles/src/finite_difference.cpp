#include "afgm/oracles/finite_difference.hpp"

namespace afgm::oracles {

double central_difference(const ScalarFunction& f, std::vector<double> x, std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    return (up - down) / (2.0 * h);
}

std::vector<double> fd_gradient(const ScalarFunction& f, const std::vector<double>& x, double h) {
    std::vector<double> grad(x.size());
    std::vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = probe[i];
        probe[i] = x0 + h;
        const double up = f(probe);
        probe[i] = x0 - h;
        const double down = f(probe);
        probe[i] = x0;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace afgm::oracles
