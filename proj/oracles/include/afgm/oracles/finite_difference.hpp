#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace afgm::oracles {

using ScalarFunction = std::function<double(const std::vector<double>&)>;

/// Central difference (f(x + h e_i) - f(x - h e_i)) / 2h for one coordinate.
double central_difference(const ScalarFunction& f, std::vector<double> x, std::size_t i, double h);

/// Central-difference gradient over every coordinate of x.
std::vector<double> fd_gradient(const ScalarFunction& f, const std::vector<double>& x, double h);

}  // namespace afgm::oracles
