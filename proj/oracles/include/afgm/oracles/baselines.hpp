#pragma once

#include <cstddef>
#include <vector>

namespace afgm::oracles {

/// Every horizon step repeats the last input row. input: T x D, returns H x D.
std::vector<double> repeat_last(const std::vector<double>& input, std::size_t T, std::size_t D, std::size_t H);

/// Step h copies input row T - period + (h mod period).
std::vector<double> seasonal_naive(const std::vector<double>& input, std::size_t T, std::size_t D, std::size_t H,
                                   std::size_t period);

struct ErrorPair {
    double mse = 0.0;
    double mae = 0.0;
};

ErrorPair mse_mae(const std::vector<double>& pred, const std::vector<double>& target);

}  // namespace afgm::oracles
