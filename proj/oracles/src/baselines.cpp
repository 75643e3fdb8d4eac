#include "afgm/oracles/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace afgm::oracles {

std::vector<double> repeat_last(const std::vector<double>& input, std::size_t T, std::size_t D, std::size_t H) {
    std::vector<double> out(H * D);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t d = 0; d < D; ++d) {
            out[h * D + d] = input[(T - 1) * D + d];
        }
    }
    return out;
}

std::vector<double> seasonal_naive(const std::vector<double>& input, std::size_t T, std::size_t D, std::size_t H,
                                   std::size_t period) {
    if (period == 0 || period > T) {
        throw std::invalid_argument("seasonal_naive: period must be in [1, T]");
    }
    std::vector<double> out(H * D);
    for (std::size_t h = 0; h < H; ++h) {
        const std::size_t src = T - period + (h % period);
        for (std::size_t d = 0; d < D; ++d) {
            out[h * D + d] = input[src * D + d];
        }
    }
    return out;
}

ErrorPair mse_mae(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size() || pred.empty()) {
        throw std::invalid_argument("mse_mae: size mismatch");
    }
    ErrorPair e;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred[i] - target[i];
        e.mse += diff * diff;
        e.mae += std::abs(diff);
    }
    e.mse /= static_cast<double>(pred.size());
    e.mae /= static_cast<double>(pred.size());
    return e;
}

}  // namespace afgm::oracles
