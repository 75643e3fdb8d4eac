#include "afgm/oracles/reference_model.hpp"

#include <cmath>

namespace afgm::oracles {

std::vector<double> reference_forward(const RawModel& mdl, const std::vector<double>& x) {
    const std::size_t T = mdl.T;
    const std::size_t D = mdl.D;
    const std::size_t V = mdl.V;
    const std::size_t H = mdl.H;

    std::vector<double> xn(T * D);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            xn[t * D + d] = (x[t * D + d] - mdl.mean[d]) / mdl.stdev[d];
        }
    }

    // interaction blend
    const double alpha = 1.0 / (1.0 + std::exp(-mdl.alpha_raw));
    const long half = static_cast<long>(mdl.kernel / 2);
    std::vector<double> blended(T * D);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            double conv = 0.0;
            for (std::size_t j = 0; j < mdl.kernel; ++j) {
                long src = static_cast<long>(t) + static_cast<long>(j) - half;
                src = src < 0 ? 0 : (src >= static_cast<long>(T) ? static_cast<long>(T) - 1 : src);
                for (std::size_t e = 0; e < D; ++e) {
                    conv += mdl.conv_kernel[(j * D + e) * D + d] * xn[static_cast<std::size_t>(src) * D + e];
                }
            }
            blended[t * D + d] = alpha * conv + (1.0 - alpha) * xn[t * D + d];
        }
    }

    // multiscale patches, U[d][m][v]
    std::size_t M = 0;
    for (auto P : mdl.patch_lengths) {
        M += (T + P - 1) / P;
    }
    std::vector<std::vector<double>> U(D, std::vector<double>(M * V, 0.0));
    std::size_t offset = 0;
    for (std::size_t i = 0; i < mdl.patch_lengths.size(); ++i) {
        const std::size_t P = mdl.patch_lengths[i];
        const std::size_t Q = (T + P - 1) / P;
        const std::size_t pad = Q * P - T;
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t q = 0; q < Q; ++q) {
                for (std::size_t v = 0; v < V; ++v) {
                    double acc = mdl.proj_b[i][v];
                    for (std::size_t p = 0; p < P; ++p) {
                        const std::size_t row = q * P + p;
                        const std::size_t src = row < pad ? 0 : row - pad;
                        acc += blended[src * D + d] * mdl.proj_w[i][p * V + v];
                    }
                    U[d][(offset + q) * V + v] = acc;
                }
            }
        }
        offset += Q;
    }

    for (const auto& block : mdl.blocks) {
        for (std::size_t d = 0; d < D; ++d) {
            const auto omega = adapter_frequencies(U[d], M, block.adapter);
            const auto trace = complex_scan(U[d], M, block.scan, omega);
            for (std::size_t m = 0; m < M; ++m) {
                for (std::size_t v = 0; v < V; ++v) {
                    U[d][m * V + v] += trace.z[m][v];
                }
            }
        }
    }

    std::vector<double> out(H * D);
    for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t h = 0; h < H; ++h) {
            double acc = mdl.head_b[h];
            for (std::size_t i = 0; i < M * V; ++i) {
                acc += U[d][i] * mdl.head_w[i * H + h];
            }
            out[h * D + d] = acc * mdl.stdev[d] + mdl.mean[d];
        }
    }
    return out;
}

}  // namespace afgm::oracles
