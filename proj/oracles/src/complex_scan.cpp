#include "afgm/oracles/complex_scan.hpp"

#include <cmath>
#include <numbers>

namespace afgm::oracles {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<double> adapter_frequencies(const std::vector<double>& u_rows, std::size_t M, const RawAdapter& a) {
    const std::size_t V = a.V;
    std::vector<double> pooled(V, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t v = 0; v < V; ++v) {
            pooled[v] += u_rows[m * V + v];
        }
    }
    for (auto& p : pooled) {
        p /= static_cast<double>(M);
    }
    std::vector<double> hidden(a.hidden, 0.0);
    for (std::size_t h = 0; h < a.hidden; ++h) {
        double acc = a.b1[h];
        for (std::size_t v = 0; v < V; ++v) {
            acc += pooled[v] * a.w1[v * a.hidden + h];
        }
        hidden[h] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> omega(V);
    for (std::size_t v = 0; v < V; ++v) {
        double delta = a.b2[v];
        for (std::size_t h = 0; h < a.hidden; ++h) {
            delta += hidden[h] * a.w2[h * V + v];
        }
        omega[v] = 2.0 * std::numbers::pi * static_cast<double>(v) / static_cast<double>(V) + delta;
    }
    return omega;
}

ComplexScanTrace complex_scan(const std::vector<double>& u_rows, std::size_t M, const RawScanParams& p,
                              const std::vector<double>& omega, double eps) {
    const std::size_t S = p.S;
    const std::size_t V = p.V;
    ComplexScanTrace trace;
    std::vector<Complex> f(S * V);
    std::vector<double> y_prev(S * V, 0.0);
    std::vector<double> z_prev(V, 0.0);

    for (std::size_t m = 1; m <= M; ++m) {
        const double* u = &u_rows[(m - 1) * V];

        std::vector<double> a_time(V);
        for (std::size_t v = 0; v < V; ++v) {
            double acc = 0.0;
            for (std::size_t k = 0; k < V; ++k) {
                acc += p.m_time_u[v * V + k] * u[k] + p.m_time_z[v * V + k] * z_prev[k];
            }
            a_time[v] = logistic(acc);
        }
        std::vector<double> a_fre(S);
        std::vector<double> b(S);
        for (std::size_t s = 0; s < S; ++s) {
            double acc = 0.0;
            double bs = 0.0;
            for (std::size_t k = 0; k < V; ++k) {
                acc += p.m_fre_u[s * V + k] * u[k] + p.m_fre_z[s * V + k] * z_prev[k];
                bs += p.w_b[s * V + k] * u[k];
            }
            a_fre[s] = logistic(acc);
            b[s] = bs;
        }

        // f_m = A_m (.) f_{m-1} + B_m e^{j omega m}
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t v = 0; v < V; ++v) {
                const double a = a_fre[s] * a_time[v];
                f[s * V + v] = a * f[s * V + v] + b[s] * expj(omega[v] * static_cast<double>(m));
            }
        }

        std::vector<double> amp(S * V);
        for (std::size_t i = 0; i < S * V; ++i) {
            amp[i] = std::sqrt(f[i].re * f[i].re + f[i].im * f[i].im + eps);
        }

        std::vector<double> y(S * V);
        std::vector<double> z(V, 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t v = 0; v < V; ++v) {
                double out = p.d_u[s] * u[v];
                double gate = p.w_g_u[s] * u[v];
                for (std::size_t r = 0; r < S; ++r) {
                    out += p.c[s * S + r] * amp[r * V + v] + p.d_y[s * S + r] * y_prev[r * V + v];
                    gate += p.w_g_amp[s * S + r] * amp[r * V + v] + p.w_g_y[s * S + r] * y_prev[r * V + v];
                }
                y[s * V + v] = out;
                z[v] += logistic(gate) * out;
            }
        }

        trace.states.push_back(ComplexState{S, V, f});
        trace.z.push_back(z);
        y_prev = std::move(y);
        z_prev = std::move(z);
    }
    return trace;
}

}  // namespace afgm::oracles
