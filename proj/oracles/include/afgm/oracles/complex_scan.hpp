#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Reference form of the frequency-gated recurrence, written directly from the
// complex state equation f_m = A_m (.) f_{m-1} + B_m e^{j omega m}. Shares no
// code with the production scan; parameters arrive as flat row-major arrays.

namespace afgm::oracles {

struct Complex {
    double re = 0.0;
    double im = 0.0;
};

inline Complex operator+(Complex a, Complex b) { return {a.re + b.re, a.im + b.im}; }
inline Complex operator*(double s, Complex a) { return {s * a.re, s * a.im}; }
inline Complex expj(double theta) { return {std::cos(theta), std::sin(theta)}; }

struct RawScanParams {
    std::size_t S = 0;
    std::size_t V = 0;
    std::vector<double> w_b;       // S x V
    std::vector<double> c;         // S x S
    std::vector<double> d_u;       // S
    std::vector<double> d_y;       // S x S
    std::vector<double> w_g_amp;   // S x S
    std::vector<double> w_g_u;     // S
    std::vector<double> w_g_y;     // S x S
    std::vector<double> m_time_u;  // V x V
    std::vector<double> m_time_z;  // V x V
    std::vector<double> m_fre_u;   // S x V
    std::vector<double> m_fre_z;   // S x V
};

struct RawAdapter {
    std::size_t V = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // V x hidden
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden x V
    std::vector<double> b2;  // V
};

/// Complex state f in C^{S x V}, row-major.
struct ComplexState {
    std::size_t S = 0;
    std::size_t V = 0;
    std::vector<Complex> f;
};

struct ComplexScanTrace {
    std::vector<ComplexState> states;   // f_1 .. f_M
    std::vector<std::vector<double>> z; // z_1 .. z_M, each V
};

/// omega_base[k] = 2 pi k / V plus adapter(mean over rows of U_d).
std::vector<double> adapter_frequencies(const std::vector<double>& u_rows, std::size_t M, const RawAdapter& adapter);

/// Runs the complex recurrence over M input rows (M x V, row-major) from zero state.
ComplexScanTrace complex_scan(const std::vector<double>& u_rows, std::size_t M, const RawScanParams& params,
                              const std::vector<double>& omega, double eps = 1e-12);

}  // namespace afgm::oracles
