#pragma once

#include <cstddef>
#include <vector>

#include "afgm/graph.hpp"

namespace afgm {

/// Which spectral features of the frequency state feed the output and gate.
enum class Spectral { amp_only, amp_phase, phase_only };

/// dynamic: omega = omega_base + adapter(mean of U_d); fixed: omega = omega_base + learned constant.
enum class OmegaMode { dynamic, fixed };

/// omega_base[k] = 2*pi*k / V.
Tensor omega_base(std::size_t V);

/// Default adapter bottleneck width max(V/4, 4).
std::size_t default_adapter_hidden(std::size_t V);

struct AdapterVars {
    Var w1;  // [V,Vh]
    Var b1;  // [Vh]
    Var w2;  // [Vh,V]
    Var b2;  // [V]
};

struct FreqBasis {
    Var omega_base;
    Var delta_omega;
    Var omega;
};

/// Mean-pools U_d over patches and adds the adapter's offset to omega_base.
FreqBasis adapt_frequency(Var u_d, const AdapterVars& adapter);

/// omega_base + a learned vector that does not depend on the input.
FreqBasis fixed_frequency(Graph& g, Var delta_omega);

struct ScanVars {
    Var w_b;      // [S,V]
    Var c;        // [S,S]
    Var d_u;      // [S]
    Var d_y;      // [S,S]
    Var w_g_amp;  // [S,S]
    Var w_g_u;    // [S]
    Var w_g_y;    // [S,S]
    Var m_time_u; // [V,V]
    Var m_time_z; // [V,V]
    Var m_fre_u;  // [S,V]
    Var m_fre_z;  // [S,V]
    Var c_p;      // [S,S], phase variants only
};

/// Carried state of the frequency-gated recurrence. Zero-initialized.
struct TimeFreqState {
    Var f_re;    // [S,V]
    Var f_im;    // [S,V]
    Var y_prev;  // [S,V]
    Var z_prev;  // [V]

    static TimeFreqState zeros(Graph& g, std::size_t S, std::size_t V);
};

/// Optional per-step capture of A_m and the spectral features.
struct ScanTrace {
    Tensor omega;                  // [V]
    Tensor delta_omega;            // [V]
    std::vector<Tensor> forget;    // A_m, [S,V] per step
    std::vector<Tensor> amplitude; // E_amp, [S,V] per step
    std::vector<Tensor> phase;     // only for phase variants
    std::vector<Tensor> time_gate; // A_time, [V]
    std::vector<Tensor> freq_gate; // A_fre, [S]
    std::vector<Tensor> out_gate;  // g_m, [S,V]
};

struct StepResult {
    Var y;
    Var z;
    TimeFreqState next;
};

/// sqrt(f_re^2 + f_im^2 + eps).
Var compute_amplitude(Var f_re, Var f_im);

/// arctan(f_im / f_re') with a sign-preserving eps on f_re, in [-pi/2, pi/2].
Var compute_phase(Var f_re, Var f_im);

/// One recurrence step; m is the 1-based patch index.
StepResult scan_step(Var u_m, std::size_t m, Var omega, const TimeFreqState& state, const ScanVars& params,
                     Spectral spectral = Spectral::amp_only, ScanTrace* trace = nullptr);

/// Runs the recurrence over all M rows of U_d from zero state and stacks z_m: [M,V].
Var scan_channel(Var u_d, Var omega, const ScanVars& params, Spectral spectral = Spectral::amp_only,
                 ScanTrace* trace = nullptr);

/// Time-only gated recurrence used by the plain-SSM ablation.
struct PlainSsmVars {
    Var w_b;      // [V,V]
    Var c;        // [V,V]
    Var d_u;      // [V]
    Var m_time_u; // [V,V]
    Var m_time_z; // [V,V]
};

/// h_m = A_time (.) h_{m-1} + W_B u_m, y_m = C h_m + D_u (.) u_m, z_m = y_m.
Var plain_ssm_channel(Var u_d, const PlainSsmVars& params);

}  // namespace afgm
