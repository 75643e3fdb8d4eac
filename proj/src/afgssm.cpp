#include "afgm/afgssm.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "afgm/errors.hpp"
#include "afgm/ops.hpp"

namespace afgm {

Tensor omega_base(std::size_t V) {
    Tensor w(Shape{V});
    for (std::size_t k = 0; k < V; ++k) {
        w[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(V);
    }
    return w;
}

std::size_t default_adapter_hidden(std::size_t V) { return std::max<std::size_t>(V / 4, 4); }

FreqBasis adapt_frequency(Var u_d, const AdapterVars& adapter) {
    const Shape& s = u_d.shape();
    if (s.size() != 2) {
        throw DimensionError("adapt_frequency: U_d must be [M,V], got " + to_string(s));
    }
    Graph& g = *u_d.graph;
    const std::size_t M = s[0];
    Var pooled = scale(reduce_sum(u_d, 0), 1.0 / static_cast<double>(M));
    Var hidden = relu(add(matmul(pooled, adapter.w1), adapter.b1));
    Var delta = add(matmul(hidden, adapter.w2), adapter.b2);
    Var base = g.constant(omega_base(s[1]));
    return FreqBasis{base, delta, add(base, delta)};
}

FreqBasis fixed_frequency(Graph& g, Var delta_omega) {
    Var base = g.constant(omega_base(delta_omega.shape().at(0)));
    return FreqBasis{base, delta_omega, add(base, delta_omega)};
}

TimeFreqState TimeFreqState::zeros(Graph& g, std::size_t S, std::size_t V) {
    return TimeFreqState{g.constant(Tensor(Shape{S, V})), g.constant(Tensor(Shape{S, V})),
                         g.constant(Tensor(Shape{S, V})), g.constant(Tensor(Shape{V}))};
}

Var compute_amplitude(Var f_re, Var f_im) { return sqrt_guarded(add(square(f_re), square(f_im))); }

Var compute_phase(Var f_re, Var f_im) { return ratio_arctan(f_im, f_re); }

namespace {

void check_state(const TimeFreqState& st, std::size_t S, std::size_t V) {
    const Shape sv{S, V};
    if (st.f_re.shape() != sv || st.f_im.shape() != sv || st.y_prev.shape() != sv || st.z_prev.shape() != Shape{V}) {
        throw DimensionError("scan_step: state shapes " + to_string(st.f_re.shape()) + ", " +
                             to_string(st.z_prev.shape()) + " do not match S=" + std::to_string(S) +
                             ", V=" + std::to_string(V));
    }
}

}  // namespace

StepResult scan_step(Var u_m, std::size_t m, Var omega, const TimeFreqState& state, const ScanVars& p,
                     Spectral spectral, ScanTrace* trace) {
    const std::size_t S = p.w_b.shape().at(0);
    const std::size_t V = u_m.shape().at(0);
    check_state(state, S, V);

    Var a_time = sigmoid(add(matmul(p.m_time_u, u_m), matmul(p.m_time_z, state.z_prev)));
    Var a_fre = sigmoid(add(matmul(p.m_fre_u, u_m), matmul(p.m_fre_z, state.z_prev)));
    Var a = outer(a_fre, a_time);
    Var b = matmul(p.w_b, u_m);

    Var angle = scale(omega, static_cast<double>(m));
    Var f_re = add(mul(a, state.f_re), outer(b, cos(angle)));
    Var f_im = add(mul(a, state.f_im), outer(b, sin(angle)));

    Var amp;
    Var phase;
    if (spectral != Spectral::phase_only) {
        amp = compute_amplitude(f_re, f_im);
    }
    if (spectral != Spectral::amp_only) {
        phase = compute_phase(f_re, f_im);
    }

    Var carried = add(outer(p.d_u, u_m), matmul(p.d_y, state.y_prev));
    Var y;
    switch (spectral) {
        case Spectral::amp_only: y = add(matmul(p.c, amp), carried); break;
        case Spectral::amp_phase: y = add(add(matmul(p.c, amp), matmul(p.c_p, phase)), carried); break;
        case Spectral::phase_only: y = add(matmul(p.c_p, phase), carried); break;
    }
    // the phase-only variant gates on the phase in place of the amplitude
    Var gate_feature = spectral == Spectral::phase_only ? phase : amp;
    Var g = sigmoid(
        add(add(matmul(p.w_g_amp, gate_feature), outer(p.w_g_u, u_m)), matmul(p.w_g_y, state.y_prev)));
    Var z = reduce_sum(mul(g, y), 0);

    if (trace != nullptr) {
        trace->forget.push_back(a.value());
        trace->time_gate.push_back(a_time.value());
        trace->freq_gate.push_back(a_fre.value());
        trace->out_gate.push_back(g.value());
        if (amp.valid()) {
            trace->amplitude.push_back(amp.value());
        }
        if (phase.valid()) {
            trace->phase.push_back(phase.value());
        }
    }
    return StepResult{y, z, TimeFreqState{f_re, f_im, y, z}};
}

Var scan_channel(Var u_d, Var omega, const ScanVars& params, Spectral spectral, ScanTrace* trace) {
    const Shape& s = u_d.shape();
    if (s.size() != 2 || s[0] == 0) {
        throw DimensionError("scan_channel: U_d must be [M,V] with M >= 1, got " + to_string(s));
    }
    Graph& g = *u_d.graph;
    const std::size_t M = s[0];
    const std::size_t V = s[1];
    const std::size_t S = params.w_b.shape().at(0);
    if (trace != nullptr) {
        trace->omega = omega.value();
    }
    TimeFreqState state = TimeFreqState::zeros(g, S, V);
    std::vector<Var> rows;
    rows.reserve(M);
    for (std::size_t m = 1; m <= M; ++m) {
        StepResult r = scan_step(select(u_d, m - 1), m, omega, state, params, spectral, trace);
        rows.push_back(r.z);
        state = r.next;
    }
    return stack(rows);
}

Var plain_ssm_channel(Var u_d, const PlainSsmVars& p) {
    const Shape& s = u_d.shape();
    if (s.size() != 2 || s[0] == 0) {
        throw DimensionError("plain_ssm_channel: U_d must be [M,V] with M >= 1, got " + to_string(s));
    }
    Graph& g = *u_d.graph;
    const std::size_t V = s[1];
    Var h = g.constant(Tensor(Shape{V}));
    Var z = g.constant(Tensor(Shape{V}));
    std::vector<Var> rows;
    for (std::size_t m = 0; m < s[0]; ++m) {
        Var u = select(u_d, m);
        Var a_time = sigmoid(add(matmul(p.m_time_u, u), matmul(p.m_time_z, z)));
        h = add(mul(a_time, h), matmul(p.w_b, u));
        z = add(matmul(p.c, h), mul(p.d_u, u));
        rows.push_back(z);
    }
    return stack(rows);
}

}  // namespace afgm
