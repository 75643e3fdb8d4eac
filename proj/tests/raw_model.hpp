#pragma once

#include <string>
#include <vector>

#include "afgm/model.hpp"
#include "afgm/rng.hpp"
#include "afgm/oracles/reference_model.hpp"

namespace afgm::testing {

inline std::vector<double> flat(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline oracles::RawScanParams raw_scan(const ParamSet& ps, const std::string& pre, std::size_t S, std::size_t V) {
    oracles::RawScanParams r;
    r.S = S;
    r.V = V;
    r.w_b = flat(ps.at(pre + "scan.w_b"));
    r.c = flat(ps.at(pre + "scan.c"));
    r.d_u = flat(ps.at(pre + "scan.d_u"));
    r.d_y = flat(ps.at(pre + "scan.d_y"));
    r.w_g_amp = flat(ps.at(pre + "scan.w_g_amp"));
    r.w_g_u = flat(ps.at(pre + "scan.w_g_u"));
    r.w_g_y = flat(ps.at(pre + "scan.w_g_y"));
    r.m_time_u = flat(ps.at(pre + "scan.m_time_u"));
    r.m_time_z = flat(ps.at(pre + "scan.m_time_z"));
    r.m_fre_u = flat(ps.at(pre + "scan.m_fre_u"));
    r.m_fre_z = flat(ps.at(pre + "scan.m_fre_z"));
    return r;
}

inline oracles::RawAdapter raw_adapter(const ParamSet& ps, const std::string& pre, std::size_t V, std::size_t Vh) {
    oracles::RawAdapter a;
    a.V = V;
    a.hidden = Vh;
    a.w1 = flat(ps.at(pre + "adapter.w1"));
    a.b1 = flat(ps.at(pre + "adapter.b1"));
    a.w2 = flat(ps.at(pre + "adapter.w2"));
    a.b2 = flat(ps.at(pre + "adapter.b2"));
    return a;
}

/// Flat-array copy of a default-variant model for the straight-line oracle.
inline oracles::RawModel to_raw(const Model& m) {
    const auto& cfg = m.config();
    const auto& ps = m.params();
    oracles::RawModel r;
    r.T = cfg.T;
    r.H = cfg.H;
    r.D = cfg.D;
    r.V = cfg.V;
    r.kernel = cfg.conv_kernel;
    r.patch_lengths = cfg.patch_lengths;
    r.conv_kernel = flat(ps.at("encoder.conv_kernel"));
    r.alpha_raw = ps.at("encoder.alpha_raw").item();
    for (std::size_t i = 0; i < cfg.patch_lengths.size(); ++i) {
        r.proj_w.push_back(flat(ps.at("encoder.proj_w." + std::to_string(i))));
        r.proj_b.push_back(flat(ps.at("encoder.proj_b." + std::to_string(i))));
    }
    for (std::size_t b = 0; b < cfg.F_n; ++b) {
        const std::string pre = "block" + std::to_string(b) + ".";
        r.blocks.push_back({raw_adapter(ps, pre, cfg.V, cfg.adapter_width()), raw_scan(ps, pre, cfg.S, cfg.V)});
    }
    r.head_w = flat(ps.at("head.w"));
    r.head_b = flat(ps.at("head.b"));
    r.mean = flat(ps.at("norm.mean"));
    r.stdev = flat(ps.at("norm.std"));
    return r;
}

/// The small configuration used by gradient and oracle checks.
inline ModelConfig toy_config() {
    ModelConfig c;
    c.T = 24;
    c.H = 6;
    c.D = 2;
    c.V = 4;
    c.S = 4;
    c.F_n = 1;
    c.patch_lengths = {12};
    return c;
}

/// Overwrites every parameter with seeded uniform noise so no path is trivially zero.
inline void randomize(Model& m, std::uint64_t seed, double bound = 0.5) {
    SplitMix64 rng(seed);
    for (auto& e : m.params().entries()) {
        if (e.role == Role::parameter) {
            e.value = rng.uniform_tensor(e.value.shape(), -bound, bound);
        }
    }
}

}  // namespace afgm::testing
