#include "afgm/model.hpp"

#include <cmath>
#include <string>

#include "afgm/errors.hpp"
#include "afgm/ops.hpp"
#include "afgm/rng.hpp"

namespace afgm {

const char* to_string(EncoderKind k) { return k == EncoderKind::interactive ? "interactive" : "linear"; }
const char* to_string(CoreKind k) { return k == CoreKind::afgssm ? "afgssm" : "plain_ssm"; }
const char* to_string(OmegaMode k) { return k == OmegaMode::dynamic ? "dynamic" : "fixed"; }
const char* to_string(Spectral k) {
    switch (k) {
        case Spectral::amp_only: return "amp_only";
        case Spectral::amp_phase: return "amp_phase";
        case Spectral::phase_only: return "phase_only";
    }
    return "?";
}

EncoderKind parse_encoder(const std::string& s) {
    if (s == "interactive") return EncoderKind::interactive;
    if (s == "linear") return EncoderKind::linear;
    throw ConfigError("encoder must be interactive or linear, got '" + s + "'");
}

CoreKind parse_core(const std::string& s) {
    if (s == "afgssm") return CoreKind::afgssm;
    if (s == "plain_ssm") return CoreKind::plain_ssm;
    throw ConfigError("core must be afgssm or plain_ssm, got '" + s + "'");
}

Spectral parse_spectral(const std::string& s) {
    if (s == "amp_only") return Spectral::amp_only;
    if (s == "amp_phase") return Spectral::amp_phase;
    if (s == "phase_only") return Spectral::phase_only;
    throw ConfigError("spectral must be amp_only, amp_phase or phase_only, got '" + s + "'");
}

OmegaMode parse_omega_mode(const std::string& s) {
    if (s == "dynamic") return OmegaMode::dynamic;
    if (s == "fixed") return OmegaMode::fixed;
    throw ConfigError("omega_mode must be dynamic or fixed, got '" + s + "'");
}

void ModelConfig::validate() const {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) {
            throw ConfigError(msg);
        }
    };
    need(T >= 1 && H >= 1 && D >= 1 && V >= 1, "T, H, D and hidden_dim must all be positive");
    need(S == V, "freq_dim (" + std::to_string(S) + ") must equal hidden_dim (" + std::to_string(V) + ")");
    need(F_n >= 1 && F_n <= 6, "F_n must lie in [1, 6], got " + std::to_string(F_n));
    need(conv_kernel % 2 == 1, "conv_kernel must be odd, got " + std::to_string(conv_kernel));
    if (encoder == EncoderKind::interactive) {
        need(T >= conv_kernel, "T (" + std::to_string(T) + ") must be at least conv_kernel");
    }
    if (core == CoreKind::plain_ssm) {
        need(spectral == Spectral::amp_only, "core=plain_ssm has no spectral features; spectral must stay amp_only");
        need(omega_mode == OmegaMode::dynamic, "core=plain_ssm has no frequency basis; omega_mode must stay dynamic");
    }
    (void)PatchPlan::make(T, patch_lengths);
}

std::size_t ModelConfig::adapter_width() const {
    return adapter_hidden > 0 ? adapter_hidden : default_adapter_hidden(V);
}

ModelConfig with_case(ModelConfig cfg, const std::string& name) {
    cfg.spectral = Spectral::amp_only;
    cfg.omega_mode = OmegaMode::dynamic;
    if (name == "I") {
        cfg.encoder = EncoderKind::interactive;
        cfg.core = CoreKind::afgssm;
    } else if (name == "II") {
        cfg.encoder = EncoderKind::linear;
        cfg.core = CoreKind::afgssm;
    } else if (name == "IV") {
        cfg.encoder = EncoderKind::linear;
        cfg.core = CoreKind::plain_ssm;
    } else if (name == "III") {
        throw ConfigError("case III needs an external frequency-enhanced block that is not implemented");
    } else if (name == "amp_only" || name == "amp_phase" || name == "phase_only") {
        cfg.encoder = EncoderKind::interactive;
        cfg.core = CoreKind::afgssm;
        cfg.spectral = parse_spectral(name);
    } else if (name == "fixed_omega") {
        cfg.encoder = EncoderKind::interactive;
        cfg.core = CoreKind::afgssm;
        cfg.omega_mode = OmegaMode::fixed;
    } else {
        throw ConfigError("unknown ablation case '" + name +
                          "' (expected I, II, IV, amp_only, amp_phase, phase_only, fixed_omega)");
    }
    return cfg;
}

namespace {

std::string block_prefix(std::size_t b) { return "block" + std::to_string(b) + "."; }

// Inventory with the uniform init bound of each tensor (0 = zero init).
struct Slot {
    std::string name;
    Shape shape;
    Role role;
    double bound;
};

std::vector<Slot> slots(const ModelConfig& cfg) {
    const PatchPlan plan = PatchPlan::make(cfg.T, cfg.patch_lengths);
    const std::size_t V = cfg.V;
    const std::size_t S = cfg.S;
    const std::size_t M = plan.M;
    const auto fan = [](std::size_t n) { return std::sqrt(1.0 / static_cast<double>(n)); };
    std::vector<Slot> out;
    if (cfg.encoder == EncoderKind::interactive) {
        out.push_back({"encoder.conv_kernel", {cfg.conv_kernel, cfg.D, cfg.D}, Role::parameter,
                       fan(cfg.conv_kernel * cfg.D)});
        out.push_back({"encoder.alpha_raw", {}, Role::parameter, 0.0});
        for (std::size_t i = 0; i < plan.scales(); ++i) {
            const std::size_t P = plan.patch_lengths[i];
            out.push_back({"encoder.proj_w." + std::to_string(i), {P, V}, Role::parameter, fan(P)});
            out.push_back({"encoder.proj_b." + std::to_string(i), {V}, Role::parameter, 0.0});
        }
    } else {
        out.push_back({"encoder.linear_w", {cfg.T, M * V}, Role::parameter, fan(cfg.T)});
        out.push_back({"encoder.linear_b", {M * V}, Role::parameter, 0.0});
    }
    for (std::size_t b = 0; b < cfg.F_n; ++b) {
        const std::string pre = block_prefix(b);
        if (cfg.core == CoreKind::plain_ssm) {
            out.push_back({pre + "ssm.w_b", {V, V}, Role::parameter, fan(V)});
            out.push_back({pre + "ssm.c", {V, V}, Role::parameter, fan(V)});
            out.push_back({pre + "ssm.d_u", {V}, Role::parameter, 1.0});
            out.push_back({pre + "ssm.m_time_u", {V, V}, Role::parameter, 0.0});
            out.push_back({pre + "ssm.m_time_z", {V, V}, Role::parameter, 0.0});
            continue;
        }
        if (cfg.omega_mode == OmegaMode::dynamic) {
            const std::size_t Vh = cfg.adapter_width();
            out.push_back({pre + "adapter.w1", {V, Vh}, Role::parameter, fan(V)});
            out.push_back({pre + "adapter.b1", {Vh}, Role::parameter, 0.0});
            out.push_back({pre + "adapter.w2", {Vh, V}, Role::parameter, 0.0});
            out.push_back({pre + "adapter.b2", {V}, Role::parameter, 0.0});
        } else {
            out.push_back({pre + "delta_omega", {V}, Role::parameter, 0.0});
        }
        out.push_back({pre + "scan.w_b", {S, V}, Role::parameter, fan(V)});
        out.push_back({pre + "scan.c", {S, S}, Role::parameter, fan(S)});
        out.push_back({pre + "scan.d_u", {S}, Role::parameter, 1.0});
        out.push_back({pre + "scan.d_y", {S, S}, Role::parameter, fan(S)});
        out.push_back({pre + "scan.w_g_amp", {S, S}, Role::parameter, 0.0});
        out.push_back({pre + "scan.w_g_u", {S}, Role::parameter, 0.0});
        out.push_back({pre + "scan.w_g_y", {S, S}, Role::parameter, 0.0});
        out.push_back({pre + "scan.m_time_u", {V, V}, Role::parameter, 0.0});
        out.push_back({pre + "scan.m_time_z", {V, V}, Role::parameter, 0.0});
        out.push_back({pre + "scan.m_fre_u", {S, V}, Role::parameter, 0.0});
        out.push_back({pre + "scan.m_fre_z", {S, V}, Role::parameter, 0.0});
        if (cfg.spectral != Spectral::amp_only) {
            out.push_back({pre + "scan.c_p", {S, S}, Role::parameter, fan(S)});
        }
    }
    out.push_back({"head.w", {M * V, cfg.H}, Role::parameter, fan(M * V)});
    out.push_back({"head.b", {cfg.H}, Role::parameter, 0.0});
    out.push_back({"norm.mean", {cfg.D}, Role::normalization, 0.0});
    out.push_back({"norm.std", {cfg.D}, Role::normalization, 0.0});
    return out;
}

}  // namespace

ParamSet blueprint(const ModelConfig& cfg) {
    cfg.validate();
    ParamSet ps;
    for (auto& s : slots(cfg)) {
        ps.add(s.name, Tensor(s.shape), s.role);
    }
    return ps;
}

Model::Model(ModelConfig cfg, ParamSet params)
    : cfg_(std::move(cfg)), plan_(PatchPlan::make(cfg_.T, cfg_.patch_lengths)) {
    cfg_.validate();
    require_same_inventory(blueprint(cfg_), params, {Role::parameter, Role::normalization});
    // keep blueprint order; optimizer entries stay with the caller
    const ParamSet expected = blueprint(cfg_);
    for (const auto& e : expected.entries()) {
        params_.add(e.name, params.at(e.name), e.role);
    }
    for (double s : params_.at("norm.std").data()) {
        if (!(s > 0.0)) {
            throw ConfigError("normalization std must be positive");
        }
    }
}

Model Model::initialize(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SplitMix64 rng(seed);
    ParamSet ps;
    for (auto& s : slots(cfg)) {
        Tensor t = s.bound > 0.0 ? rng.uniform_tensor(s.shape, -s.bound, s.bound) : Tensor(s.shape);
        if (s.name == "norm.std") {
            t.fill(1.0);
        }
        ps.add(s.name, std::move(t), s.role);
    }
    return Model(cfg, std::move(ps));
}

void Model::set_normalization(const Tensor& mean, const Tensor& stdev) {
    const Shape want{cfg_.D};
    if (mean.shape() != want || stdev.shape() != want) {
        throw DimensionError("normalization stats must be [" + std::to_string(cfg_.D) + "]");
    }
    for (double s : stdev.data()) {
        if (!(s > 0.0)) {
            throw ConfigError("normalization std must be positive");
        }
    }
    params_.at("norm.mean") = mean;
    params_.at("norm.std") = stdev;
}

BoundParams Model::bind(Graph& g) const {
    BoundParams out;
    for (const auto& e : params_.entries()) {
        if (e.role == Role::parameter) {
            out.emplace(e.name, g.parameter(e.value));
        }
    }
    return out;
}

namespace {

Var get(const BoundParams& p, const std::string& name) {
    auto it = p.find(name);
    if (it == p.end()) {
        throw ConfigError("parameter '" + name + "' is not bound");
    }
    return it->second;
}

}  // namespace

Var Model::forward_normalized(Graph& g, const BoundParams& p, Var x, ForwardTrace* trace) const {
    const std::size_t T = cfg_.T, D = cfg_.D, V = cfg_.V, H = cfg_.H, M = plan_.M;
    if (x.shape() != Shape{T, D}) {
        throw DimensionError("forward: input must be [" + std::to_string(T) + "," + std::to_string(D) + "], got " +
                             to_string(x.shape()));
    }

    Var u;
    if (cfg_.encoder == EncoderKind::interactive) {
        EncoderVars enc{get(p, "encoder.conv_kernel"), get(p, "encoder.alpha_raw"), {}, {}};
        for (std::size_t i = 0; i < plan_.scales(); ++i) {
            enc.proj_w.push_back(get(p, "encoder.proj_w." + std::to_string(i)));
            enc.proj_b.push_back(get(p, "encoder.proj_b." + std::to_string(i)));
        }
        u = embed(interaction_encode(x, enc.conv_kernel, enc.alpha_raw), enc, plan_);
    } else {
        Var lin = matmul(transpose(x), get(p, "encoder.linear_w"));
        u = reshape(add(lin, reshape(get(p, "encoder.linear_b"), {1, M * V})), {D, M, V});
    }

    if (trace != nullptr) {
        trace->blocks.assign(cfg_.F_n, std::vector<ScanTrace>(D));
    }
    for (std::size_t b = 0; b < cfg_.F_n; ++b) {
        const std::string pre = block_prefix(b);
        std::vector<Var> channels;
        channels.reserve(D);
        for (std::size_t d = 0; d < D; ++d) {
            Var u_d = select(u, d);
            if (cfg_.core == CoreKind::plain_ssm) {
                PlainSsmVars sv{get(p, pre + "ssm.w_b"), get(p, pre + "ssm.c"), get(p, pre + "ssm.d_u"),
                                get(p, pre + "ssm.m_time_u"), get(p, pre + "ssm.m_time_z")};
                channels.push_back(plain_ssm_channel(u_d, sv));
                continue;
            }
            FreqBasis basis = cfg_.omega_mode == OmegaMode::dynamic
                                  ? adapt_frequency(u_d, AdapterVars{get(p, pre + "adapter.w1"),
                                                                     get(p, pre + "adapter.b1"),
                                                                     get(p, pre + "adapter.w2"),
                                                                     get(p, pre + "adapter.b2")})
                                  : fixed_frequency(g, get(p, pre + "delta_omega"));
            ScanVars sv{get(p, pre + "scan.w_b"),      get(p, pre + "scan.c"),        get(p, pre + "scan.d_u"),
                        get(p, pre + "scan.d_y"),      get(p, pre + "scan.w_g_amp"),  get(p, pre + "scan.w_g_u"),
                        get(p, pre + "scan.w_g_y"),    get(p, pre + "scan.m_time_u"), get(p, pre + "scan.m_time_z"),
                        get(p, pre + "scan.m_fre_u"),  get(p, pre + "scan.m_fre_z"),  Var{}};
            if (cfg_.spectral != Spectral::amp_only) {
                sv.c_p = get(p, pre + "scan.c_p");
            }
            ScanTrace* st = trace != nullptr ? &trace->blocks[b][d] : nullptr;
            if (st != nullptr) {
                st->delta_omega = basis.delta_omega.value();
            }
            channels.push_back(scan_channel(u_d, basis.omega, sv, cfg_.spectral, st));
        }
        u = add(u, stack(channels));
    }

    Var flat = reshape(u, {D, M * V});
    Var head = add(matmul(flat, get(p, "head.w")), reshape(get(p, "head.b"), {1, H}));
    return transpose(head);
}

Tensor Model::normalize(const Tensor& x) const {
    if (x.rank() != 2 || x.extent(1) != cfg_.D) {
        throw DimensionError("normalize: expected [*," + std::to_string(cfg_.D) + "], got " + to_string(x.shape()));
    }
    if (!all_finite(x)) {
        throw NumericFault("input window contains NaN or Inf");
    }
    const Tensor& mean = params_.at("norm.mean");
    const Tensor& sd = params_.at("norm.std");
    Tensor out(x.shape());
    const std::size_t D = cfg_.D;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (x[i] - mean[i % D]) / sd[i % D];
    }
    return out;
}

Tensor Model::denormalize(const Tensor& y) const {
    const Tensor& mean = params_.at("norm.mean");
    const Tensor& sd = params_.at("norm.std");
    Tensor out(y.shape());
    const std::size_t D = cfg_.D;
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = y[i] * sd[i % D] + mean[i % D];
    }
    return out;
}

Tensor Model::predict_normalized(const Tensor& x_norm, ForwardTrace* trace) const {
    Graph g(Graph::Mode::inference);
    BoundParams p = bind(g);
    return forward_normalized(g, p, g.constant(x_norm), trace).value();
}

Tensor Model::predict(const Tensor& x_raw) const { return denormalize(predict_normalized(normalize(x_raw))); }

Var mse_loss(Var pred, Var target) {
    if (pred.shape() != target.shape()) {
        throw DimensionError("loss: prediction " + to_string(pred.shape()) + " and target " +
                             to_string(target.shape()) + " differ");
    }
    const double n = static_cast<double>(pred.value().size());
    return scale(sum_all(square(sub(pred, target))), 1.0 / n);
}

}  // namespace afgm
