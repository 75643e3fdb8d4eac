#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "afgm/afgssm.hpp"
#include "afgm/graph.hpp"
#include "afgm/param_set.hpp"
#include "afgm/patch_encoder.hpp"

namespace afgm {

enum class EncoderKind { interactive, linear };
enum class CoreKind { afgssm, plain_ssm };

const char* to_string(EncoderKind k);
const char* to_string(CoreKind k);
const char* to_string(Spectral k);
const char* to_string(OmegaMode k);
EncoderKind parse_encoder(const std::string& s);
CoreKind parse_core(const std::string& s);
Spectral parse_spectral(const std::string& s);
OmegaMode parse_omega_mode(const std::string& s);

struct ModelConfig {
    std::size_t T = 96;
    std::size_t H = 96;
    std::size_t D = 7;
    std::size_t V = 16;  // hidden_dim
    std::size_t S = 16;  // freq_dim, must equal V
    std::size_t F_n = 1;
    std::vector<std::size_t> patch_lengths{48, 24};
    std::size_t conv_kernel = 3;
    std::size_t adapter_hidden = 0;  // 0 selects max(V/4, 4)

    EncoderKind encoder = EncoderKind::interactive;
    CoreKind core = CoreKind::afgssm;
    Spectral spectral = Spectral::amp_only;
    OmegaMode omega_mode = OmegaMode::dynamic;

    /// Throws ConfigError on any violated constraint, including contradictory variant flags.
    void validate() const;
    [[nodiscard]] std::size_t adapter_width() const;
};

/// Named ablation settings. I: full model; II: linear encoder; IV: linear encoder + plain SSM.
ModelConfig with_case(ModelConfig cfg, const std::string& name);

/// Every tensor name, shape and role the configuration requires, zero-valued.
ParamSet blueprint(const ModelConfig& cfg);

/// Per-block, per-channel scan diagnostics collected during a forward pass.
struct ForwardTrace {
    std::vector<std::vector<ScanTrace>> blocks;  // [block][channel]
};

/// Parameters bound into one graph, addressed by name.
using BoundParams = std::map<std::string, Var, std::less<>>;

class Model {
public:
    /// Checks `params` against blueprint(cfg); throws ConfigError on any mismatch.
    /// Entries with optimizer roles are ignored.
    Model(ModelConfig cfg, ParamSet params);

    /// Seeded initialization; normalization defaults to mean 0, std 1.
    static Model initialize(const ModelConfig& cfg, std::uint64_t seed);

    [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const PatchPlan& plan() const noexcept { return plan_; }
    [[nodiscard]] const ParamSet& params() const noexcept { return params_; }
    ParamSet& params() noexcept { return params_; }

    void set_normalization(const Tensor& mean, const Tensor& stdev);

    /// Adds every parameter-role tensor to `g` as a parameter node.
    BoundParams bind(Graph& g) const;

    /// Standardized [T,D] window to standardized [H,D] forecast.
    Var forward_normalized(Graph& g, const BoundParams& p, Var x_norm, ForwardTrace* trace = nullptr) const;

    /// Raw-scale [T,D] window to raw-scale [H,D] forecast (normalize, forward, denormalize).
    [[nodiscard]] Tensor predict(const Tensor& x_raw) const;
    /// Standardized in, standardized out, inference mode.
    [[nodiscard]] Tensor predict_normalized(const Tensor& x_norm, ForwardTrace* trace = nullptr) const;

    [[nodiscard]] Tensor normalize(const Tensor& x_raw) const;
    [[nodiscard]] Tensor denormalize(const Tensor& y_norm) const;

private:
    ModelConfig cfg_;
    PatchPlan plan_;
    ParamSet params_;
};

/// Mean squared error over all entries as a rank-0 node. Shapes must match exactly.
Var mse_loss(Var pred, Var target);

}  // namespace afgm
