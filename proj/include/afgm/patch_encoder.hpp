#pragma once

#include <cstddef>
#include <vector>

#include "afgm/graph.hpp"

namespace afgm {

/// Non-overlapping multiscale patching of a T-step window. Each scale uses
/// stride P_i and left-replicate padding up to the next multiple of P_i.
struct PatchPlan {
    std::size_t T = 0;
    std::vector<std::size_t> patch_lengths;
    std::vector<std::size_t> strides;
    std::vector<std::size_t> padded_lengths;  // T_pad per scale
    std::vector<std::size_t> counts;          // Q_i per scale
    std::size_t M = 0;

    /// Throws ConfigError if `patch_lengths` is empty or any P_i is 0 or > T.
    static PatchPlan make(std::size_t T, const std::vector<std::size_t>& patch_lengths);

    [[nodiscard]] std::size_t scales() const noexcept { return patch_lengths.size(); }
    /// Index of the first patch of `scale` along the concatenated patch axis.
    [[nodiscard]] std::size_t offset(std::size_t scale) const;
};

/// Graph handles for the encoder's learnable tensors.
struct EncoderVars {
    Var conv_kernel;  // [k,D,D]
    Var alpha_raw;    // rank 0
    std::vector<Var> proj_w;  // [P_i,V]
    std::vector<Var> proj_b;  // [V]
};

/// alpha * conv1d(x) + (1 - alpha) * x with alpha = sigmoid(alpha_raw).
Var interaction_encode(Var x, Var conv_kernel, Var alpha_raw);

/// Patches of one scale, each [D, P_i], taken from the left-padded series.
std::vector<Tensor> partition(const Tensor& x, const PatchPlan& plan, std::size_t scale);

/// Projects every patch of every scale to V and concatenates along the patch axis: [D, M, V].
Var embed(Var x, const EncoderVars& vars, const PatchPlan& plan);

}  // namespace afgm
