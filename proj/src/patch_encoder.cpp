#include "afgm/patch_encoder.hpp"

#include <string>

#include "afgm/errors.hpp"
#include "afgm/ops.hpp"

namespace afgm {

PatchPlan PatchPlan::make(std::size_t T, const std::vector<std::size_t>& patch_lengths) {
    if (patch_lengths.empty()) {
        throw ConfigError("patch plan: at least one patch length is required");
    }
    PatchPlan plan;
    plan.T = T;
    plan.patch_lengths = patch_lengths;
    for (std::size_t P : patch_lengths) {
        if (P == 0 || P > T) {
            throw ConfigError("patch length " + std::to_string(P) + " must lie in [1, T=" + std::to_string(T) + "]");
        }
        const std::size_t Q = (T + P - 1) / P;
        plan.strides.push_back(P);
        plan.padded_lengths.push_back(Q * P);
        plan.counts.push_back(Q);
        plan.M += Q;
    }
    return plan;
}

std::size_t PatchPlan::offset(std::size_t scale) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < scale; ++i) {
        off += counts.at(i);
    }
    return off;
}

Var interaction_encode(Var x, Var conv_kernel, Var alpha_raw) {
    const std::size_t T = x.shape().at(0);
    const std::size_t k = conv_kernel.shape().at(0);
    if (T < k) {
        throw ConfigError("interaction encoder: window length " + std::to_string(T) + " is shorter than kernel " +
                          std::to_string(k));
    }
    Var alpha = sigmoid(alpha_raw);
    Var mixed = conv1d(x, conv_kernel);
    // x + alpha * (conv - x)
    return add(x, mul(alpha, sub(mixed, x)));
}

std::vector<Tensor> partition(const Tensor& x, const PatchPlan& plan, std::size_t scale) {
    if (x.rank() != 2 || x.extent(0) != plan.T) {
        throw DimensionError("partition: expected [" + std::to_string(plan.T) + ",D], got " + to_string(x.shape()));
    }
    if (scale >= plan.scales()) {
        throw ConfigError("partition: no scale " + std::to_string(scale));
    }
    const std::size_t D = x.extent(1);
    const std::size_t P = plan.patch_lengths[scale];
    const std::size_t stride = plan.strides[scale];
    const std::size_t pad = plan.padded_lengths[scale] - plan.T;
    std::vector<Tensor> patches;
    for (std::size_t q = 0; q < plan.counts[scale]; ++q) {
        Tensor patch(Shape{D, P});
        for (std::size_t p = 0; p < P; ++p) {
            const std::size_t row = q * stride + p;
            const std::size_t src = row < pad ? 0 : row - pad;
            for (std::size_t d = 0; d < D; ++d) {
                patch.at(d, p) = x.at(src, d);
            }
        }
        patches.push_back(std::move(patch));
    }
    return patches;
}

Var embed(Var x, const EncoderVars& vars, const PatchPlan& plan) {
    if (vars.proj_w.size() != plan.scales() || vars.proj_b.size() != plan.scales()) {
        throw ConfigError("embed: projection weights cover " + std::to_string(vars.proj_w.size()) +
                          " scales, plan has " + std::to_string(plan.scales()));
    }
    const std::size_t D = x.shape().at(1);
    std::vector<Var> parts;
    for (std::size_t i = 0; i < plan.scales(); ++i) {
        const std::size_t P = plan.patch_lengths[i];
        const std::size_t Q = plan.counts[i];
        const std::size_t V = vars.proj_w[i].shape().at(1);
        // [T_pad,D] -> [D,T_pad] -> [D*Q,P]: row (d,q) is patch q of channel d
        Var padded = pad_front_replicate(x, plan.padded_lengths[i] - plan.T);
        Var rows = reshape(transpose(padded), {D * Q, P});
        Var proj = add(matmul(rows, vars.proj_w[i]), reshape(vars.proj_b[i], {1, V}));
        parts.push_back(reshape(proj, {D, Q, V}));
    }
    return parts.size() == 1 ? parts.front() : concat(parts, 1);
}

}  // namespace afgm
