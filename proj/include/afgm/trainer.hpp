#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "afgm/data_io.hpp"
#include "afgm/model.hpp"

namespace afgm {

struct TrainConfig {
    double lr = 1e-4;
    std::size_t batch_size = 24;
    std::size_t max_epochs = 10;
    std::size_t patience = 5;
    std::uint64_t seed = 1;
    double grad_clip = 1.0;  // max global L2 norm; 0 disables clipping
    std::size_t threads = 1;

    /// Throws ConfigError on an out-of-range field.
    void validate() const;
};

/// Adam with bias correction over an ordered list of tensors.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    /// params[i] -= lr * m_hat / (sqrt(v_hat) + eps). Moments are sized on first use.
    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);

    [[nodiscard]] std::uint64_t steps() const noexcept { return t_; }

    /// Appends moments and the step counter under "adam.m.<name>", "adam.v.<name>", "adam.step".
    void store(ParamSet& out, const std::vector<std::string>& names) const;
    /// Restores state written by store(); throws ConfigError if entries are missing or misshapen.
    void restore(const ParamSet& in, const std::vector<std::string>& names);

private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

/// Names of the parameter-role tensors of a model, in gradient order.
std::vector<std::string> parameter_names(const Model& model);
std::vector<Tensor*> parameter_tensors(Model& model);

/// Loss and per-parameter gradients for one standardized window.
struct WindowGradient {
    double loss = 0.0;
    std::vector<Tensor> grads;
};
WindowGradient window_gradient(const Model& model, const Tensor& input, const Tensor& target);

/// Mean loss and mean gradient over several windows, summed in index order
/// regardless of how many threads computed them.
WindowGradient batch_gradient(const Model& model, const WindowSet& windows, const std::vector<std::size_t>& indices,
                              std::size_t threads);

/// Scales grads in place so their global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

/// Mean-squared error over all windows of a set, standardized scale.
Metrics evaluate(const Model& model, const WindowSet& windows, std::size_t threads = 1);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_mse = 0.0;
    double val_mse = 0.0;
    double best_val_mse = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    Model best;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    ParamSet final_state;  // last-epoch parameters plus optimizer state
};

struct TrainHooks {
    std::function<void(const EpochRecord&)> on_epoch;
    /// Called with the new best model whenever validation improves.
    std::function<void(const Model&)> on_improve;
};

/// Trains on the train split, early-stops on validation MSE, returns the best model.
/// The model's normalization is set from `data.stats` first.
/// NaN or Inf anywhere raises NumericFault naming the epoch and batch.
TrainResult train(Model model, const PreparedData& data, const TrainConfig& cfg, const TrainHooks& hooks = {});

struct GradCheckEntry {
    std::string name;
    double rel_error = 0.0;   // max|a - f| / max(max|a|, max|f|, floor)
    double max_analytic = 0.0;
    bool passed = false;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tolerance = 0.0;
    [[nodiscard]] bool passed() const;
    [[nodiscard]] std::vector<std::string> failures() const;
};

struct GradCheckOptions {
    double h = 1e-5;
    double tolerance = 1e-4;
    /// Gradients whose magnitudes are all below this count as zero.
    double floor = 1e-10;
    /// Test hook: may alter analytic gradients before comparison.
    std::function<void(const std::string& name, Tensor& grad)> corrupt;
};

/// Central differences on every parameter scalar against the backward pass.
GradCheckReport grad_check(const Model& model, const Tensor& input, const Tensor& target,
                           const GradCheckOptions& options = {});

}  // namespace afgm
