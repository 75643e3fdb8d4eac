#include "afgm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "afgm/errors.hpp"
#include "afgm/ops.hpp"
#include "afgm/rng.hpp"

namespace afgm {

void TrainConfig::validate() const {
    if (!(lr >= 0.0 && lr <= 1e-1)) {
        throw ConfigError("lr must lie in [1e-6, 1e-1] (0 allowed for frozen runs), got " + std::to_string(lr));
    }
    if (lr > 0.0 && lr < 1e-6) {
        throw ConfigError("lr must lie in [1e-6, 1e-1], got " + std::to_string(lr));
    }
    if (batch_size == 0) {
        throw ConfigError("batch_size must be positive");
    }
    if (max_epochs == 0) {
        throw ConfigError("max_epochs must be positive");
    }
    if (patience == 0) {
        throw ConfigError("patience must be at least 1");
    }
    if (!(grad_clip >= 0.0)) {
        throw ConfigError("grad_clip must be non-negative");
    }
    if (threads == 0) {
        throw ConfigError("threads must be positive");
    }
}

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam: " + std::to_string(params.size()) + " parameters but " +
                             std::to_string(grads.size()) + " gradients");
    }
    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        if (g.shape() != p.shape() || m_[i].shape() != p.shape()) {
            throw DimensionError("adam: gradient " + to_string(g.shape()) + " for parameter " + to_string(p.shape()));
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g[k];
            v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g[k] * g[k];
            p[k] -= lr_ * (m_[i][k] / c1) / (std::sqrt(v_[i][k] / c2) + eps_);
        }
    }
}

void Adam::store(ParamSet& out, const std::vector<std::string>& names) const {
    for (std::size_t i = 0; i < m_.size(); ++i) {
        out.add("adam.m." + names.at(i), m_[i], Role::adam_m);
        out.add("adam.v." + names.at(i), v_[i], Role::adam_v);
    }
    out.add("adam.step", Tensor::scalar(static_cast<double>(t_)), Role::step);
}

void Adam::restore(const ParamSet& in, const std::vector<std::string>& names) {
    if (!in.contains("adam.step")) {
        throw ConfigError("checkpoint carries no optimizer state");
    }
    std::vector<Tensor> m, v;
    for (const auto& n : names) {
        m.push_back(in.at("adam.m." + n));
        v.push_back(in.at("adam.v." + n));
    }
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = static_cast<std::uint64_t>(in.at("adam.step").item());
}

std::vector<std::string> parameter_names(const Model& model) {
    std::vector<std::string> names;
    for (const auto& e : model.params().entries()) {
        if (e.role == Role::parameter) {
            names.push_back(e.name);
        }
    }
    return names;
}

std::vector<Tensor*> parameter_tensors(Model& model) {
    std::vector<Tensor*> out;
    for (auto& e : model.params().entries()) {
        if (e.role == Role::parameter) {
            out.push_back(&e.value);
        }
    }
    return out;
}

WindowGradient window_gradient(const Model& model, const Tensor& input, const Tensor& target) {
    Graph g;
    const BoundParams bound = model.bind(g);
    Var loss = mse_loss(model.forward_normalized(g, bound, g.constant(input)), g.constant(target));
    g.backward(loss);
    WindowGradient out;
    out.loss = loss.value().item();
    for (const auto& e : model.params().entries()) {
        if (e.role == Role::parameter) {
            out.grads.push_back(g.grad(bound.at(e.name)));
        }
    }
    return out;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first error.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) {
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

WindowGradient batch_gradient(const Model& model, const WindowSet& windows, const std::vector<std::size_t>& indices,
                              std::size_t threads) {
    if (indices.empty()) {
        throw ContractError("batch_gradient: empty batch");
    }
    std::vector<WindowGradient> parts(indices.size());
    parallel_for(indices.size(), threads, [&](std::size_t i) {
        const SeriesWindow w = windows.at(indices[i]);
        parts[i] = window_gradient(model, w.input, w.target);
    });
    WindowGradient total = std::move(parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i) {
        total.loss += parts[i].loss;
        for (std::size_t p = 0; p < total.grads.size(); ++p) {
            auto& acc = total.grads[p];
            const auto& add = parts[i].grads[p];
            for (std::size_t k = 0; k < acc.size(); ++k) {
                acc[k] += add[k];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    total.loss *= inv;
    for (auto& g : total.grads) {
        for (auto& x : g.data()) {
            x *= inv;
        }
    }
    return total;
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads) {
        for (double x : g.data()) {
            sq += x * x;
        }
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& g : grads) {
            for (auto& x : g.data()) {
                x *= s;
            }
        }
    }
    return norm;
}

Metrics evaluate(const Model& model, const WindowSet& windows, std::size_t threads) {
    std::vector<Metrics> per(windows.size());
    parallel_for(windows.size(), threads, [&](std::size_t i) {
        const SeriesWindow w = windows.at(i);
        per[i] = metrics(model.predict_normalized(w.input), w.target);
    });
    Metrics out;
    for (const auto& m : per) {
        out.mse += m.mse;
        out.mae += m.mae;
    }
    out.mse /= static_cast<double>(per.size());
    out.mae /= static_cast<double>(per.size());
    return out;
}

TrainResult train(Model model, const PreparedData& data, const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    const ModelConfig& mc = model.config();
    if (data.dataset.vars() != mc.D) {
        throw ConfigError("model expects D=" + std::to_string(mc.D) + " variables, data has " +
                          std::to_string(data.dataset.vars()));
    }
    model.set_normalization(data.stats.mean, data.stats.stdev);
    const WindowSet train_set = data.windows(Split::train, mc.T, mc.H);
    const WindowSet val_set = data.windows(Split::val, mc.T, mc.H);

    SplitMix64 rng(cfg.seed);
    Adam adam(cfg.lr);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    TrainResult result{model, {}, 0, {}};
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        const std::size_t batches = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
        for (std::size_t b = 0; b < batches; ++b) {
            const auto first = order.begin() + static_cast<std::ptrdiff_t>(b * cfg.batch_size);
            const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), (b + 1) * cfg.batch_size));
            const std::vector<std::size_t> idx(first, last);
            WindowGradient wg;
            try {
                wg = batch_gradient(model, train_set, idx, cfg.threads);
                if (!std::isfinite(wg.loss)) {
                    throw NumericFault("non-finite loss");
                }
                for (const auto& g : wg.grads) {
                    if (!all_finite(g)) {
                        throw NumericFault("non-finite gradient");
                    }
                }
            } catch (const NumericFault& e) {
                throw NumericFault("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) + ": " +
                                   e.what());
            }
            clip_global_norm(wg.grads, cfg.grad_clip);
            adam.step(parameter_tensors(model), wg.grads);
            loss_sum += wg.loss * static_cast<double>(idx.size());
            seen += idx.size();
        }

        double val = 0.0;
        try {
            val = evaluate(model, val_set, cfg.threads).mse;
        } catch (const NumericFault& e) {
            throw NumericFault("epoch " + std::to_string(epoch) + ", validation: " + e.what());
        }
        if (val < best) {
            best = val;
            since_best = 0;
            result.best = model;
            result.best_epoch = epoch;
            if (hooks.on_improve) {
                hooks.on_improve(model);
            }
        } else {
            ++since_best;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_mse = loss_sum / static_cast<double>(seen);
        rec.val_mse = val;
        rec.best_val_mse = best;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back(rec);
        if (hooks.on_epoch) {
            hooks.on_epoch(rec);
        }
        if (since_best >= cfg.patience) {
            break;
        }
    }
    result.final_state = model.params();
    adam.store(result.final_state, parameter_names(model));
    return result;
}

bool GradCheckReport::passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const GradCheckEntry& e) { return e.passed; });
}

std::vector<std::string> GradCheckReport::failures() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (!e.passed) {
            out.push_back(e.name);
        }
    }
    return out;
}

GradCheckReport grad_check(const Model& model, const Tensor& input, const Tensor& target,
                           const GradCheckOptions& opt) {
    WindowGradient wg = window_gradient(model, input, target);
    const auto names = parameter_names(model);

    Model probe = model;
    auto loss_at = [&]() {
        Graph g(Graph::Mode::inference);
        const BoundParams bound = probe.bind(g);
        return mse_loss(probe.forward_normalized(g, bound, g.constant(input)), g.constant(target)).value().item();
    };

    GradCheckReport report;
    report.tolerance = opt.tolerance;
    for (std::size_t p = 0; p < names.size(); ++p) {
        Tensor& analytic = wg.grads[p];
        if (opt.corrupt) {
            opt.corrupt(names[p], analytic);
        }
        Tensor& value = probe.params().at(names[p]);
        double max_diff = 0.0, max_a = 0.0, max_f = 0.0;
        for (std::size_t k = 0; k < value.size(); ++k) {
            const double x0 = value[k];
            value[k] = x0 + opt.h;
            const double up = loss_at();
            value[k] = x0 - opt.h;
            const double down = loss_at();
            value[k] = x0;
            const double fd = (up - down) / (2.0 * opt.h);
            max_diff = std::max(max_diff, std::abs(fd - analytic[k]));
            max_a = std::max(max_a, std::abs(analytic[k]));
            max_f = std::max(max_f, std::abs(fd));
        }
        GradCheckEntry e;
        e.name = names[p];
        e.max_analytic = max_a;
        e.rel_error = max_diff / std::max({max_a, max_f, opt.floor});
        e.passed = e.rel_error < opt.tolerance;
        report.entries.push_back(e);
    }
    return report;
}

}  // namespace afgm
