#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "afgm/errors.hpp"
#include "afgm/trainer.hpp"
#include "raw_model.hpp"
#include "synthetic.hpp"

namespace afgm {
namespace {

using testing::randomize;
using testing::toy_config;

PreparedData toy_data(std::size_t rows = 160, std::uint64_t seed = 5) {
    return prepare(parse_csv(testing::synthetic_csv(rows, 2, seed)), SplitScheme::ratio, 24, 6);
}

TrainConfig quick(std::size_t epochs = 2) {
    TrainConfig c;
    c.lr = 1e-3;
    c.batch_size = 8;
    c.max_epochs = epochs;
    c.patience = 5;
    c.seed = 3;
    return c;
}

TEST(Adam, QuadraticConvergesToMinimum) {
    Tensor p = Tensor::scalar(0.0);
    Adam adam(0.1);
    for (int i = 0; i < 500; ++i) {
        adam.step({&p}, {Tensor::scalar(2.0 * (p.item() - 3.0))});
    }
    EXPECT_NEAR(p.item(), 3.0, 1e-3);
    EXPECT_EQ(adam.steps(), 500u);
}

TEST(Adam, MatchesHandWrittenUpdate) {
    Tensor p = Tensor::scalar(0.0);
    Adam adam(0.1);
    double q = 0.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 50; ++t) {
        const double g = 2.0 * (q - 3.0);
        m = 0.9 * m + (1.0 - 0.9) * g;
        v = 0.999 * v + (1.0 - 0.999) * g * g;
        q -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        adam.step({&p}, {Tensor::scalar(2.0 * (p.item() - 3.0))});
        ASSERT_EQ(p.item(), q) << "step " << t;
    }
}

TEST(Adam, StoreRestoreContinuesIdentically) {
    Tensor a = Tensor::vector({1.0, -2.0});
    Adam first(0.05);
    for (int i = 0; i < 3; ++i) {
        first.step({&a}, {Tensor::vector({a[0], 2 * a[1]})});
    }
    ParamSet state;
    first.store(state, {"w"});
    Tensor b = a;
    Adam second(0.05);
    second.restore(state, {"w"});
    first.step({&a}, {Tensor::vector({a[0], 2 * a[1]})});
    second.step({&b}, {Tensor::vector({b[0], 2 * b[1]})});
    EXPECT_EQ(a, b);
    EXPECT_EQ(second.steps(), 4u);
}

TEST(TrainConfig, RejectsOutOfRange) {
    TrainConfig c;
    c.lr = 0.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.lr = 1e-8;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.patience = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    EXPECT_NO_THROW(c.validate());
}

TEST(Clip, BoundsGlobalNorm) {
    SplitMix64 rng(9);
    std::vector<Tensor> g{rng.uniform_tensor({3, 4}, -10, 10), rng.uniform_tensor({5}, -10, 10)};
    const double before = clip_global_norm(g, 1.0);
    EXPECT_GT(before, 1.0);
    double sq = 0.0;
    for (const auto& t : g) {
        for (double x : t.data()) {
            sq += x * x;
        }
    }
    EXPECT_LE(std::sqrt(sq), 1.0 + 1e-9);

    std::vector<Tensor> small{Tensor::vector({0.1, 0.2})};
    const Tensor copy = small[0];
    clip_global_norm(small, 1.0);
    EXPECT_EQ(small[0], copy);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
    const PreparedData data = toy_data();
    Model m = Model::initialize(toy_config(), 11);
    TrainConfig c = quick(1);
    c.lr = 0.0;
    const TrainResult r = train(m, data, c);
    for (const auto& e : m.params().entries()) {
        if (e.role == Role::parameter) {
            EXPECT_EQ(r.final_state.at(e.name), e.value) << e.name;
        }
    }
}

TEST(Train, ThreeRunsAreBitIdentical) {
    const PreparedData data = toy_data();
    const Model m = Model::initialize(toy_config(), 4);
    const TrainResult a = train(m, data, quick());
    for (int run = 0; run < 2; ++run) {
        const TrainResult b = train(m, data, quick());
        EXPECT_TRUE(a.final_state == b.final_state);
        ASSERT_EQ(a.history.size(), b.history.size());
        for (std::size_t i = 0; i < a.history.size(); ++i) {
            EXPECT_EQ(a.history[i].train_mse, b.history[i].train_mse);
            EXPECT_EQ(a.history[i].val_mse, b.history[i].val_mse);
        }
    }
}

TEST(Train, ThreadCountDoesNotChangeResult) {
    const PreparedData data = toy_data();
    const Model m = Model::initialize(toy_config(), 4);
    TrainConfig c = quick(1);
    const TrainResult one = train(m, data, c);
    c.threads = 3;
    const TrainResult three = train(m, data, c);
    EXPECT_TRUE(one.final_state == three.final_state);
}

TEST(Train, BestValidationIsMonotoneAndEarlyStops) {
    const PreparedData data = toy_data(200);
    TrainConfig c = quick(12);
    c.lr = 5e-2;  // large enough that validation wobbles
    c.patience = 2;
    const TrainResult r = train(Model::initialize(toy_config(), 8), data, c);
    ASSERT_FALSE(r.history.empty());
    double best = r.history[0].best_val_mse;
    for (const auto& h : r.history) {
        EXPECT_LE(h.best_val_mse, best);
        EXPECT_LE(h.best_val_mse, h.val_mse);
        best = h.best_val_mse;
    }
    EXPECT_EQ(evaluate(r.best, data.windows(Split::val, 24, 6)).mse, best);
    if (r.history.size() < c.max_epochs) {
        EXPECT_EQ(r.history.size() - r.best_epoch, c.patience);
    }
}

TEST(Train, TrainingReducesLoss) {
    const PreparedData data = toy_data(240);
    TrainConfig c = quick(6);
    c.lr = 1e-2;
    const TrainResult r = train(Model::initialize(toy_config(), 2), data, c);
    EXPECT_LT(r.history.back().train_mse, r.history.front().train_mse);
}

TEST(Train, NonFiniteAbortNamesEpochAndBatch) {
    const PreparedData data = toy_data();
    Model m = Model::initialize(toy_config(), 4);
    m.params().at("head.w").fill(1e300);
    try {
        train(m, data, quick(1));
        FAIL() << "expected NumericFault";
    } catch (const NumericFault& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("epoch 1"), std::string::npos) << what;
        EXPECT_NE(what.find("batch 1"), std::string::npos) << what;
    }
}

TEST(Train, CheckpointRoundTripKeepsOptimizerState) {
    const PreparedData data = toy_data();
    const TrainResult r = train(Model::initialize(toy_config(), 4), data, quick(1));
    const auto path = std::filesystem::temp_directory_path() / "afgm_trainer_state.ckpt";
    save_checkpoint(r.final_state, path);
    const ParamSet back = load_checkpoint(path);
    EXPECT_TRUE(back == r.final_state);
    EXPECT_FALSE(back.indices(Role::adam_m).empty());
    const Model restored(toy_config(), back);
    Adam adam(1e-3);
    EXPECT_NO_THROW(adam.restore(back, parameter_names(restored)));
    EXPECT_GT(adam.steps(), 0u);
}

class ModelGradCheck : public ::testing::Test {
protected:
    void SetUp() override {
        model = Model::initialize(toy_config(), 21);
        randomize(model, 22);
        model.set_normalization(Tensor::vector({0.0, 0.0}), Tensor::vector({1.0, 1.0}));
        SplitMix64 rng(23);
        input = rng.uniform_tensor({24, 2}, -2, 2);
        target = rng.uniform_tensor({6, 2}, -2, 2);
    }
    Model model = Model::initialize(toy_config(), 0);
    Tensor input, target;
};

TEST_F(ModelGradCheck, ToyModelWithinTolerance) {
    const GradCheckReport r = grad_check(model, input, target);
    EXPECT_TRUE(r.passed());
    for (const auto& e : r.entries) {
        EXPECT_LT(e.rel_error, 1e-4) << e.name;
        EXPECT_GT(e.max_analytic, 0.0) << e.name;
    }
}

TEST_F(ModelGradCheck, CorruptedAdjointIsFlagged) {
    GradCheckOptions opt;
    opt.corrupt = [](const std::string& name, Tensor& g) {
        if (name == "block0.scan.w_g_amp") {
            g[0] += 0.1 * std::max(1.0, std::abs(g[0]));
        }
    };
    const GradCheckReport r = grad_check(model, input, target, opt);
    EXPECT_EQ(r.failures(), std::vector<std::string>{"block0.scan.w_g_amp"});
}

TEST_F(ModelGradCheck, PerfectFitGivesZeroGradient) {
    const Tensor fit = model.predict_normalized(input);
    const WindowGradient wg = window_gradient(model, input, fit);
    EXPECT_EQ(wg.loss, 0.0);
    for (const auto& g : wg.grads) {
        for (double x : g.data()) {
            EXPECT_EQ(x, 0.0);
        }
    }
}

TEST_F(ModelGradCheck, BatchGradientIsMeanOfWindows) {
    const PreparedData data = toy_data();
    const WindowSet ws = data.windows(Split::train, 24, 6);
    const WindowGradient batch = batch_gradient(model, ws, {0, 3, 7}, 1);
    double loss = 0.0;
    std::vector<Tensor> sum;
    for (std::size_t i : {0, 3, 7}) {
        const SeriesWindow w = ws.at(i);
        WindowGradient one = window_gradient(model, w.input, w.target);
        loss += one.loss;
        if (sum.empty()) {
            sum = one.grads;
        } else {
            for (std::size_t p = 0; p < sum.size(); ++p) {
                for (std::size_t k = 0; k < sum[p].size(); ++k) {
                    sum[p][k] += one.grads[p][k];
                }
            }
        }
    }
    EXPECT_DOUBLE_EQ(batch.loss, loss / 3);
    for (std::size_t p = 0; p < sum.size(); ++p) {
        for (std::size_t k = 0; k < sum[p].size(); ++k) {
            EXPECT_DOUBLE_EQ(batch.grads[p][k], sum[p][k] / 3);
        }
    }
}

}  // namespace
}  // namespace afgm
