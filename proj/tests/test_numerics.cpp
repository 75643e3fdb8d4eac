#include <gtest/gtest.h>

#include <cmath>

#include "afgm/errors.hpp"
#include "afgm/graph.hpp"
#include "afgm/ops.hpp"
#include "afgm/rng.hpp"
#include "support.hpp"

namespace afgm {
namespace {

using testing::max_grad_error;
using testing::probe_loss;

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    SplitMix64 rng(seed);
    return rng.uniform_tensor(std::move(shape), lo, hi);
}

TEST(Tensor, RejectsZeroExtentAndCountMismatch) {
    EXPECT_THROW(Tensor(Shape{2, 0}), DimensionError);
    EXPECT_THROW(Tensor(Shape{2, 2}, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(Matmul, IdentityAndDot) {
    Graph g(Graph::Mode::inference);
    auto id = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
    auto m = g.constant(Tensor::matrix({{1.5, -2}, {3, 4.25}}));
    EXPECT_EQ(matmul(id, m).value(), m.value());

    auto row = g.constant(Tensor::matrix({{1, 2}}));
    auto col = g.constant(Tensor::matrix({{3}, {4}}));
    EXPECT_DOUBLE_EQ(matmul(row, col).value().at(0, 0), 11.0);
}

TEST(Matmul, MatchesTripleLoop) {
    const Tensor a = random_tensor({3, 4}, 7);
    const Tensor b = random_tensor({4, 2}, 7 + 1);
    Graph g(Graph::Mode::inference);
    const Tensor c = matmul(g.constant(a), g.constant(b)).value();
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                s += a.at(i, k) * b.at(k, j);
            }
            EXPECT_NEAR(c.at(i, j), s, 1e-12);
        }
    }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    Graph g;
    auto a = g.constant(Tensor(Shape{2, 3}));
    auto b = g.constant(Tensor(Shape{2, 3}));
    try {
        matmul(a, b);
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
    }
}

TEST(Matmul, Associativity) {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t p = 1 + rng.below(5), q = 1 + rng.below(5), r = 1 + rng.below(5), s = 1 + rng.below(5);
        Graph g(Graph::Mode::inference);
        auto a = g.constant(rng.uniform_tensor({p, q}, -2, 2));
        auto b = g.constant(rng.uniform_tensor({q, r}, -2, 2));
        auto c = g.constant(rng.uniform_tensor({r, s}, -2, 2));
        const Tensor left = matmul(matmul(a, b), c).value();
        const Tensor right = matmul(a, matmul(b, c)).value();
        double scale = 1e-300;
        for (double x : left.data()) {
            scale = std::max(scale, std::abs(x));
        }
        EXPECT_LE(max_abs_diff(left, right) / scale, 1e-9);
    }
}

TEST(Elementwise, ScalarExamples) {
    Graph g(Graph::Mode::inference);
    EXPECT_DOUBLE_EQ(sigmoid(g.constant(Tensor::scalar(0.0))).value().item(), 0.5);
    EXPECT_DOUBLE_EQ(relu(g.constant(Tensor::scalar(-3.2))).value().item(), 0.0);
    auto re = g.constant(Tensor::scalar(3.0));
    auto im = g.constant(Tensor::scalar(4.0));
    EXPECT_NEAR(sqrt_guarded(add(square(re), square(im)), 0.0).value().item(), 5.0, 1e-15);
}

TEST(Elementwise, BroadcastWhitelist) {
    Graph g(Graph::Mode::inference);
    auto sv = g.constant(Tensor(Shape{3, 4}, std::vector<double>(12, 1.0)));
    auto row = g.constant(Tensor::matrix({{1, 2, 3, 4}}));
    auto col = g.constant(Tensor::matrix({{10}, {20}, {30}}));
    const Tensor r = add(sv, row).value();
    EXPECT_DOUBLE_EQ(r.at(2, 3), 5.0);
    const Tensor c = mul(col, sv).value();
    EXPECT_DOUBLE_EQ(c.at(1, 0), 20.0);
    EXPECT_DOUBLE_EQ(add(g.constant(Tensor::scalar(2.0)), sv).value().at(0, 0), 3.0);

    EXPECT_THROW(add(sv, g.constant(Tensor(Shape{4}))), DimensionError);
    EXPECT_THROW(add(sv, g.constant(Tensor(Shape{3, 2}))), DimensionError);
    EXPECT_THROW(add(g.constant(Tensor(Shape{2, 3, 4})), g.constant(Tensor(Shape{1, 4}))), DimensionError);
}

TEST(Elementwise, SqrtDomain) {
    Graph g(Graph::Mode::inference);
    EXPECT_NO_THROW(sqrt_guarded(g.constant(Tensor::scalar(-0.5e-12))));
    EXPECT_THROW(sqrt_guarded(g.constant(Tensor::scalar(-1e-6))), DomainError);
}

TEST(Elementwise, NonFiniteValuesAreFaults) {
    Graph g(Graph::Mode::inference);
    auto big = g.constant(Tensor::scalar(1e200));
    EXPECT_THROW(mul(big, big), NumericFault);
}

TEST(Outer, Examples) {
    Graph g(Graph::Mode::inference);
    const Tensor r = outer(g.constant(Tensor::vector({1, 1})), g.constant(Tensor::vector({2, 3, 5}))).value();
    EXPECT_EQ(r, Tensor::matrix({{2, 3, 5}, {2, 3, 5}}));
    EXPECT_DOUBLE_EQ(outer(g.constant(Tensor::vector({2})), g.constant(Tensor::vector({3}))).value().at(0, 0), 6.0);
    EXPECT_THROW(outer(g.constant(Tensor(Shape{2, 1})), g.constant(Tensor(Shape{3}))), DimensionError);
}

TEST(Outer, MatchesDoubleLoop) {
    const Tensor a = random_tensor({3}, 11);
    const Tensor b = random_tensor({4}, 11 + 1);
    Graph g(Graph::Mode::inference);
    const Tensor r = outer(g.constant(a), g.constant(b)).value();
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t v = 0; v < 4; ++v) {
            EXPECT_NEAR(r.at(s, v), a[s] * b[v], 1e-15);
        }
    }
}

TEST(Outer, ColumnSumIsScaledRow) {
    const Tensor a = random_tensor({5}, 17);
    const Tensor b = random_tensor({6}, 18);
    Graph g(Graph::Mode::inference);
    const Tensor summed = reduce_sum(outer(g.constant(a), g.constant(b)), 0).value();
    double total = 0.0;
    for (double x : a.data()) {
        total += x;
    }
    for (std::size_t v = 0; v < 6; ++v) {
        EXPECT_NEAR(summed[v], total * b[v], 1e-12);
    }
}

TEST(ReduceSum, Examples) {
    Graph g(Graph::Mode::inference);
    EXPECT_EQ(reduce_sum(g.constant(Tensor::matrix({{1, 2}, {3, 4}})), 0).value(), Tensor::vector({4, 6}));
    EXPECT_EQ(reduce_sum(g.constant(Tensor(Shape{3, 2})), 1).value(), Tensor(Shape{3}));
    EXPECT_THROW(reduce_sum(g.constant(Tensor(Shape{3, 2})), 2), DimensionError);
}

TEST(ReduceSum, MatchesLoop) {
    const Tensor a = random_tensor({5, 7}, 3);
    Graph g(Graph::Mode::inference);
    const Tensor r = reduce_sum(g.constant(a), 1).value();
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j) {
            s += a.at(i, j);
        }
        EXPECT_NEAR(r[i], s, 1e-12);
    }
}

Tensor identity_tap_kernel(std::size_t k, std::size_t D) {
    Tensor kern(Shape{k, D, D});
    for (std::size_t d = 0; d < D; ++d) {
        kern.at(k / 2, d, d) = 1.0;
    }
    return kern;
}

TEST(Conv1d, IdentityTapIsExactIdentity) {
    const Tensor x = random_tensor({8, 3}, 23);
    Graph g(Graph::Mode::inference);
    EXPECT_EQ(conv1d(g.constant(x), g.constant(identity_tap_kernel(3, 3))).value(), x);
    EXPECT_EQ(conv1d(g.constant(x), g.constant(identity_tap_kernel(5, 3))).value(), x);
}

TEST(Conv1d, ZeroKernelAndEvenSize) {
    const Tensor x = random_tensor({8, 2}, 24);
    Graph g(Graph::Mode::inference);
    EXPECT_EQ(conv1d(g.constant(x), g.constant(Tensor(Shape{3, 2, 2}))).value(), Tensor(Shape{8, 2}));
    EXPECT_THROW(conv1d(g.constant(x), g.constant(Tensor(Shape{2, 2, 2}))), ConfigError);
}

TEST(Conv1d, MatchesQuadrupleLoop) {
    const std::size_t T = 8, D = 2, k = 3;
    const Tensor x = random_tensor({T, D}, 5);
    const Tensor kern = random_tensor({k, D, D}, 5 + 1);
    Graph g(Graph::Mode::inference);
    const Tensor out = conv1d(g.constant(x), g.constant(kern)).value();
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                for (std::size_t e = 0; e < D; ++e) {
                    long src = static_cast<long>(t + j) - 1;
                    src = std::clamp(src, 0L, static_cast<long>(T) - 1);
                    s += kern.at(j, e, d) * x.at(static_cast<std::size_t>(src), e);
                }
            }
            EXPECT_NEAR(out.at(t, d), s, 1e-12);
        }
    }
}

TEST(Backward, SumOfSquares) {
    Graph g;
    auto p = g.parameter(Tensor::vector({1, 2, 3}));
    g.backward(sum_all(square(p)));
    EXPECT_EQ(g.grad(p), Tensor::vector({2, 4, 6}));
}

TEST(Backward, IndependentParameterGetsZeros) {
    Graph g;
    auto p = g.parameter(Tensor::vector({1, 2, 3}));
    auto q = g.parameter(Tensor::vector({4, 5}));
    g.backward(sum_all(square(q)));
    EXPECT_EQ(g.grad(p), Tensor(Shape{3}));
}

TEST(Backward, Contracts) {
    Graph g;
    auto p = g.parameter(Tensor::vector({1, 2, 3}));
    EXPECT_THROW(g.backward(square(p)), ContractError);
    Graph inf(Graph::Mode::inference);
    auto c = inf.parameter(Tensor::scalar(1.0));
    EXPECT_THROW(inf.backward(c), ContractError);
}

TEST(Backward, ReverseOrderReplay) {
    // Repeated backward on the same tape must reproduce the same adjoints.
    Graph g;
    auto a = g.parameter(random_tensor({3, 3}, 31));
    auto b = g.parameter(random_tensor({3}, 32));
    auto loss = sum_all(sigmoid(matmul(a, b)));
    g.backward(loss);
    const Tensor first = g.grad(a);
    g.backward(loss);
    EXPECT_EQ(g.grad(a), first);
}

// Finite-difference contract for each differentiable op.

constexpr double kTol = 1e-4;

TEST(GradCheck, Matmul) {
    auto fn = [](Graph& g, const std::vector<Var>& v) { return probe_loss(g, matmul(v[0], v[1]), 1); };
    EXPECT_LT(max_grad_error(fn, {random_tensor({3, 4}, 40), random_tensor({4, 2}, 41)}), kTol);
    EXPECT_LT(max_grad_error(fn, {random_tensor({3, 4}, 42), random_tensor({4}, 43)}), kTol);
    EXPECT_LT(max_grad_error(fn, {random_tensor({4}, 44), random_tensor({4, 5}, 45)}), kTol);
}

TEST(GradCheck, BroadcastArithmetic) {
    auto fn = [](Graph& g, const std::vector<Var>& v) {
        auto x = add(v[0], v[1]);
        x = mul(x, v[2]);
        x = sub(x, v[3]);
        return probe_loss(g, scale(shift(x, 0.3), -1.7), 2);
    };
    EXPECT_LT(max_grad_error(fn, {random_tensor({3, 4}, 50), random_tensor({1, 4}, 51), random_tensor({3, 1}, 52),
                                  random_tensor({}, 53)}),
              kTol);
}

TEST(GradCheck, Nonlinearities) {
    auto fn = [](Graph& g, const std::vector<Var>& v) {
        auto x = v[0];
        auto s = add(add(sigmoid(x), cos(x)), sin(x));
        auto r = relu(x);
        auto q = sqrt_guarded(add(square(x), g.constant(Tensor::scalar(0.5))));
        return probe_loss(g, add(add(s, r), q), 3);
    };
    // keep away from the relu kink
    Tensor x = random_tensor({4, 5}, 60);
    for (auto& e : x.data()) {
        if (std::abs(e) < 1e-2) {
            e = 0.25;
        }
    }
    EXPECT_LT(max_grad_error(fn, {x}), kTol);
}

TEST(GradCheck, RatioArctan) {
    auto fn = [](Graph& g, const std::vector<Var>& v) { return probe_loss(g, ratio_arctan(v[0], v[1]), 4); };
    Tensor den = random_tensor({3, 3}, 71, 0.5, 2.0);
    den[4] = -den[4];
    EXPECT_LT(max_grad_error(fn, {random_tensor({3, 3}, 70), den}), kTol);
}

TEST(GradCheck, OuterReduceConv) {
    auto fn = [](Graph& g, const std::vector<Var>& v) {
        auto o = outer(v[0], v[1]);
        auto c = conv1d(v[2], v[3]);
        return add(probe_loss(g, reduce_sum(o, 1), 5), probe_loss(g, reduce_sum(c, 0), 6));
    };
    EXPECT_LT(max_grad_error(fn, {random_tensor({3}, 80), random_tensor({4}, 81), random_tensor({8, 2}, 82),
                                  random_tensor({3, 2, 2}, 83)}),
              kTol);
}

TEST(GradCheck, ShapeOps) {
    auto fn = [](Graph& g, const std::vector<Var>& v) {
        auto padded = pad_front_replicate(v[0], 3);           // [9,2]
        auto t = transpose(padded);                            // [2,9]
        auto r = reshape(t, {6, 3});                           // [6,3]
        auto row = select(r, 4);                               // [3]
        auto st = stack({row, select(r, 1)});                  // [2,3]
        auto cat = concat({st, transpose(reshape(v[1], {3, 2}))}, 0);  // [4,3]
        auto cat1 = concat({cat, cat}, 1);                     // [4,6]
        return probe_loss(g, cat1, 7);
    };
    EXPECT_LT(max_grad_error(fn, {random_tensor({6, 2}, 90), random_tensor({6}, 91)}), kTol);
}

TEST(ShapeOps, PadFrontReplicatesFirstRow) {
    Graph g(Graph::Mode::inference);
    const Tensor p = pad_front_replicate(g.constant(Tensor::matrix({{1, 2}, {3, 4}})), 2).value();
    EXPECT_EQ(p, Tensor::matrix({{1, 2}, {1, 2}, {1, 2}, {3, 4}}));
}

TEST(Properties, RandomizedOpsStayFinite) {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        Graph g(Graph::Mode::inference);
        auto a = g.constant(rng.uniform_tensor({4, 4}, -50, 50));
        auto b = g.constant(rng.uniform_tensor({4, 4}, -50, 50));
        EXPECT_TRUE(all_finite(sigmoid(matmul(a, b)).value()));
        EXPECT_TRUE(all_finite(ratio_arctan(a, b).value()));
        EXPECT_TRUE(all_finite(sqrt_guarded(square(a)).value()));
    }
}

}  // namespace
}  // namespace afgm
