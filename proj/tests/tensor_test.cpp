#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dverg/grad_check.hpp"
#include "dverg/param_store.hpp"
#include "dverg/tensor.hpp"

using dverg::ParameterStore;
using dverg::Tensor;

namespace {

using DT = Tensor<double>;

DT rand_tensor(std::vector<int> shape, std::mt19937& rng, bool requires_grad = true) {
    auto t = DT::uniform(std::move(shape), -1.0, 1.0, rng);
    t.set_requires_grad(requires_grad);
    return t;
}

// finite-difference check of a scalar function of a single tensor input
template <class F>
double fd_check(DT& x, F&& f, double eps = 1e-5) {
    x.set_requires_grad(true);
    x.zero_grad();
    DT loss = f();
    dverg::backward(loss);
    std::vector<double> analytic = x.grad();

    double max_rel = 0.0;
    for (size_t i = 0; i < x.data().size(); ++i) {
        double saved = x.data()[i];
        x.data()[i] = saved + eps;
        double fp = f().value();
        x.data()[i] = saved - eps;
        double fm = f().value();
        x.data()[i] = saved;
        double numeric = (fp - fm) / (2 * eps);
        double rel = std::abs(analytic[i] - numeric) /
                     std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

TEST(Tensor, SumGradIsOnes) {
    auto w = Tensor<float>::from({3}, {0.5f, -1.0f, 2.0f});
    w.set_requires_grad(true);
    auto loss = dverg::sum(w);
    dverg::backward(loss);
    EXPECT_EQ(w.grad(), (std::vector<float>{1.f, 1.f, 1.f}));
}

TEST(Tensor, DotSelfGradIsTwiceInput) {
    auto w = Tensor<float>::from({2}, {1.f, 2.f});
    w.set_requires_grad(true);
    auto loss = dverg::dot(w, w);
    dverg::backward(loss);
    EXPECT_FLOAT_EQ(loss.value(), 5.f);
    EXPECT_EQ(w.grad(), (std::vector<float>{2.f, 4.f}));
}

TEST(Tensor, BackwardRejectsNonScalar) {
    auto w = Tensor<float>::from({2}, {1.f, 2.f});
    w.set_requires_grad(true);
    auto y = dverg::scale(w, 2.f);
    EXPECT_THROW(dverg::backward(y), std::invalid_argument);
}

TEST(Tensor, BackwardRejectsDetachedGraph) {
    auto w = Tensor<float>::from({2}, {1.f, 2.f});
    auto loss = dverg::sum(w);  // no requires_grad anywhere
    EXPECT_THROW(dverg::backward(loss), std::invalid_argument);
}

TEST(Tensor, RepeatedBackwardAccumulates) {
    auto w = Tensor<float>::from({2}, {1.f, 2.f});
    w.set_requires_grad(true);
    auto loss = dverg::sum(w);
    dverg::backward(loss);
    dverg::backward(loss);
    EXPECT_EQ(w.grad(), (std::vector<float>{2.f, 2.f}));
}

TEST(Tensor, TwoLayerTanhNetMatchesFiniteDifferences) {
    std::mt19937 rng(7);
    ParameterStore<double> params;
    params.add("w1", DT::xavier({5, 4}, rng));
    params.add("b1", DT::zeros({5}));
    params.add("w2", DT::xavier({3, 5}, rng));
    params.add("b2", DT::zeros({3}));
    auto x = DT::uniform({4}, -1.0, 1.0, rng);

    auto f = [&]() {
        auto h = dverg::tanh(dverg::add(dverg::matvec(params.at("w1"), x), params.at("b1")));
        auto y = dverg::tanh(dverg::add(dverg::matvec(params.at("w2"), h), params.at("b2")));
        return dverg::sum(y);
    };
    EXPECT_LT(dverg::grad_check(f, params, 1e-3), 1e-4);
}

TEST(Tensor, GradCheckExactOnSumOfSquares) {
    std::mt19937 rng(11);
    ParameterStore<double> params;
    params.add("w", rand_tensor({6}, rng));
    auto f = [&]() { return dverg::dot(params.at("w"), params.at("w")); };
    EXPECT_LT(dverg::grad_check(f, params, 1e-3), 1e-6);
}

TEST(Tensor, GradCheckConstantFunction) {
    std::mt19937 rng(13);
    ParameterStore<double> params;
    params.add("w", rand_tensor({4}, rng));
    auto f = [&]() { return dverg::scale(dverg::sum(dverg::mul(params.at("w"),
                      DT::zeros({4}))), 1.0); };
    EXPECT_LT(dverg::grad_check(f, params, 1e-3), 1e-8);
}

TEST(Tensor, GradCheckRejectsNonPositiveEps) {
    ParameterStore<double> params;
    params.add("w", DT::from({1}, {1.0}));
    auto f = [&]() { return dverg::sum(params.at("w")); };
    EXPECT_THROW(dverg::grad_check(f, params, 0.0), std::invalid_argument);
}

// every differentiable op against central differences, 64 random trials total
TEST(Tensor, PerOpFiniteDifferenceSweep) {
    std::mt19937 rng(42);
    double worst = 0.0;
    for (int trial = 0; trial < 64; ++trial) {
        auto a = rand_tensor({3, 4}, rng);
        auto b = rand_tensor({3, 4}, rng);
        auto v4 = rand_tensor({4}, rng);
        auto v3 = rand_tensor({3}, rng);
        auto m43 = rand_tensor({4, 3}, rng);

        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::add(a, b)); }));
        worst = std::max(worst, fd_check(b, [&] { return dverg::sum(dverg::sub(a, b)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::mul(a, b)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::scale(a, 1.7)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::one_minus(a)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::sigmoid(a)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::tanh(a)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::relu(a)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::matvec(a, v4)); }));
        worst = std::max(worst, fd_check(v4, [&] { return dverg::sum(dverg::matvec(a, v4)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::matvec_t(a, v3)); }));
        worst = std::max(worst, fd_check(v3, [&] { return dverg::sum(dverg::matvec_t(a, v3)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::matmul(a, m43)); }));
        worst = std::max(worst, fd_check(m43, [&] { return dverg::sum(dverg::matmul(a, m43)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::matmul_nt(a, b)); }));
        worst = std::max(worst, fd_check(v4, [&] { return dverg::dot(v4, v4); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::add_rowvec(a, v4)); }));
        worst = std::max(worst, fd_check(v4, [&] { return dverg::sum(dverg::add_rowvec(a, v4)); }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::mean(a); }));
        worst = std::max(worst, fd_check(v4, [&] {
            return dverg::sum(dverg::concat<double>({v4, v3}));
        }));
        worst = std::max(worst, fd_check(v4, [&] {
            return dverg::sum(dverg::stack_rows<double>({v4, v4}));
        }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::row(a, 1)); }));
        worst = std::max(worst, fd_check(a, [&] {
            return dverg::sum(dverg::gather_rows(a, {2, 0, 2}));
        }));
        worst = std::max(worst, fd_check(v4, [&] {
            return dverg::sum(dverg::gather(v4, {3, 1, 3}));
        }));
        worst = std::max(worst, fd_check(a, [&] { return dverg::sum(dverg::col_max(a)); }));
        worst = std::max(worst, fd_check(a, [&] {
            return dverg::sum(dverg::l2_normalize_rows(a));
        }));
        worst = std::max(worst, fd_check(v4, [&] {
            return dverg::dot(dverg::softmax(v4), DT::from({4}, {0.3, -0.2, 0.5, 0.1}));
        }));
        worst = std::max(worst, fd_check(v4, [&] { return dverg::nll(v4, 2); }));
        worst = std::max(worst, fd_check(v4, [&] {
            auto p = dverg::sigmoid(v4);
            return dverg::bce_indexed(p, {0, 1, 2, 3}, {1, 0, 1, 0});
        }));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Tensor, BackwardIsLinear) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 8; ++trial) {
        auto w = rand_tensor({5}, rng);
        double ca = 0.7, cb = -1.3;

        auto run = [&](double sa, double sb) {
            w.zero_grad();
            auto l1 = dverg::dot(w, w);
            auto l2 = dverg::sum(dverg::tanh(w));
            auto loss = dverg::add(dverg::scale(l1, sa), dverg::scale(l2, sb));
            dverg::backward(loss);
            return w.grad();
        };

        auto g1 = run(1.0, 0.0);
        auto g2 = run(0.0, 1.0);
        auto gc = run(ca, cb);
        for (size_t i = 0; i < gc.size(); ++i)
            EXPECT_NEAR(gc[i], ca * g1[i] + cb * g2[i], 1e-6);
    }
}

TEST(Tensor, ForwardIsDeterministic) {
    auto run = [] {
        std::mt19937 rng(99);
        auto w = Tensor<float>::xavier({8, 8}, rng);
        auto x = Tensor<float>::uniform({8}, -1.f, 1.f, rng);
        auto y = dverg::softmax(dverg::matvec(w, x));
        return y.data();
    };
    EXPECT_EQ(run(), run());
}

TEST(Tensor, ShapeMismatchThrows) {
    auto a = Tensor<float>::zeros({2, 3});
    auto b = Tensor<float>::zeros({3, 2});
    EXPECT_THROW(dverg::add(a, b), std::invalid_argument);
    EXPECT_THROW(dverg::matvec(a, Tensor<float>::zeros({2})), std::invalid_argument);
}

TEST(ParameterStore, IterationFollowsInsertionOrder) {
    ParameterStore<float> store;
    store.add("zeta", Tensor<float>::zeros({2}));
    store.add("alpha", Tensor<float>::zeros({3}));
    store.add("mid", Tensor<float>::zeros({1}));
    std::vector<std::string> names;
    for (auto& [name, t] : store) names.push_back(name);
    EXPECT_EQ(names, (std::vector<std::string>{"zeta", "alpha", "mid"}));
    EXPECT_THROW(store.add("alpha", Tensor<float>::zeros({1})), std::invalid_argument);
    EXPECT_THROW(store.at("nope"), std::out_of_range);
}

TEST(ParameterStore, CheckpointRoundTripIsBitExact) {
    std::mt19937 rng(5);
    ParameterStore<float> store;
    store.add("emb", Tensor<float>::xavier({7, 3}, rng));
    store.add("bias", Tensor<float>::uniform({4}, -2.f, 2.f, rng));
    store.add("w", Tensor<float>::xavier({2, 2}, rng));

    std::stringstream ss;
    store.save(ss);
    std::string blob1 = ss.str();
    EXPECT_EQ(blob1.substr(0, 6), "DVERG1");

    std::stringstream in(blob1);
    auto loaded = ParameterStore<float>::load(in);
    ASSERT_EQ(loaded.size(), store.size());
    for (auto& [name, t] : store) {
        ASSERT_TRUE(loaded.contains(name));
        EXPECT_EQ(loaded.at(name).shape(), t.shape());
        EXPECT_EQ(loaded.at(name).data(), t.data());
    }

    std::stringstream ss2;
    loaded.save(ss2);
    EXPECT_EQ(ss2.str(), blob1);
}

TEST(ParameterStore, LoadRejectsBadMagic) {
    std::stringstream ss;
    ss << "NOTDV1";
    EXPECT_THROW(ParameterStore<float>::load(ss), std::runtime_error);
}

}  // namespace
