#include <gtest/gtest.h>

#include <cmath>

#include "pairfair/error.hpp"
#include "pairfair/logreg.hpp"
#include "support/fixtures.hpp"

using namespace pairfair;
using pairfair::fixture::encoded_from;
using pairfair::fixture::uniform;

namespace {

struct Instance {
    EncodedDataset data;
    PairSet pairs;
    LogisticModel model;
    TrainConfig cfg;
};

Instance random_instance(Rng& rng) {
    Instance in;
    const std::size_t n = 5 + rng.below(26);
    const std::size_t f = 1 + rng.below(5);
    Matrix x(n, f);
    std::vector<std::uint8_t> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < f; ++c) x(r, c) = uniform(rng, -2, 2);
        y[r] = rng.below(2);
    }
    in.data = encoded_from(x, y);
    const std::size_t m = 1 + rng.below(10);
    for (std::size_t k = 0; k < m; ++k) {
        const auto i = rng.below(n);
        auto j = rng.below(n - 1);
        if (j >= i) ++j;
        in.pairs.pairs.push_back({i, j, uniform(rng, 0.1, 3.0)});
    }
    in.model = LogisticModel(f);
    for (auto& w : in.model.weights) w = uniform(rng, -1, 1);
    in.model.bias = uniform(rng, -1, 1);
    in.cfg.eta = rng.below(5) == 0 ? 0.0 : uniform(rng, 0.01, 5);
    in.cfg.l2 = rng.below(2) ? 0.0 : uniform(rng, 0, 0.1);
    return in;
}

double total_loss(const Instance& in, const LogisticModel& m) {
    return logistic_loss(m, in.data, in.pairs, in.cfg).total;
}

double accuracy_of(const LogisticModel& m, const EncodedDataset& d) {
    const auto p = m.predict_proba(d.matrix);
    std::size_t ok = 0;
    for (std::size_t r = 0; r < d.size(); ++r) ok += (p[r] >= 0.5) == (d.labels[r] == 1);
    return static_cast<double>(ok) / static_cast<double>(d.size());
}

// Noisy linearly related data that is not separable.
EncodedDataset noisy_data(Rng& rng, std::size_t n, std::size_t f) {
    Matrix x(n, f);
    std::vector<std::uint8_t> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < f; ++c) {
            x(r, c) = c == 0 ? static_cast<double>(rng.below(2)) : uniform(rng, -1, 1);
            s += (c % 2 ? 1.0 : -0.7) * x(r, c);
        }
        y[r] = uniform(rng, 0, 1) < 1.0 / (1.0 + std::exp(-2.0 * s));
    }
    return encoded_from(x, y);
}

}  // namespace

TEST(LogregProperty, GradientMatchesCentralDifferences) {
    Rng rng(101);
    const double h = 1e-6;
    int with_eta = 0;
    for (int t = 0; t < 100; ++t) {
        const auto in = random_instance(rng);
        with_eta += in.cfg.eta > 0;
        const auto g = gradient(in.model, in.data, in.pairs, in.cfg);
        ASSERT_EQ(g.size(), in.model.weights.size() + 1);
        for (std::size_t k = 0; k < g.size(); ++k) {
            auto plus = in.model, minus = in.model;
            double& up = k < in.model.weights.size() ? plus.weights[k] : plus.bias;
            double& down = k < in.model.weights.size() ? minus.weights[k] : minus.bias;
            up += h;
            down -= h;
            const double numeric = (total_loss(in, plus) - total_loss(in, minus)) / (2 * h);
            // Floor keeps the ratio meaningful when both values are ~0.
            const double rel = std::abs(g[k] - numeric) / std::max({std::abs(g[k]), std::abs(numeric), 1e-6});
            EXPECT_LE(rel, 1e-5) << "instance " << t << " coord " << k << " analytic " << g[k] << " numeric "
                                 << numeric;
        }
    }
    EXPECT_GT(with_eta, 50);
}

TEST(LogregGradient, SymmetricDataHasZeroWeightGradient) {
    Matrix x(4, 2);
    const double pts[4][2] = {{1, 2}, {-1, -2}, {0.5, -3}, {-0.5, 3}};
    for (std::size_t r = 0; r < 4; ++r) {
        x(r, 0) = pts[r][0];
        x(r, 1) = pts[r][1];
    }
    // x and -x share a label, so sum (0.5 - y) x cancels within each pair.
    const auto data = encoded_from(x, {1, 1, 0, 0});
    TrainConfig cfg;
    cfg.l2 = 0;
    const auto g = gradient(LogisticModel(2), data, PairSet{}, cfg);
    EXPECT_EQ(g[0], 0.0);
    EXPECT_EQ(g[1], 0.0);
}

TEST(LogregGradient, IdenticalPairMembersContributeNothing) {
    Rng rng(7);
    Matrix x(4, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        x(0, c) = uniform(rng, -1, 1);
        x(1, c) = x(0, c);
        x(2, c) = uniform(rng, -1, 1);
        x(3, c) = uniform(rng, -1, 1);
    }
    const auto data = encoded_from(x, {1, 0, 1, 0});
    LogisticModel m(3);
    m.weights = {0.3, -0.2, 0.7};
    m.bias = 0.1;
    TrainConfig plain, penalized;
    penalized.eta = 3.0;
    const auto a = gradient(m, data, fixture::pairs_of({{0, 1, 2.0}}), penalized);
    const auto b = gradient(m, data, PairSet{}, plain);
    EXPECT_EQ(a, b);
}

TEST(LogregPredict, Examples) {
    Matrix x(2, 3);
    x(0, 0) = 1;
    x(0, 1) = -2;
    x(0, 2) = 0.5;
    x(1, 0) = 3;
    x(1, 1) = 1;
    x(1, 2) = -1;
    for (double p : LogisticModel(3).predict_proba(x)) EXPECT_EQ(p, 0.5);

    LogisticModel m(3);
    m.weights = {0.5, 0.25, 2.0};
    m.bias = -1.0;
    const auto p = m.predict_proba(x);
    EXPECT_EQ(p[0], 0.5);  // 0.5 - 0.5 + 1 - 1 = 0
    EXPECT_NEAR(p[1], 1.0 / (1.0 + std::exp(-(1.5 + 0.25 - 2.0 - 1.0))), 1e-15);
    EXPECT_THROW(m.predict_proba(Matrix(1, 2)), DataError);
}

TEST(LogregTrain, EtaZeroIsBitwisePlainTraining) {
    Rng rng(8);
    const auto data = noisy_data(rng, 200, 4);
    const auto pairs = fixture::pairs_of({{0, 1, 1.0}, {2, 3, 0.5}, {10, 40, 2.0}});
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.l2 = 0;
    const auto with_pairs = train_logreg(data, pairs, cfg).model;
    const auto plain = train_logreg(data, PairSet{}, cfg).model;
    EXPECT_EQ(with_pairs.weights, plain.weights);
    EXPECT_EQ(with_pairs.bias, plain.bias);
    cfg.standardize = false;
    EXPECT_EQ(train_logreg(data, pairs, cfg).model.weights, train_logreg(data, PairSet{}, cfg).model.weights);
}

TEST(LogregTrain, SeparableDataReachesPerfectAccuracy) {
    Rng rng(9);
    Matrix x(100, 2);
    std::vector<std::uint8_t> y(100);
    for (std::size_t r = 0; r < 100; ++r) {
        y[r] = r % 2;
        const double side = y[r] ? 1.0 : -1.0;
        x(r, 0) = side * uniform(rng, 0.2, 2.0) + 0.1 * uniform(rng, -1, 1);
        x(r, 1) = uniform(rng, -3, 3);
    }
    const auto data = encoded_from(x, y);
    const auto result = train_logreg(data, PairSet{}, TrainConfig{});
    EXPECT_EQ(accuracy_of(result.model, data), 1.0);
}

TEST(LogregTrain, DeterministicAndTraceConsistent) {
    Rng rng(10);
    const auto data = noisy_data(rng, 150, 3);
    PairSet pairs;
    for (std::size_t k = 0; k < 20; ++k) pairs.pairs.push_back({k, 149 - k, 0.25 + 0.05 * static_cast<double>(k)});
    TrainConfig cfg;
    cfg.eta = 0.7;
    cfg.epochs = 200;
    const auto a = train_logreg(data, pairs, cfg);
    const auto b = train_logreg(data, pairs, cfg);
    EXPECT_EQ(a.model.weights, b.model.weights);
    EXPECT_EQ(a.model.bias, b.model.bias);
    ASSERT_EQ(a.trace.epochs.size(), 200u);
    for (const auto& e : a.trace.epochs) {
        EXPECT_NEAR(e.total, e.ce + cfg.eta * e.pair + e.l2, 1e-15);
    }
    // The last trace entry is the loss of the returned model.
    const auto final_loss = logistic_loss(a.model, data, pairs, cfg);
    EXPECT_NEAR(final_loss.total, a.trace.epochs.back().total, 1e-12);
}

TEST(LogregTrain, PenaltyBoundedByEta) {
    Rng rng(11);
    const auto data = noisy_data(rng, 120, 3);
    PairSet pairs;
    for (std::size_t k = 0; k < 30; ++k) pairs.pairs.push_back({k, k + 60, uniform(rng, 0.1, 1.0)});
    for (double eta : {0.1, 1.0, 10.0}) {
        TrainConfig cfg;
        cfg.eta = eta;
        cfg.epochs = 100;
        for (const auto& e : train_logreg(data, pairs, cfg).trace.epochs) EXPECT_LE(eta * e.pair, eta);
    }
}

TEST(LogregProperty, TradeOffIsMonotoneAtConvergence) {
    const double eps = 1e-6;
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        Rng rng(seed);
        const auto data = noisy_data(rng, 200, 4);
        PairSet pairs;
        for (std::size_t k = 0; k < 40; ++k) pairs.pairs.push_back({k, 100 + k, 1.0});
        double prev_ce = -1, prev_pair = 2;
        for (double eta : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 2.0}) {
            TrainConfig cfg;
            cfg.eta = eta;
            cfg.l2 = 0;
            cfg.epochs = 20000;
            const auto last = train_logreg(data, pairs, cfg).trace.epochs.back();
            EXPECT_LE(last.pair, prev_pair + eps) << "seed " << seed << " eta " << eta;
            EXPECT_GE(last.ce, prev_ce - eps) << "seed " << seed << " eta " << eta;
            prev_ce = last.ce;
            prev_pair = last.pair;
        }
    }
}

TEST(LogregTrain, Errors) {
    Rng rng(12);
    const auto data = noisy_data(rng, 20, 2);
    TrainConfig cfg;
    cfg.eta = 0.5;
    EXPECT_THROW(train_logreg(data, PairSet{}, cfg), DataError);
    cfg.eta = -1;
    EXPECT_THROW(train_logreg(data, PairSet{}, cfg), DataError);
    TrainConfig wild;
    wild.learning_rate = 1e306;
    wild.standardize = false;
    try {
        train_logreg(data, PairSet{}, wild);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(LogregModel, JsonRoundTrip) {
    LogisticModel m(3);
    m.weights = {0.1, -2.5e-7, 3.0};
    m.bias = -0.3;
    m.feature_names = {"a", "b=c", "d"};
    m.config.eta = 0.4;
    const auto back = logistic_from_json(to_json(m));
    EXPECT_EQ(back.weights, m.weights);
    EXPECT_EQ(back.bias, m.bias);
    EXPECT_EQ(back.feature_names, m.feature_names);
    EXPECT_EQ(back.config.eta, 0.4);
    EXPECT_EQ(to_json(back), to_json(m));
}

TEST(LogregTrace, CsvLayout) {
    TrainingTrace t;
    t.epochs.push_back({0.5, 0.25, 0.0, 0.6});
    EXPECT_EQ(trace_to_csv(t), "epoch,ce_loss,pair_loss,total\n1,0.5,0.25,0.6\n");
}
