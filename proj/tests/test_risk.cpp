#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tvdn/risk.hpp"
#include "tvdn/selection.hpp"
#include "tvdn/signals.hpp"

using namespace tvdn;

TEST(Ncc, SmallCases) {
    EXPECT_EQ(ncc(Signal::constant(LatticeShape({7, 5}), 1.0), 0.0), 1u);
    EXPECT_EQ(ncc(Signal(LatticeShape({2, 2}), {0, 1, 1, 0}), 0.0), 4u);
    EXPECT_EQ(ncc(gen_piecewise(PiecewiseKind::battlements, 100, 5, 3.0).realize(), 0.0), 5u);
    EXPECT_EQ(ncc(Signal::line({0, 1, 0}), 0.0), 3u);
    EXPECT_EQ(ncc(Signal::line({0, 1, 0}), 1.0), 1u);
    EXPECT_THROW(ncc(Signal::line({0, 1}), -1.0), InputError);
}

TEST(Ncc, MatchesFloodFill) {
    std::mt19937_64 rng(5);
    const std::vector<std::vector<std::size_t>> shapes = {{30}, {6, 7}, {9, 4}, {4, 5, 3}, {1, 12}};
    for (const auto& sizes : shapes) {
        const LatticeShape shape(sizes);
        for (int rep = 0; rep < 30; ++rep) {
            std::uniform_int_distribution<int> pick(0, 2);
            std::vector<double> v(shape.num_sites());
            for (double& x : v) x = pick(rng);
            const Signal f(shape, v);
            EXPECT_EQ(ncc(f, 0.0), oracle::flood_fill_components(sizes, v, 0.0));
            EXPECT_EQ(ncc(f, 1.0), oracle::flood_fill_components(sizes, v, 1.0));
        }
    }
}

TEST(Ncc, MonotoneInQuantization) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    const LatticeShape shape({12, 10});
    std::vector<double> v(shape.num_sites());
    for (double& x : v) x = g(rng);
    const Signal f(shape, v);
    std::size_t prev = ncc(f, 0.0);
    EXPECT_EQ(prev, 120u);
    for (double tau = 0.01; tau < 10.0; tau *= 1.5) {
        const auto c = ncc(f, tau);
        EXPECT_LE(c, prev);
        prev = c;
    }
    EXPECT_EQ(prev, 1u);
}

TEST(Ncc, DefaultQuantization) {
    EXPECT_EQ(default_quantization(std::vector<double>{2.0, 2.0}), 1e-8);
    EXPECT_DOUBLE_EQ(default_quantization(std::vector<double>{-500.0, 500.0}), 1e-2);
    // Sub-tolerance wiggles from an iterative solver merge.
    EXPECT_EQ(ncc(Signal::line({0.0, 1e-9, 5.0, 5.0 + 3e-5})), 2u);
}

TEST(Sure, IdentityEstimate) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> v(64);
    for (double& x : v) x = g(rng);
    const auto y = Signal::line(v);
    EXPECT_NEAR(sure(y, y, 1.7, 0.0), 1.7 * 1.7, 1e-12);
}

TEST(Sure, MeanEstimate) {
    const auto y = Signal::line({1, 4, 2, 7, 3});
    const double mean = 17.0 / 5.0;
    const auto f = Signal::constant(y.shape, mean);
    double rss = 0.0;
    for (double v : y.values) rss += (v - mean) * (v - mean);
    const double sigma = 0.8;
    EXPECT_NEAR(sure(y, f, sigma), rss / 5 + 2 * sigma * sigma / 5 - sigma * sigma, 1e-12);
}

TEST(Sure, TranslationInvariant) {
    const auto y = add_noise(gen_piecewise(PiecewiseKind::staircase, 60, 3, 2.0).realize(), {1.0, 4});
    const auto f = tv_solve(y, 3.0).estimate;
    auto shift = [](Signal s, double c) {
        for (double& v : s.values) v += c;
        return s;
    };
    EXPECT_NEAR(sure(y, f, 1.0, 1e-9), sure(shift(y, 100.0), shift(f, 100.0), 1.0, 1e-9), 1e-10);
    EXPECT_THROW(sure(y, Signal::line({1.0}), 1.0), InputError);
}

// Averaged over replicates, SURE tracks the true loss at every grid value.
// The grid values share replicates, so 5000 of them keep a two-standard-error
// band from being decided by a single unlucky draw.
TEST(Sure, UnbiasedOnZeroSignal) {
    const std::size_t n = 100;
    const int reps = 5000;
    const std::vector<double> grid = {0.5, 1.5, 3.0, 6.0, 12.0};
    std::vector<double> sum(grid.size(), 0.0), sum2(grid.size(), 0.0);
    for (int r = 0; r < reps; ++r) {
        const auto y = add_noise(Signal::constant(LatticeShape::line(n), 0.0), {1.0, 7000u + r});
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const auto f = tv_solve(y, grid[k]).estimate;
            const double diff = sure(y, f, 1.0) - mean_squared_error(f.values, std::vector<double>(n, 0.0));
            sum[k] += diff;
            sum2[k] += diff * diff;
        }
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double mean = sum[k] / reps;
        const double se = std::sqrt((sum2[k] / reps - mean * mean) / (reps - 1));
        EXPECT_LE(std::abs(mean), 2.0 * se) << "lambda " << grid[k];
    }
}

TEST(RiskCurve, DefaultGrid) {
    const auto g = default_lambda_grid(50.0);
    ASSERT_EQ(g.size(), 30u);
    EXPECT_NEAR(g.front(), 0.05, 1e-12);
    EXPECT_EQ(g.back(), 50.0);
    for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], std::pow(1e3, 1.0 / 29), 1e-12);
    EXPECT_EQ(default_lambda_grid(0.0), std::vector<double>{0.0});
}

TEST(RiskCurve, OracleOnDataPicksZero) {
    const auto y = add_noise(Signal::constant(LatticeShape({8, 8}), 0.0), {1.0, 2});
    const std::vector<double> grid = {2.0, 0.0, 0.5};
    const auto c = risk_curve(y, grid, OracleCriterion{y});
    EXPECT_EQ(c.lambdas, (std::vector<double>{0.0, 0.5, 2.0}));
    EXPECT_EQ(c.values.size(), 3u);
    EXPECT_EQ(c.argmin_lambda, 0.0);
    EXPECT_NEAR(c.values[0], 0.0, 1e-20);
}

TEST(RiskCurve, Validation) {
    const auto y = Signal::line({0, 1, 2});
    EXPECT_THROW(risk_curve(y, std::vector<double>{}, SureCriterion{1.0}), InputError);
    EXPECT_THROW(risk_curve(y, std::vector<double>{-1.0}, SureCriterion{1.0}), InputError);
    EXPECT_THROW(risk_curve(y, std::vector<double>{1.0}, OracleCriterion{Signal::line({0, 1})}), InputError);
}

TEST(RiskCurve, DeterministicAcrossThreads) {
    const auto f = gen_test_function(TestFunction::blocks, 400, 7.0);
    const auto y = add_noise(f, {1.0, 11});
    const auto grid = default_lambda_grid(lambda_max(y), 12);
    const auto a = risk_curve(y, grid, SureCriterion{1.0}, {}, 1);
    const auto b = risk_curve(y, grid, SureCriterion{1.0}, {}, 4);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.argmin_index, b.argmin_index);
    EXPECT_EQ(a.values[a.argmin_index], *std::min_element(a.values.begin(), a.values.end()));
}

TEST(RiskCurve, OracleMinimumIsInterior) {
    const auto f = gen_piecewise(PiecewiseKind::battlements, 200, 4, 3.0).realize();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto y = add_noise(f, {1.0, seed});
        const auto grid = default_lambda_grid(lambda_max(y));
        const auto c = risk_curve(y, grid, OracleCriterion{f});
        EXPECT_GT(c.argmin_index, 0u);
        EXPECT_LT(c.argmin_index, grid.size() - 1);
    }
}

TEST(RiskCurve, LatticeSureCurve) {
    const LatticeShape shape({24, 24});
    std::vector<double> v(shape.num_sites());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 24) < 12 ? 0.0 : 3.0;
    const Signal f(shape, v);
    const auto y = add_noise(f, {1.0, 6});
    const auto grid = default_lambda_grid(lambda_max(y), 10);
    const auto c = risk_curve(y, grid, SureCriterion{1.0}, {}, 2);
    EXPECT_EQ(c.components.size(), grid.size());
    EXPECT_GT(c.argmin_index, 0u);
    EXPECT_LT(c.argmin_index, grid.size() - 1);
}

TEST(RiskCurve, SureCloseToOracleOnBlocks) {
    const std::size_t n = 1000;
    const auto f = gen_test_function(TestFunction::blocks, n, 7.0);
    const int reps = 20;
    double sure_loss = 0.0, oracle_loss = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto y = add_noise(f, {1.0, 500u + r});
        const auto grid = default_lambda_grid(lambda_max(y), 60);
        const auto s = risk_curve(y, grid, SureCriterion{1.0}, {}, 4);
        const auto o = risk_curve(y, grid, OracleCriterion{f}, {}, 4);
        sure_loss += mean_squared_error(tv_solve(y, s.argmin_lambda).estimate.values, f.values);
        oracle_loss += o.values[o.argmin_index];
    }
    EXPECT_LE(sure_loss, 1.1 * oracle_loss);
    EXPECT_GE(sure_loss, oracle_loss);
}
