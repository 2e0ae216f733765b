#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tvdn/dct.hpp"
#include "tvdn/grid.hpp"

using namespace tvdn;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST(LatticeShape, CountsSitesAndEdges) {
    EXPECT_EQ(LatticeShape::line(10).num_edges(), 9u);
    EXPECT_EQ(LatticeShape::cube(64, 2).num_edges(), 8064u);
    EXPECT_EQ(LatticeShape::cube(4, 3).num_edges(), 3u * 16u * 3u);
    EXPECT_EQ(LatticeShape({3, 5}).num_sites(), 15u);
    EXPECT_EQ(LatticeShape({3, 5}).num_edges(), 2u * 5u + 3u * 4u);
    EXPECT_NEAR(LatticeShape({4, 16}).mean_side(), 8.0, 1e-12);
    EXPECT_EQ(LatticeShape({3, 5}).to_string(), "3x5");
}

TEST(LatticeShape, RejectsBadSizes) {
    EXPECT_THROW(LatticeShape(std::vector<std::size_t>{}), InputError);
    EXPECT_THROW(LatticeShape({3, 0}), InputError);
}

TEST(Signal, ValidatesInput) {
    EXPECT_THROW(Signal(LatticeShape({2, 2}), {1.0, 2.0, 3.0}), InputError);
    EXPECT_THROW(Signal::line({1.0, std::nan("")}), InputError);
    EXPECT_THROW(Signal::line({1.0, INFINITY}), InputError);
}

TEST(Diff, TwoByTwoOrdering) {
    // Row-major picture [[0, 1], [2, 3]] with x fastest.
    Signal f(LatticeShape({2, 2}), {0.0, 1.0, 2.0, 3.0});
    const auto d = apply_diff(f);
    ASSERT_EQ(d.size(), 4u);
    EXPECT_EQ(d[0], 1.0);
    EXPECT_EQ(d[1], 1.0);
    EXPECT_EQ(d[2], 2.0);
    EXPECT_EQ(d[3], 2.0);
}

TEST(Diff, MatchesDenseOperator) {
    for (const std::vector<std::size_t>& sizes :
         {std::vector<std::size_t>{7}, {3, 4}, {4, 3}, {2, 3, 4}, {1, 5}, {5, 1, 2}}) {
        LatticeShape shape(sizes);
        const auto x = random_vector(shape.num_sites(), 3);
        const auto w = random_vector(shape.num_edges(), 4);
        const Eigen::MatrixXd b = oracle::dense_diff(sizes);
        const Eigen::VectorXd xe = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
        const Eigen::VectorXd we = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        const Eigen::VectorXd bx = b * xe;
        const Eigen::VectorXd btw = b.transpose() * we;
        const Eigen::VectorXd lx = b.transpose() * bx;
        const auto d = apply_diff(Signal(shape, x));
        const auto a = apply_diff_adjoint(w, shape);
        const auto l = apply_laplacian(Signal(shape, x));
        for (std::size_t e = 0; e < d.size(); ++e) EXPECT_NEAR(d[e], bx(e), 1e-14);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i], btw(i), 1e-14);
            EXPECT_NEAR(l[i], lx(i), 1e-13);
        }
    }
}

TEST(Diff, AdjointIdentity) {
    LatticeShape shape({6, 5, 4});
    const auto x = random_vector(shape.num_sites(), 11);
    const auto w = random_vector(shape.num_edges(), 12);
    const auto bx = apply_diff(Signal(shape, x));
    const auto btw = apply_diff_adjoint(w, shape);
    EXPECT_NEAR(detail::dot(bx, w), detail::dot(x, btw.values), 1e-12);
}

TEST(Diff, ConstantsAreInTheNullSpace) {
    const auto d = apply_diff(Signal::constant(LatticeShape({4, 5, 3}), 2.5));
    EXPECT_EQ(detail::norm_inf(d), 0.0);
}

TEST(Diff, RejectsWrongLength) {
    std::vector<double> w(3);
    EXPECT_THROW(apply_diff_adjoint(w, LatticeShape({2, 2})), InputError);
}

TEST(LaplacianSolve, InvertsOnMeanZeroSubspace) {
    for (const std::vector<std::size_t>& sizes :
         {std::vector<std::size_t>{50}, {16, 16}, {6, 7, 5}}) {
        LatticeShape shape(sizes);
        auto x = random_vector(shape.num_sites(), 21);
        detail::subtract_mean(x);
        const auto rhs = apply_laplacian(Signal(shape, x));
        const auto sol = laplacian_solve(rhs, 1e-12);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(sol[i], x[i], 1e-8);
    }
}

TEST(LaplacianSolve, RejectsInconsistentRightHandSide) {
    EXPECT_THROW(laplacian_solve(Signal::constant(LatticeShape({4, 4}), 1.0)), InputError);
}

TEST(Diff, HandExamples) {
    const auto d = apply_diff(Signal::line({0.0, 2.0, 2.0}));
    EXPECT_EQ(d, (std::vector<double>{2.0, 0.0}));
    const std::vector<double> w = {1.0};
    EXPECT_EQ(apply_diff_adjoint(w, LatticeShape::line(2)).values, (std::vector<double>{-1.0, 1.0}));
}

TEST(LatticeShape, EdgeCountFormula) {
    for (std::size_t d = 1; d <= 3; ++d) {
        std::vector<std::size_t> sizes(d, 2);
        for (;;) {
            LatticeShape shape(sizes);
            std::size_t counted = 0;
            for_each_edge(shape, [&](std::size_t, std::size_t, std::size_t) { ++counted; });
            double inv = 0.0;
            for (auto n : sizes) inv += 1.0 / static_cast<double>(n);
            const double formula = static_cast<double>(shape.num_sites()) * (static_cast<double>(d) - inv);
            EXPECT_EQ(counted, shape.num_edges());
            EXPECT_NEAR(static_cast<double>(counted), formula, 1e-9);
            EXPECT_EQ(oracle::lattice_edges(sizes).size(), counted);
            std::size_t k = 0;
            while (k < d && ++sizes[k] == 7) sizes[k++] = 2;
            if (k == d) break;
        }
    }
}

TEST(Diff, EdgeOrderMatchesIndependentEnumeration) {
    const std::vector<std::size_t> sizes = {3, 4, 2};
    const auto ref = oracle::lattice_edges(sizes);
    std::vector<oracle::Edge> got;
    for_each_edge(LatticeShape(sizes), [&](std::size_t e, std::size_t a, std::size_t b) {
        EXPECT_EQ(e, got.size());
        got.push_back({a, b});
    });
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t e = 0; e < ref.size(); ++e) {
        EXPECT_EQ(got[e].near, ref[e].near);
        EXPECT_EQ(got[e].far, ref[e].far);
    }
}

TEST(LaplacianSolve, ZeroAndResidual) {
    const auto zero = laplacian_solve(Signal::constant(LatticeShape({4, 4}), 0.0));
    EXPECT_EQ(detail::norm_inf(zero.values), 0.0);
    LatticeShape shape({4, 4});
    auto rhs = random_vector(shape.num_sites(), 5);
    detail::subtract_mean(rhs);
    const auto x = laplacian_solve(Signal(shape, rhs), 1e-10);
    const auto lx = apply_laplacian(x);
    std::vector<double> r(rhs.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = lx[i] - rhs[i];
    EXPECT_LE(detail::norm2(r), 1e-10 * detail::norm2(rhs));
    EXPECT_NEAR(x.mean(), 0.0, 1e-10);
}

TEST(LaplacianDct, MatchesConjugateGradient) {
    for (const std::vector<std::size_t>& sizes :
         {std::vector<std::size_t>{9}, {5, 7}, {4, 3, 5}}) {
        LatticeShape shape(sizes);
        const auto rhs = random_vector(shape.num_sites(), 31);
        std::vector<double> x(rhs.size());
        detail::LaplacianDct dct(shape);
        dct.solve(1.0, 2.5, rhs, x);
        // (I + 2.5 L) x should reproduce rhs.
        std::vector<double> lx(x.size());
        detail::laplacian_into(shape, {}, x, lx);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i] + 2.5 * lx[i], rhs[i], 1e-12);
    }
}
