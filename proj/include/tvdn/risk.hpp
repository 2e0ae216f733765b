#pragma once

// Connected-component counting, SURE and threshold grid searches.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "tvdn/error.hpp"
#include "tvdn/grid.hpp"
#include "tvdn/parallel.hpp"
#include "tvdn/tv_solve.hpp"

namespace tvdn {

// tau = max(1e-8, 1e-5 (max f - min f)).
inline double default_quantization(std::span<const double> f) {
    if (f.empty()) return 1e-8;
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    return std::max(1e-8, 1e-5 * (*hi - *lo));
}

// Components of the lattice graph whose edges join neighbours differing by
// at most `quantization`.
inline std::size_t ncc(const Signal& f, double quantization) {
    require(quantization >= 0.0, "quantization must be >= 0");
    detail::UnionFind uf(f.size());
    for_each_edge(f.shape, [&](std::size_t, std::size_t a, std::size_t b) {
        if (std::abs(f[b] - f[a]) <= quantization) uf.unite(a, b);
    });
    std::size_t count = 0;
    for (std::size_t i = 0; i < f.size(); ++i) count += uf.find(i) == i;
    return count;
}

inline std::size_t ncc(const Signal& f) { return ncc(f, default_quantization(f.values)); }

// ||f - g||^2 / M
inline double mean_squared_error(std::span<const double> f, std::span<const double> g) {
    require(f.size() == g.size() && !f.empty(), "signals must be non-empty and equally long");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - g[i]) * (f[i] - g[i]);
    return s / static_cast<double>(f.size());
}

// SURE = ||y - f||^2 / M + 2 sigma^2 NCC(f) / M - sigma^2
inline double sure(const Signal& y, const Signal& f_hat, double sigma, double quantization) {
    require(y.shape == f_hat.shape, "shapes of y and estimate differ");
    const double m = static_cast<double>(y.size());
    return mean_squared_error(y.values, f_hat.values) +
           2.0 * sigma * sigma * static_cast<double>(ncc(f_hat, quantization)) / m - sigma * sigma;
}

inline double sure(const Signal& y, const Signal& f_hat, double sigma) {
    return sure(y, f_hat, sigma, default_quantization(f_hat.values));
}

// `points` geometrically spaced values from lambda_max / ratio to lambda_max.
inline std::vector<double> default_lambda_grid(double lambda_max, std::size_t points = 30,
                                               double ratio = 1e3) {
    require(points >= 1 && ratio > 1.0, "grid needs at least one point and ratio > 1");
    if (!(lambda_max > 0.0)) return {0.0};
    std::vector<double> grid(points);
    if (points == 1) return {lambda_max};
    const double lo = std::log(lambda_max / ratio);
    const double step = std::log(ratio) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) grid[k] = std::exp(lo + step * static_cast<double>(k));
    grid.back() = lambda_max;
    return grid;
}

struct SureCriterion {
    double sigma = 1.0;
};

struct OracleCriterion {
    Signal truth;
};

using RiskCriterion = std::variant<SureCriterion, OracleCriterion>;

struct RiskCurve {
    std::vector<double> lambdas;
    std::vector<double> values;
    std::vector<std::size_t> components;
    double argmin_lambda = 0.0;
    std::size_t argmin_index = 0;
};

// One solve per grid value; the first minimum wins ties.
inline RiskCurve risk_curve(const Signal& y, std::span<const double> lambdas,
                            const RiskCriterion& criterion, const SolverConfig& cfg = {},
                            std::size_t threads = 1) {
    require(!lambdas.empty(), "risk curve needs a non-empty lambda grid");
    for (double l : lambdas) require(std::isfinite(l) && l >= 0.0, "grid values must be finite and >= 0");
    if (const auto* oracle = std::get_if<OracleCriterion>(&criterion))
        require(oracle->truth.shape == y.shape, "truth and data shapes differ");
    RiskCurve curve;
    curve.lambdas.assign(lambdas.begin(), lambdas.end());
    std::sort(curve.lambdas.begin(), curve.lambdas.end());
    curve.values.resize(curve.lambdas.size());
    curve.components.resize(curve.lambdas.size());
    parallel_for(
        curve.lambdas.size(),
        [&](std::size_t k) {
            const auto sol = tv_solve(y, curve.lambdas[k], cfg);
            curve.components[k] = ncc(sol.estimate);
            if (const auto* s = std::get_if<SureCriterion>(&criterion)) {
                curve.values[k] = sure(y, sol.estimate, s->sigma);
            } else {
                curve.values[k] =
                    mean_squared_error(std::get<OracleCriterion>(criterion).truth.values, sol.estimate.values);
            }
        },
        threads);
    curve.argmin_index = static_cast<std::size_t>(
        std::min_element(curve.values.begin(), curve.values.end()) - curve.values.begin());
    curve.argmin_lambda = curve.lambdas[curve.argmin_index];
    return curve;
}

}  // namespace tvdn
