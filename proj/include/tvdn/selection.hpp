#pragma once

// Threshold selection: MAD noise estimate, universal and adaptive universal
// thresholds, jump counts, the exact-segmentation threshold, and the two-step
// adaptive procedure for any lattice dimension.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tvdn/error.hpp"
#include "tvdn/extreme_value.hpp"
#include "tvdn/grid.hpp"
#include "tvdn/normal.hpp"
#include "tvdn/risk.hpp"
#include "tvdn/tv_solve.hpp"

namespace tvdn {

namespace detail {

inline double median(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace detail

// sigma = 1.4826 / sqrt(2) * MAD(B y)
inline double estimate_sigma(const Signal& y) {
    const auto d = apply_diff(y);
    require(d.size() >= 2, "estimate_sigma needs at least two finite differences");
    const double med = detail::median(d);
    std::vector<double> dev(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) dev[i] = std::abs(d[i] - med);
    return 1.4826 / std::sqrt(2.0) * detail::median(std::move(dev));
}

// alpha_N = 2 / sqrt(log N)
inline double universal_alpha_1d(double n) {
    require(n > 1.0, "alpha_N needs N > 1");
    return 2.0 / std::sqrt(std::log(n));
}

// (sigma / 2) sqrt(N log log N); N may be fractional (adaptive use).
inline double universal_threshold_1d(double n, double sigma) {
    require(n >= 3.0, "universal threshold needs N >= 3");
    require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and >= 0");
    return 0.5 * sigma * std::sqrt(n * std::log(std::log(n)));
}

// Same formula at the average piece length N / L.
inline double adaptive_threshold_1d(double n, double levels, double sigma) {
    require(levels >= 1.0, "need at least one level");
    require(n / levels >= 3.0, "adaptive threshold needs N / L >= 3");
    return universal_threshold_1d(n / levels, sigma);
}

enum class JumpRule { raw, nonzero, calibrated };

inline JumpRule parse_jump_rule(const std::string& name) {
    if (name == "raw") return JumpRule::raw;
    if (name == "nonzero") return JumpRule::nonzero;
    if (name == "calibrated") return JumpRule::calibrated;
    throw InputError("unknown jump rule: " + name);
}

// Absolute threshold on |(B f)_i| for the given rule. Bonferroni level
// 0.025 / (N - 1); the nonzero rule uses `tolerance` directly.
inline double jump_threshold(std::size_t n, double sigma, JumpRule rule, double tolerance = 0.0) {
    require(n >= 2, "jump counts need N >= 2");
    if (rule == JumpRule::nonzero) return tolerance;
    const double z = normal_upper_quantile(0.025 / static_cast<double>(n - 1));
    if (rule == JumpRule::raw) return sigma * std::sqrt(2.0) * z;
    return sigma * std::sqrt(2.0 / static_cast<double>(n)) * z;
}

// Number of i with |(B f)_i| above the rule's threshold.
inline std::size_t count_jumps(const Signal& f, double sigma, JumpRule rule, double tolerance = 0.0) {
    require(f.shape.dims() == 1, "count_jumps needs a one-dimensional signal");
    if (f.size() < 2) return 0;
    const double t = jump_threshold(f.size(), sigma, rule, tolerance);
    std::size_t count = 0;
    for (double d : apply_diff(f)) count += std::abs(d) > t;
    return count;
}

// alpha = 2 / sqrt(log P)
inline double lattice_alpha(double edges) {
    require(edges > 1.0, "alpha needs P > 1");
    return 2.0 / std::sqrt(std::log(edges));
}

struct LatticeThreshold {
    double lambda = 0.0;
    double n = 0.0;        // side length used in the Gumbel formulas
    double edges = 0.0;    // P
    double alpha = 0.0;
    GumbelParams gumbel;
};

// sigma F^{-1}_{mu, beta}(1 - alpha) with mu, beta from the log-log model at
// side n and alpha = 2 / sqrt(log P).
inline LatticeThreshold lattice_threshold_at(double n, double edges, double sigma,
                                             const GumbelFitCoefficients& coeffs) {
    require(n > std::exp(1.0), "Gumbel model needs N > e");
    require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and >= 0");
    LatticeThreshold t;
    t.n = n;
    t.edges = edges;
    t.alpha = lattice_alpha(edges);
    require(t.alpha < 1.0, "alpha = 2 / sqrt(log P) must be below 1; lattice too small");
    t.gumbel = coeffs.params_at(n);
    t.lambda = sigma * t.gumbel.quantile(1.0 - t.alpha);
    return t;
}

inline GumbelFitCoefficients coefficients_for(std::size_t dims,
                                              const std::optional<GumbelFitCoefficients>& user) {
    if (user) {
        require(user->dim == 0 || user->dim == static_cast<int>(dims),
                "supplied Gumbel coefficients are for a different dimension");
        return *user;
    }
    const auto builtin = builtin_coefficients(static_cast<int>(dims));
    require(builtin.has_value(), "no built-in Gumbel coefficients for d = " + std::to_string(dims) +
                                     "; supply a fit");
    return *builtin;
}

// Universal threshold on a lattice with d >= 2. Non-square lattices use the
// geometric-mean side M^(1/d); P is the actual edge count.
inline LatticeThreshold universal_threshold_lattice(const LatticeShape& shape, double sigma,
                                                    const std::optional<GumbelFitCoefficients>& coeffs = {}) {
    require(shape.dims() >= 2, "lattice thresholds are for d >= 2");
    return lattice_threshold_at(shape.mean_side(), static_cast<double>(shape.num_edges()), sigma,
                                coefficients_for(shape.dims(), coeffs));
}

// P = d N^(d-1) (N - 1) for a cube of (possibly fractional) side N.
inline double cube_edges(double n, std::size_t dims) {
    return static_cast<double>(dims) * std::pow(n, static_cast<double>(dims) - 1.0) * (n - 1.0);
}

// Exact-segmentation threshold sigma N_max Phi^{-1}(1 - alpha / 2).
inline double exact_seg_threshold(std::size_t n_max, double sigma, double alpha) {
    require(alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 1/2)");
    require(n_max >= 1, "N_max must be positive");
    return sigma * static_cast<double>(n_max) * normal_upper_quantile(alpha / 2.0);
}

// Minimum jump height h* = 4 sigma Phi^{-1}(1 - alpha / 2).
inline double min_jump_height(double sigma, double alpha) {
    require(alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 1/2)");
    return 4.0 * sigma * normal_upper_quantile(alpha / 2.0);
}

// Lower bound (1 - 2 alpha)^(L - 2) (1 - alpha)^2 on the exact-segmentation
// probability.
inline double exact_seg_probability_bound(std::size_t levels, double alpha) {
    require(alpha >= 0.0 && alpha < 0.5, "alpha must lie in [0, 1/2)");
    require(levels >= 2, "the bound needs L >= 2");
    return std::pow(1.0 - 2.0 * alpha, static_cast<double>(levels) - 2.0) * (1.0 - alpha) * (1.0 - alpha);
}

enum class ThresholdMethod { fixed, universal, adaptive, sure, oracle, exact_seg };

inline std::string to_string(ThresholdMethod m) {
    switch (m) {
        case ThresholdMethod::fixed: return "fixed";
        case ThresholdMethod::universal: return "universal";
        case ThresholdMethod::adaptive: return "adaptive";
        case ThresholdMethod::sure: return "sure";
        case ThresholdMethod::oracle: return "oracle";
        case ThresholdMethod::exact_seg: return "exact_seg";
    }
    return "unknown";
}

inline ThresholdMethod parse_threshold_method(const std::string& name) {
    for (auto m : {ThresholdMethod::fixed, ThresholdMethod::universal, ThresholdMethod::adaptive,
                   ThresholdMethod::sure, ThresholdMethod::oracle, ThresholdMethod::exact_seg})
        if (to_string(m) == name) return m;
    throw InputError("unknown method: " + name);
}

struct ThresholdReport {
    ThresholdMethod method = ThresholdMethod::adaptive;
    double sigma_used = 0.0;
    bool sigma_estimated = false;
    double lambda1 = 0.0;
    std::size_t count1 = 1;   // L-hat (d = 1) or NCC of the step-1 estimate
    double n_bar = 0.0;       // average piece size (d = 1) or side (d >= 2) used in step 2
    double lambda2 = 0.0;
};

struct AdaptiveResult {
    TvSolution step1;
    TvSolution step2;
    ThresholdReport report;
};

// Smallest average piece length / side accepted in step 2. In 1D the
// formula needs log log N-bar > 0; on lattices N-bar >= 8 keeps the Gumbel
// quantile level 1 - 2 / sqrt(log P) positive. Lattices smaller than the
// floor keep their own side.
inline double adaptive_floor(std::size_t dims) { return dims == 1 ? 3.0 : 8.0; }

// Two-step adaptive universal threshold. sigma is estimated once by MAD when
// not given. Step 1 solves at the universal threshold; the level count is
// L-hat (calibrated jumps + 1) in 1D and NCC of the step-1 estimate on
// lattices; step 2 recomputes the threshold at the average piece size and
// solves once more. With a single level the step-1 solution is reused.
inline AdaptiveResult adaptive_tv(const Signal& y, std::optional<double> sigma = {},
                                  const SolverConfig& cfg = {},
                                  const std::optional<GumbelFitCoefficients>& coeffs = {}) {
    const LatticeShape& shape = y.shape;
    const std::size_t d = shape.dims();
    require(d >= 1 && d <= 3, "adaptive_tv supports d in {1, 2, 3}");
    AdaptiveResult out;
    auto& rep = out.report;
    rep.method = ThresholdMethod::adaptive;
    rep.sigma_estimated = !sigma.has_value();
    rep.sigma_used = sigma ? *sigma : estimate_sigma(y);
    require(std::isfinite(rep.sigma_used) && rep.sigma_used >= 0.0, "sigma must be finite and >= 0");
    const double m = static_cast<double>(shape.num_sites());

    std::optional<GumbelFitCoefficients> model;
    if (d == 1) {
        rep.lambda1 = universal_threshold_1d(m, rep.sigma_used);
    } else {
        model = coefficients_for(d, coeffs);
        rep.lambda1 = universal_threshold_lattice(shape, rep.sigma_used, model).lambda;
    }
    out.step1 = tv_solve(y, rep.lambda1, cfg);

    if (d == 1) {
        rep.count1 = count_jumps(out.step1.estimate, rep.sigma_used, JumpRule::calibrated) + 1;
        rep.n_bar = std::max(m / static_cast<double>(rep.count1), adaptive_floor(1));
    } else {
        rep.count1 = ncc(out.step1.estimate);
        rep.n_bar = std::max(std::pow(m / static_cast<double>(rep.count1), 1.0 / static_cast<double>(d)),
                             std::min(adaptive_floor(d), shape.mean_side()));
    }

    if (rep.count1 <= 1) {
        rep.n_bar = d == 1 ? m : shape.mean_side();
        rep.lambda2 = rep.lambda1;
        out.step2 = out.step1;
        return out;
    }
    if (d == 1) {
        rep.lambda2 = universal_threshold_1d(rep.n_bar, rep.sigma_used);
    } else {
        rep.lambda2 = lattice_threshold_at(rep.n_bar, cube_edges(rep.n_bar, d), rep.sigma_used, *model).lambda;
    }
    out.step2 = tv_solve(y, rep.lambda2, cfg);
    return out;
}

}  // namespace tvdn
