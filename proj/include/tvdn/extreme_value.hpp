#pragma once

// Gumbel and GEV maximum likelihood, the Gumbel-vs-GEV likelihood ratio
// test, and the log-log regression of Gumbel parameters on lattice size.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tvdn/error.hpp"

namespace tvdn {

// Maximum-type Gumbel: F(x) = exp(-exp(-(x - mu) / beta)).
struct GumbelParams {
    double mu = 0.0;
    double beta = 1.0;

    double cdf(double x) const { return std::exp(-std::exp(-(x - mu) / beta)); }

    double quantile(double p) const {
        require(p > 0.0 && p < 1.0, "Gumbel quantile needs p in (0, 1)");
        return mu - beta * std::log(-std::log(p));
    }

    double log_likelihood(std::span<const double> x) const {
        double ll = -static_cast<double>(x.size()) * std::log(beta);
        for (double v : x) {
            const double z = (v - mu) / beta;
            ll -= z + std::exp(-z);
        }
        return ll;
    }
};

// F(x) = exp(-(1 + xi (x - mu) / scale)^(-1 / xi)); xi = 0 is Gumbel.
struct GevParams {
    double mu = 0.0;
    double scale = 1.0;
    double xi = 0.0;

    // -inf outside the support.
    double log_likelihood(std::span<const double> x) const {
        if (!(scale > 0.0)) return -std::numeric_limits<double>::infinity();
        double ll = -static_cast<double>(x.size()) * std::log(scale);
        for (double v : x) {
            const double z = (v - mu) / scale;
            if (std::abs(xi) < 1e-12) {
                ll -= z + std::exp(-z);
                continue;
            }
            const double t = xi * z;
            if (!(t > -1.0)) return -std::numeric_limits<double>::infinity();
            const double log_t = std::log1p(t);
            ll -= (1.0 + 1.0 / xi) * log_t + std::exp(-log_t / xi);
        }
        return ll;
    }
};

namespace detail {

inline void require_sample(std::span<const double> x, std::size_t min_size) {
    require(x.size() >= min_size, "extreme value fit needs at least " + std::to_string(min_size) +
                                      " samples");
    for (double v : x) require(std::isfinite(v), "extreme value fit got a non-finite sample");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    require(*hi > *lo, "extreme value fit got a degenerate (constant) sample");
}

// Weighted mean of d with weights exp(-d / beta), computed with the largest
// exponent factored out.
inline double gumbel_weighted_mean(std::span<const double> d, double beta, double d_min,
                                   double* log_mean_weight = nullptr) {
    double sw = 0.0;
    double swd = 0.0;
    for (double v : d) {
        const double w = std::exp(-(v - d_min) / beta);
        sw += w;
        swd += w * v;
    }
    if (log_mean_weight)
        *log_mean_weight = std::log(sw / static_cast<double>(d.size())) - d_min / beta;
    return swd / sw;
}

}  // namespace detail

// Gumbel MLE. The scale solves the profile equation
//   beta - mean(x) + sum x e^{-x/beta} / sum e^{-x/beta} = 0,
// which is strictly increasing in beta; Newton steps are kept inside a
// shrinking bracket and replaced by bisection when they leave it.
inline GumbelParams fit_gumbel(std::span<const double> samples) {
    detail::require_sample(samples, 10);
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    std::vector<double> d(samples.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = samples[i] - mean;
    const double d_min = *std::min_element(d.begin(), d.end());

    auto profile = [&](double beta, double* slope) {
        double sw = 0.0, swd = 0.0, swdd = 0.0;
        for (double v : d) {
            const double w = std::exp(-(v - d_min) / beta);
            sw += w;
            swd += w * v;
            swdd += w * v * v;
        }
        const double m1 = swd / sw;
        const double var = std::max(0.0, swdd / sw - m1 * m1);
        if (slope) *slope = 1.0 + var / (beta * beta);
        return beta + m1;
    };

    double var = 0.0;
    for (double v : d) var += v * v;
    var /= n;
    double lo = 1e-12 * std::sqrt(var);
    double hi = -d_min;  // profile(hi) >= hi + d_min = 0
    while (profile(hi, nullptr) < 0.0) hi *= 2.0;
    double beta = std::clamp(std::sqrt(6.0 * var) / M_PI, lo, hi);
    for (int it = 0; it < 200; ++it) {
        double slope = 0.0;
        const double g = profile(beta, &slope);
        if (g == 0.0) break;
        if (g < 0.0) lo = beta; else hi = beta;
        double next = beta - g / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - beta) <= 1e-15 * beta || hi - lo <= 1e-15 * hi) {
            beta = next;
            break;
        }
        beta = next;
    }
    double log_mean_weight = 0.0;
    detail::gumbel_weighted_mean(d, beta, d_min, &log_mean_weight);
    return {mean - beta * log_mean_weight, beta};
}

struct GevFit {
    GevParams gev;
    GumbelParams gumbel;
    double loglik_gev = 0.0;
    double loglik_gumbel = 0.0;
    double lr_statistic = 0.0;
    double p_value = 1.0;
    bool converged = false;
};

namespace detail {

// Shape is reparametrized as xi = 0.5 tanh(eta) to keep it inside (-0.5, 0.5).
inline GevParams gev_from_theta(const std::array<double, 3>& th) {
    return {th[0], std::exp(th[1]), 0.5 * std::tanh(th[2])};
}

}  // namespace detail

// GEV MLE by BFGS on (mu, log scale, eta) started at the Gumbel fit, plus the
// likelihood ratio test of Gumbel (xi = 0) against GEV, chi-square with one
// degree of freedom.
inline GevFit fit_gev_and_lr_test(std::span<const double> samples, std::size_t max_iter = 500) {
    detail::require_sample(samples, 30);
    GevFit out;
    out.gumbel = fit_gumbel(samples);
    out.loglik_gumbel = out.gumbel.log_likelihood(samples);

    using Theta = std::array<double, 3>;
    const double n = static_cast<double>(samples.size());
    // Mean negative log-likelihood, so that a unit first step is sensible.
    auto objective = [&](const Theta& th) {
        const double ll = detail::gev_from_theta(th).log_likelihood(samples);
        return std::isfinite(ll) ? -ll / n : std::numeric_limits<double>::infinity();
    };
    auto gradient = [&](const Theta& th) {
        Theta g{};
        for (std::size_t k = 0; k < 3; ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(th[k]));
            Theta a = th, b = th;
            a[k] += h;
            b[k] -= h;
            const double fa = objective(a), fb = objective(b);
            if (std::isfinite(fa) && std::isfinite(fb)) {
                g[k] = (fa - fb) / (2.0 * h);
            } else {
                const double f0 = objective(th);
                g[k] = std::isfinite(fa) ? (fa - f0) / h : (f0 - fb) / h;
            }
        }
        return g;
    };

    Theta th{out.gumbel.mu, std::log(out.gumbel.beta), 0.0};
    double f = objective(th);
    Theta g = gradient(th);
    std::array<std::array<double, 3>, 3> h_inv{};
    for (std::size_t k = 0; k < 3; ++k) h_inv[k][k] = 1.0;

    for (std::size_t it = 0; it < max_iter; ++it) {
        double gnorm = 0.0;
        for (double v : g) gnorm = std::max(gnorm, std::abs(v));
        if (gnorm < 1e-9) {
            out.converged = true;
            break;
        }
        Theta dir{};
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) dir[i] -= h_inv[i][j] * g[j];
        double slope = 0.0;
        for (std::size_t i = 0; i < 3; ++i) slope += dir[i] * g[i];
        if (slope >= 0.0) {
            for (std::size_t i = 0; i < 3; ++i) {
                dir[i] = -g[i];
                for (std::size_t j = 0; j < 3; ++j) h_inv[i][j] = i == j ? 1.0 : 0.0;
            }
            slope = 0.0;
            for (std::size_t i = 0; i < 3; ++i) slope += dir[i] * g[i];
        }
        double step = 1.0;
        Theta next{};
        double f_next = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < 3; ++i) next[i] = th[i] + step * dir[i];
            f_next = objective(next);
            if (f_next <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No descent left at working precision.
            out.converged = gnorm < 1e-5;
            break;
        }
        const Theta g_next = gradient(next);
        Theta s{}, y{};
        for (std::size_t i = 0; i < 3; ++i) {
            s[i] = next[i] - th[i];
            y[i] = g_next[i] - g[i];
        }
        double sy = 0.0;
        for (std::size_t i = 0; i < 3; ++i) sy += s[i] * y[i];
        if (sy > 1e-14) {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            Theta hy{};
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) hy[i] += h_inv[i][j] * y[j];
            double yhy = 0.0;
            for (std::size_t i = 0; i < 3; ++i) yhy += y[i] * hy[i];
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                    h_inv[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) +
                                   (rho * rho * yhy + rho) * s[i] * s[j];
        }
        const double f_prev = f;
        th = next;
        f = f_next;
        g = g_next;
        if (std::abs(f_prev - f) <= 1e-15 * std::max(1.0, std::abs(f))) {
            out.converged = true;
            break;
        }
    }

    out.gev = detail::gev_from_theta(th);
    out.loglik_gev = -f * n;
    // The search starts at the Gumbel optimum and only accepts descent, so
    // the nested likelihood can only improve; clamp rounding noise.
    out.lr_statistic = std::max(0.0, 2.0 * (out.loglik_gev - out.loglik_gumbel));
    out.loglik_gev = std::max(out.loglik_gev, out.loglik_gumbel);
    out.p_value = std::erfc(std::sqrt(out.lr_statistic / 2.0));
    return out;
}

// log mu(N) = a_mu + b_mu log log N, log beta(N) = a_beta + b_beta log log N.
struct GumbelFitCoefficients {
    double a_mu = 0.0;
    double b_mu = 0.0;
    double a_beta = 0.0;
    double b_beta = 0.0;
    int dim = 0;

    double mu_at(double n) const { return std::exp(a_mu + b_mu * std::log(std::log(n))); }
    double beta_at(double n) const { return std::exp(a_beta + b_beta * std::log(std::log(n))); }
    GumbelParams params_at(double n) const { return {mu_at(n), beta_at(n)}; }
};

// Coefficients fitted to 200 Monte Carlo draws per size on square (d = 2,
// N = 8..1024) and cubic (d = 3, N = 8..64) lattices.
inline std::optional<GumbelFitCoefficients> builtin_coefficients(int dim) {
    if (dim == 2) return GumbelFitCoefficients{-0.395, 0.552, -1.512, -0.247, 2};
    if (dim == 3) return GumbelFitCoefficients{-0.523, 0.267, -2.008, -0.598, 3};
    return std::nullopt;
}

struct SizedGumbelFit {
    double n = 0.0;
    GumbelParams params;
};

// Ordinary least squares of (log mu, log beta) on log log N.
inline GumbelFitCoefficients fit_loglog_regression(std::span<const SizedGumbelFit> fits, int dim) {
    require(fits.size() >= 2, "log-log regression needs at least two sizes");
    std::vector<double> x, lm, lb;
    for (const auto& f : fits) {
        require(f.n > 1.0 && f.params.mu > 0.0 && f.params.beta > 0.0,
                "log-log regression needs N > 1 and positive Gumbel parameters");
        x.push_back(std::log(std::log(f.n)));
        lm.push_back(std::log(f.params.mu));
        lb.push_back(std::log(f.params.beta));
    }
    const double k = static_cast<double>(x.size());
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / k;
    double sxx = 0.0;
    for (double v : x) sxx += (v - xm) * (v - xm);
    require(sxx > 0.0, "log-log regression needs at least two distinct sizes");
    auto line = [&](const std::vector<double>& yv) {
        const double ym = std::accumulate(yv.begin(), yv.end(), 0.0) / k;
        double sxy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - xm) * (yv[i] - ym);
        const double slope = sxy / sxx;
        return std::pair{ym - slope * xm, slope};
    };
    const auto [a_mu, b_mu] = line(lm);
    const auto [a_beta, b_beta] = line(lb);
    return {a_mu, b_mu, a_beta, b_beta, dim};
}

}  // namespace tvdn
