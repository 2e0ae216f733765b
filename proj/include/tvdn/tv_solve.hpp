#pragma once

// Anisotropic TV denoising
//
//   min_f  1/2 ||y - f||^2 + lambda ||B f||_1
//
// and its dual  min 1/2 ||y - B^T w||^2  s.t. ||w||_inf <= lambda,
// with the primal estimate recovered as f = y - B^T w.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "tvdn/dct.hpp"
#include "tvdn/error.hpp"
#include "tvdn/grid.hpp"
#include "tvdn/lambda.hpp"

namespace tvdn {

struct SolverConfig {
    double gap_tol = 1e-8;            // relative to 1 + primal objective
    std::size_t max_iter = 5000;
    double rho = 1.0;                 // initial ADMM penalty, rebalanced on the fly
    std::size_t check_every = 10;     // iterations between gap checks
    bool polish = true;
    std::size_t refine_checks = 20;   // extra checks after certification spent seeking the exact pattern
};

struct TvSolution {
    Signal estimate;
    double lambda = 0.0;
    std::vector<double> dual;
    double gap = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
    // Best certified primal objective after each gap check; non-increasing.
    std::vector<double> objective_trace;
};

inline double primal_objective(const Signal& y, std::span<const double> f, double lambda) {
    double fit = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) fit += (y[i] - f[i]) * (y[i] - f[i]);
    double tv = 0.0;
    for_each_edge(y.shape, [&](std::size_t, std::size_t a, std::size_t b) { tv += std::abs(f[b] - f[a]); });
    return 0.5 * fit + lambda * tv;
}

// P(f) - D(w) for a dual-feasible w, rearranged as
//   1/2 ||y - f - B^T w||^2 + sum_e (lambda |Bf|_e - w_e (Bf)_e)
// so that no large terms cancel.
inline double duality_gap(const Signal& y, std::span<const double> f, std::span<const double> w,
                          double lambda) {
    const std::size_t m = y.size();
    std::vector<double> bt(m);
    detail::diff_adjoint_into(y.shape, w, bt);
    double res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - f[i] - bt[i];
        res += r * r;
    }
    double comp = 0.0;
    for_each_edge(y.shape, [&](std::size_t e, std::size_t a, std::size_t b) {
        const double d = f[b] - f[a];
        comp += lambda * std::abs(d) - w[e] * d;
    });
    const double gap = 0.5 * res + comp;
    if (!std::isfinite(gap)) return std::numeric_limits<double>::infinity();
    return std::max(0.0, gap);
}

namespace detail {

inline TvSolution trivial_solution(const Signal& y, double lambda) {
    TvSolution s;
    s.estimate = y;
    s.lambda = lambda;
    s.dual.assign(y.shape.num_edges(), 0.0);
    s.objective = primal_objective(y, y.values, lambda);
    s.objective_trace = {s.objective};
    return s;
}

// Condat's direct algorithm for 1D TV denoising. Output entries inside a
// segment are bitwise equal.
inline void condat_tv1d(std::span<const double> input, std::span<double> output, double lambda) {
    const std::ptrdiff_t width = static_cast<std::ptrdiff_t>(input.size());
    if (width <= 0) return;
    std::ptrdiff_t k = 0, k0 = 0, kplus = 0, kminus = 0;
    double umin = lambda, umax = -lambda;
    double vmin = input[0] - lambda, vmax = input[0] + lambda;
    const double twolambda = 2.0 * lambda;
    const double minlambda = -lambda;
    for (;;) {
        while (k == width - 1) {
            if (umin < 0.0) {
                do output[k0++] = vmin; while (k0 <= kminus);
                umax = (vmin = input[kminus = k = k0]) + (umin = lambda) - vmax;
            } else if (umax > 0.0) {
                do output[k0++] = vmax; while (k0 <= kplus);
                umin = (vmax = input[kplus = k = k0]) + (umax = minlambda) - vmin;
            } else {
                vmin += umin / static_cast<double>(k - k0 + 1);
                do output[k0++] = vmin; while (k0 <= k);
                return;
            }
        }
        if ((umin += input[k + 1] - vmin) < minlambda) {
            do output[k0++] = vmin; while (k0 <= kminus);
            vmax = (vmin = input[kplus = kminus = k = k0]) + twolambda;
            umin = lambda;
            umax = minlambda;
        } else if ((umax += input[k + 1] - vmax) > lambda) {
            do output[k0++] = vmax; while (k0 <= kplus);
            vmin = (vmax = input[kplus = kminus = k = k0]) - twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            ++k;
            if (umin >= lambda) {
                vmin += (umin - lambda) / static_cast<double>((kminus = k) - k0 + 1);
                umin = lambda;
            }
            if (umax <= minlambda) {
                vmax += (umax + lambda) / static_cast<double>((kplus = k) - k0 + 1);
                umax = minlambda;
            }
        }
    }
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // The smaller index becomes the root, so labels are deterministic.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

struct Candidate {
    std::vector<double> f;
    std::vector<double> w;
    double gap = std::numeric_limits<double>::infinity();
};

// Edge pattern: 0 fused, +1 / -1 the sign of a jump.
using EdgePattern = std::vector<signed char>;

// Rebuilds the exact minimizer implied by a fused/sign pattern (fused edges
// are merged, the rest carry w_e = lambda s_e) and repairs the approximate
// dual `w0` on fused edges so the pair can be certified.
// The dual repair needs a CG solve, so it is skipped (gap left infinite) when
// the rebuilt estimate cannot be the minimizer because its objective exceeds
// `objective_bound`. With a positive `gap_target` the repair is first solved
// loosely: the gap grows like the square of the CG residual, so a residual
// near sqrt(gap_target) already shows whether the candidate can be
// certified, and only those that can are solved to full accuracy.
inline Candidate polish(const Signal& y, double lambda, const EdgePattern& pattern,
                        std::span<const double> w0,
                        double objective_bound = std::numeric_limits<double>::infinity(),
                        double gap_target = 0.0) {
    const LatticeShape& shape = y.shape;
    const std::size_t m = shape.num_sites();
    const std::size_t p = shape.num_edges();
    UnionFind uf(m);
    std::vector<double> boundary(p, 0.0), fused(p, 0.0);
    for_each_edge(shape, [&](std::size_t e, std::size_t a, std::size_t b) {
        if (pattern[e] == 0) {
            fused[e] = 1.0;
            uf.unite(a, b);
        } else {
            boundary[e] = lambda * pattern[e];
        }
    });
    std::vector<double> v(m);
    diff_adjoint_into(shape, boundary, v);
    std::vector<double> sum(m, 0.0), count(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t r = uf.find(i);
        sum[r] += y[i] - v[i];
        count[r] += 1.0;
    }
    Candidate out;
    out.f.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t r = uf.find(i);
        out.f[i] = sum[r] / count[r];
    }
    if (primal_objective(y, out.f, lambda) > objective_bound) return out;

    out.w.assign(w0.begin(), w0.end());
    for (std::size_t e = 0; e < p; ++e) {
        if (fused[e] == 0.0) out.w[e] = boundary[e];
        else out.w[e] = std::clamp(out.w[e], -lambda, lambda);
    }
    std::vector<double> r(m);
    diff_adjoint_into(shape, out.w, r);
    for (std::size_t i = 0; i < m; ++i) r[i] = y[i] - out.f[i] - r[i];
    // Each component's residual sums to zero only up to roundoff; remove the
    // remainder so CG sees a consistent system, and do not ask for accuracy
    // below the roundoff floor.
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) sum[uf.find(i)] += r[i];
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t c = uf.find(i);
        r[i] -= sum[c] / count[c];
    }
    const double r_norm = norm2(r);
    const double floor = 1e-14 * std::sqrt(static_cast<double>(m)) * (1.0 + norm_inf(y.values));
    std::vector<double> x(m, 0.0);
    const std::vector<double> base = out.w;
    auto solve = [&](double tol) { weighted_laplacian_solve(shape, fused, r, x, tol, 10 * m); };
    auto repair = [&] {
        for_each_edge(shape, [&](std::size_t e, std::size_t a, std::size_t b) {
            if (fused[e] != 0.0) out.w[e] = std::clamp(base[e] + (x[b] - x[a]), -lambda, lambda);
        });
        out.gap = duality_gap(y, out.f, out.w, lambda);
    };
    if (r_norm > floor) {
        const double loose = 0.1 * std::sqrt(2.0 * gap_target);
        if (loose > floor && loose < r_norm) {
            solve(loose / r_norm);
            repair();
            if (out.gap > gap_target) return out;
        }
        solve(std::max(1e-11, floor / r_norm));
    }
    repair();
    return out;
}

inline bool within_tolerance(double gap, double objective, double tol) {
    return gap <= tol * (1.0 + objective);
}

}  // namespace detail

// Exact 1D solver (direct, no iteration). The dual is the clipped partial
// sum w_i = -sum_{k <= i} (y_k - f_k).
inline TvSolution tv_denoise_1d(const Signal& y, double lambda) {
    require(y.shape.dims() == 1, "tv_denoise_1d needs a one-dimensional signal");
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    if (lambda == 0.0 || y.size() < 2) return detail::trivial_solution(y, lambda);
    std::vector<double> f(y.size());
    detail::condat_tv1d(y.values, f, lambda);
    TvSolution s;
    s.lambda = lambda;
    s.dual.resize(y.size() - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        acc += y[i] - f[i];
        s.dual[i] = std::clamp(-acc, -lambda, lambda);
    }
    s.gap = duality_gap(y, f, s.dual, lambda);
    s.objective = primal_objective(y, f, lambda);
    s.objective_trace = {s.objective};
    s.estimate = Signal(y.shape, std::move(f));
    return s;
}

// ADMM on the split z = B f for any lattice dimension, with residual
// balancing of the penalty and a pattern-polishing step that returns the
// exact minimizer once the fused/sign pattern has been identified.
// `warm_start`, when non-empty, is the starting estimate.
inline TvSolution tv_denoise(const Signal& y, double lambda, const SolverConfig& cfg = {},
                             std::span<const double> warm_start = {}) {
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    require(cfg.gap_tol > 0.0, "gap_tol must be positive");
    const LatticeShape& shape = y.shape;
    const std::size_t m = shape.num_sites();
    const std::size_t p = shape.num_edges();
    if (lambda == 0.0 || p == 0) return detail::trivial_solution(y, lambda);
    require(warm_start.empty() || warm_start.size() == m, "warm start length does not match lattice");

    std::vector<double> f = warm_start.empty() ? y.values
                                               : std::vector<double>(warm_start.begin(), warm_start.end());
    std::vector<double> bf(p), z(p), u(p, 0.0), z_old(p), rhs(m), tmp(m), w(p);
    detail::diff_into(shape, f, bf);
    double rho = cfg.rho;
    for (std::size_t e = 0; e < p; ++e) {
        const double t = lambda / rho;
        z[e] = std::copysign(std::max(std::abs(bf[e]) - t, 0.0), bf[e]);
    }
    detail::LaplacianDct dct(shape);

    TvSolution best;
    best.lambda = lambda;
    best.gap = std::numeric_limits<double>::infinity();
    best.converged = false;
    double best_objective = std::numeric_limits<double>::infinity();
    detail::EdgePattern last_z, last_f;
    std::size_t refine_checks = 0;
    std::vector<double> trace;

    // Keeps the lowest-objective iterate until one is certified, then the
    // certified candidate with the smallest gap.
    auto consider = [&](std::vector<double> cand_f, std::vector<double> cand_w, double gap,
                        std::size_t iter) {
        const double obj = primal_objective(y, cand_f, lambda);
        const bool certified = detail::within_tolerance(gap, obj, cfg.gap_tol);
        const bool have_certified = detail::within_tolerance(best.gap, best.objective, cfg.gap_tol);
        if (have_certified ? certified && gap < best.gap : certified || obj < best_objective) {
            best.estimate = Signal(shape, std::move(cand_f));
            best.dual = std::move(cand_w);
            best.gap = gap;
            best.objective = obj;
            best.iterations = iter;
        }
        best_objective = std::min(best_objective, obj);
        return certified;
    };

    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        // f-update: (I + rho L) f = y + rho B^T (z - u), solved exactly
        for (std::size_t e = 0; e < p; ++e) w[e] = z[e] - u[e];
        detail::diff_adjoint_into(shape, w, tmp);
        for (std::size_t i = 0; i < m; ++i) rhs[i] = y[i] + rho * tmp[i];
        dct.solve(1.0, rho, rhs, f);

        detail::diff_into(shape, f, bf);
        z_old = z;
        const double t = lambda / rho;
        double r_norm = 0.0, s_norm = 0.0;
        for (std::size_t e = 0; e < p; ++e) {
            const double v = bf[e] + u[e];
            z[e] = std::copysign(std::max(std::abs(v) - t, 0.0), v);
            u[e] += bf[e] - z[e];
            r_norm += (bf[e] - z[e]) * (bf[e] - z[e]);
            w[e] = z[e] - z_old[e];
        }
        detail::diff_adjoint_into(shape, w, tmp);
        s_norm = rho * detail::norm2(tmp);
        r_norm = std::sqrt(r_norm);

        if (it % cfg.check_every == 0 || it == cfg.max_iter) {
            std::vector<double> dual(p);
            for (std::size_t e = 0; e < p; ++e) dual[e] = std::clamp(rho * u[e], -lambda, lambda);
            const double gap = duality_gap(y, f, dual, lambda);
            const bool certified = consider(f, dual, gap, it);
            // A certified gap only bounds ||f - f*|| by sqrt(2 gap). The
            // polished candidate is exact once the pattern is right, so after
            // certification a few more checks are spent looking for it.
            bool exact = false;
            if (cfg.polish) {
                detail::EdgePattern from_z(p), from_f(p);
                const double tau = 2.0 * std::sqrt(2.0 * gap);
                for (std::size_t e = 0; e < p; ++e) {
                    from_z[e] = static_cast<signed char>((z[e] > 0.0) - (z[e] < 0.0));
                    from_f[e] = std::abs(bf[e]) <= tau ? 0 : static_cast<signed char>(bf[e] > 0.0 ? 1 : -1);
                }
                for (auto [pattern, last] : {std::pair{&from_z, &last_z}, std::pair{&from_f, &last_f}}) {
                    if (exact || *pattern == *last) continue;
                    *last = *pattern;
                    const double bound = best_objective + 1e-12 * (1.0 + std::abs(best_objective));
                    auto cand = detail::polish(y, lambda, *pattern, dual, bound,
                                               cfg.gap_tol * (1.0 + std::abs(best_objective)));
                    if (!std::isfinite(cand.gap)) continue;
                    if (!(cand.gap < gap) && certified) continue;
                    const double cand_gap = cand.gap;
                    const double cand_obj = primal_objective(y, cand.f, lambda);
                    if (consider(std::move(cand.f), std::move(cand.w), cand_gap, it))
                        exact = cand_gap <= 1e-3 * cfg.gap_tol * (1.0 + cand_obj);
                }
            }
            trace.push_back(best_objective);
            if (exact || (certified && (!cfg.polish || ++refine_checks > cfg.refine_checks))) {
                best.converged = true;
                break;
            }
        }

        // Residual balancing keeps the primal and dual residuals comparable.
        if (r_norm > 10.0 * s_norm) {
            rho *= 2.0;
            for (double& v : u) v *= 0.5;
        } else if (s_norm > 10.0 * r_norm) {
            rho *= 0.5;
            for (double& v : u) v *= 2.0;
        }
    }
    best.converged = detail::within_tolerance(best.gap, best.objective, cfg.gap_tol);
    best.objective_trace = std::move(trace);
    return best;
}

// Exact 1D solver for d = 1, ADMM otherwise.
inline TvSolution tv_solve(const Signal& y, double lambda, const SolverConfig& cfg = {}) {
    if (y.shape.dims() == 1) return tv_denoise_1d(y, lambda);
    return tv_denoise(y, lambda, cfg);
}

// Smallest lambda for which the estimate is the constant mean(y) 1.
inline double lambda_max(const Signal& y) {
    if (y.shape.dims() == 1) return sample_lambda_1d(y);
    return sample_lambda(y).lambda;
}

}  // namespace tvdn
