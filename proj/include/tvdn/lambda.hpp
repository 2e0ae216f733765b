#pragma once

// The dual sup-norm statistic
//
//   Lambda(y) = min ||w||_inf  subject to  B^T w = y - mean(y) 1,
//
// i.e. the smallest threshold for which TV denoising returns the constant
// fit. In 1D the constraint has a unique solution given by centered partial
// sums. On general lattices w is a flow with divergence y - mean(y), so by
// the feasible-flow theorem
//
//   Lambda = max over site sets S of |sum_{i in S} c_i| / |cut(S)|,
//
// which is found exactly by Dinkelbach iterations over parametric min cuts.
// The flow of the last cut problem is an optimal w.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "tvdn/error.hpp"
#include "tvdn/grid.hpp"
#include "tvdn/maxflow.hpp"
#include "tvdn/parallel.hpp"
#include "tvdn/signals.hpp"

namespace tvdn {

struct LambdaSample {
    double lambda = 0.0;
    std::vector<double> w;        // optimal dual edge vector
    double residual = 0.0;        // ||B^T w - (y - mean y)||_2
    std::size_t iterations = 0;   // cut problems (or splitting steps) solved
};

// Closed form for d = 1: max_i |sum_{k <= i} (y_k - mean y)|.
inline double sample_lambda_1d(const Signal& y) {
    require(y.shape.dims() == 1, "sample_lambda_1d needs a one-dimensional signal");
    const double mean = y.mean();
    double acc = 0.0, best = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        acc += y[i] - mean;
        best = std::max(best, std::abs(acc));
    }
    return best;
}

namespace detail {

inline std::vector<double> centered(const Signal& y) {
    std::vector<double> c = y.values;
    const double mean = y.mean();
    for (double& v : c) v -= mean;
    return c;
}

// Cheap lower bound on Lambda from single sites and axis-aligned slabs.
inline double initial_cut_ratio(const LatticeShape& shape, std::span<const double> c) {
    const auto deg = laplacian_diagonal(shape, {});
    double best = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (deg[i] > 0.0) best = std::max(best, std::abs(c[i]) / deg[i]);
    const std::size_t m = shape.num_sites();
    for (std::size_t axis = 0; axis < shape.dims(); ++axis) {
        const std::size_t n = shape.size(axis);
        if (n < 2) continue;
        const std::size_t stride = shape.stride(axis);
        std::vector<double> slab(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) slab[(i / stride) % n] += c[i];
        const double cut = static_cast<double>(m / n);
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            acc += slab[k];
            best = std::max(best, std::abs(acc) / cut);
        }
    }
    return best;
}

}  // namespace detail

// Exact Lambda and an optimal w on any lattice. `tol` bounds the relative
// constraint residual that is accepted without complaint.
inline LambdaSample sample_lambda(const Signal& y, double tol = 1e-6) {
    const LatticeShape& shape = y.shape;
    const std::size_t m = shape.num_sites();
    const std::size_t p = shape.num_edges();
    LambdaSample out;
    out.w.assign(p, 0.0);
    const auto c = detail::centered(y);
    const double c_norm = detail::norm2(c);
    if (detail::norm_inf(c) == 0.0 || p == 0) return out;

    const std::size_t source = m, sink = m + 1;
    detail::MaxFlow graph(m + 2);
    std::vector<std::size_t> edge_arc(p);
    for_each_edge(shape, [&](std::size_t e, std::size_t a, std::size_t b) {
        edge_arc[e] = graph.add_edge(a, b, 0.0, 0.0);
    });
    for (std::size_t i = 0; i < m; ++i) {
        if (c[i] > 0.0) graph.add_edge(source, i, c[i]);
        else if (c[i] < 0.0) graph.add_edge(i, sink, -c[i]);
    }

    double lambda = detail::initial_cut_ratio(shape, c);
    for (std::size_t it = 0; it < 200; ++it) {
        ++out.iterations;
        for (std::size_t arc : edge_arc) graph.set_capacity(arc, lambda, lambda);
        graph.solve(source, sink);
        const auto side = graph.source_side(source);
        double c_set = 0.0;
        std::size_t members = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (side[i]) {
                c_set += c[i];
                ++members;
            }
        }
        std::size_t cut = 0;
        for_each_edge(shape, [&](std::size_t, std::size_t a, std::size_t b) {
            cut += side[a] != side[b];
        });
        if (members == 0 || members == m || cut == 0) break;
        const double ratio = c_set / static_cast<double>(cut);
        if (!(ratio > lambda * (1.0 + 1e-14))) break;
        lambda = ratio;
    }

    // Net flow a -> b is the negated dual value on that edge.
    for (std::size_t e = 0; e < p; ++e) out.w[e] = std::clamp(-graph.flow(edge_arc[e]), -lambda, lambda);
    out.lambda = lambda;
    std::vector<double> bt(m);
    detail::diff_adjoint_into(shape, out.w, bt);
    for (std::size_t i = 0; i < m; ++i) bt[i] -= c[i];
    out.residual = detail::norm2(bt);
    if (out.residual > tol * c_norm) {
        throw ConvergenceError("sample_lambda: constraint residual " + std::to_string(out.residual) +
                               " exceeds tolerance");
    }
    return out;
}

namespace detail {

// Euclidean projection onto {x : ||x||_1 <= radius}.
inline void project_l1_ball(std::span<double> v, double radius) {
    double l1 = 0.0;
    for (double x : v) l1 += std::abs(x);
    if (l1 <= radius) return;
    std::vector<double> a(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
    std::sort(a.begin(), a.end(), std::greater<>());
    double acc = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        acc += a[k];
        const double t = (acc - radius) / static_cast<double>(k + 1);
        if (k + 1 == a.size() || a[k + 1] <= t) {
            theta = t;
            break;
        }
    }
    for (double& x : v) x = std::copysign(std::max(std::abs(x) - theta, 0.0), x);
}

}  // namespace detail

// Douglas-Rachford splitting for the same problem: alternate the projection
// onto {B^T w = c} (a Laplacian pseudo-inverse solve) with the proximal map
// of ||.||_inf (via projection onto the l1 ball). Returns the sup norm of the
// final feasible iterate, an upper bound on Lambda that converges to it.
inline LambdaSample sample_lambda_splitting(const Signal& y, double tol = 1e-6,
                                            std::size_t max_iter = 50000) {
    const LatticeShape& shape = y.shape;
    const std::size_t m = shape.num_sites();
    const std::size_t p = shape.num_edges();
    LambdaSample out;
    out.w.assign(p, 0.0);
    const auto c = detail::centered(y);
    if (detail::norm_inf(c) == 0.0 || p == 0) return out;

    std::vector<double> bt(m), x(m), bx(p);
    auto project_affine = [&](std::span<const double> z, std::span<double> w) {
        detail::diff_adjoint_into(shape, z, bt);
        for (std::size_t i = 0; i < m; ++i) bt[i] -= c[i];
        detail::subtract_mean(bt);
        std::fill(x.begin(), x.end(), 0.0);
        detail::weighted_laplacian_solve(shape, {}, bt, x, 1e-13, 10 * m);
        detail::diff_into(shape, x, bx);
        for (std::size_t e = 0; e < p; ++e) w[e] = z[e] - bx[e];
    };

    std::vector<double> z(p, 0.0), w(p), v(p);
    project_affine(z, w);  // minimum-norm feasible point
    z = w;
    const double gamma = std::max(detail::norm_inf(w), 1e-300);
    double previous = detail::norm_inf(w);
    double best = previous;
    out.w = w;
    std::size_t stable = 0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        ++out.iterations;
        project_affine(z, w);
        for (std::size_t e = 0; e < p; ++e) v[e] = 2.0 * w[e] - z[e];
        std::vector<double> ball = v;
        detail::project_l1_ball(ball, gamma);
        for (std::size_t e = 0; e < p; ++e) v[e] -= ball[e];
        double move = 0.0;
        for (std::size_t e = 0; e < p; ++e) {
            z[e] += v[e] - w[e];
            move = std::max(move, std::abs(v[e] - w[e]));
        }
        const double current = detail::norm_inf(w);
        if (current < best) {
            best = current;
            out.w = w;
        }
        if (std::abs(current - previous) <= tol * current * 1e-2 && move <= tol * current) {
            if (++stable >= 5) break;
        } else {
            stable = 0;
        }
        previous = current;
        if (it + 1 == max_iter)
            throw ConvergenceError("sample_lambda_splitting: iteration cap reached");
    }
    out.lambda = best;
    detail::diff_adjoint_into(shape, out.w, bt);
    for (std::size_t i = 0; i < m; ++i) bt[i] -= c[i];
    out.residual = detail::norm2(bt);
    return out;
}

// `reps` draws of Lambda for standard normal data on `shape`; replicate r is
// seeded with seed + r, so the result is identical for any worker count.
inline std::vector<double> monte_carlo_lambda(const LatticeShape& shape, std::size_t reps,
                                              std::uint64_t seed,
                                              std::size_t threads = worker_count()) {
    require(reps >= 1, "monte_carlo_lambda needs reps >= 1");
    std::vector<double> out(reps);
    parallel_for(
        reps,
        [&](std::size_t r) {
            Signal y(shape, gaussian_noise(shape.num_sites(), 1.0, replicate_seed(seed, r)));
            out[r] = shape.dims() == 1 ? sample_lambda_1d(y) : sample_lambda(y).lambda;
        },
        threads);
    return out;
}

}  // namespace tvdn
