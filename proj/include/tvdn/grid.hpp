#pragma once

// Lattice geometry and the matrix-free finite-difference operator.
//
// Sites are stored flat with axis 0 varying fastest (x, then y, then z).
// Edges are ordered direction-major: every axis-0 edge first, then axis 1,
// and so on; inside one direction edges follow the flat index of their
// near site. An edge value is f[far] - f[near].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tvdn/error.hpp"

namespace tvdn {

class LatticeShape {
public:
    LatticeShape() = default;

    explicit LatticeShape(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
        require(!sizes_.empty(), "lattice needs at least one dimension");
        for (auto n : sizes_) require(n >= 1, "lattice sizes must be positive");
    }

    static LatticeShape line(std::size_t n) { return LatticeShape({n}); }

    static LatticeShape cube(std::size_t side, std::size_t dims) {
        return LatticeShape(std::vector<std::size_t>(dims, side));
    }

    std::size_t dims() const { return sizes_.size(); }
    std::span<const std::size_t> sizes() const { return sizes_; }
    std::size_t size(std::size_t axis) const { return sizes_.at(axis); }

    // M
    std::size_t num_sites() const {
        return std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{1},
                               std::multiplies<>());
    }

    // P_M = sum_i (N_i - 1) M / N_i
    std::size_t num_edges() const {
        const std::size_t m = num_sites();
        std::size_t p = 0;
        for (auto n : sizes_) p += (n - 1) * (m / n);
        return p;
    }

    std::size_t stride(std::size_t axis) const {
        std::size_t s = 1;
        for (std::size_t k = 0; k < axis; ++k) s *= sizes_[k];
        return s;
    }

    // Geometric-mean side length M^(1/d).
    double mean_side() const {
        return std::pow(static_cast<double>(num_sites()), 1.0 / static_cast<double>(dims()));
    }

    bool operator==(const LatticeShape&) const = default;

    std::string to_string() const {
        std::string out;
        for (std::size_t k = 0; k < sizes_.size(); ++k) {
            if (k) out += "x";
            out += std::to_string(sizes_[k]);
        }
        return out;
    }

private:
    std::vector<std::size_t> sizes_{1};
};

struct Signal {
    LatticeShape shape;
    std::vector<double> values;

    Signal() = default;
    Signal(LatticeShape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
        require(values.size() == shape.num_sites(), "signal length does not match lattice");
        for (double x : values) require(std::isfinite(x), "signal contains non-finite values");
    }

    static Signal line(std::vector<double> v) {
        auto shape = LatticeShape::line(v.size());
        return Signal(std::move(shape), std::move(v));
    }

    static Signal constant(const LatticeShape& shape, double value) {
        return Signal(shape, std::vector<double>(shape.num_sites(), value));
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    double mean() const {
        if (values.empty()) return 0.0;
        return std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    }
};

// Calls fn(edge, near, far) for every edge in canonical order.
template <typename Fn>
void for_each_edge(const LatticeShape& shape, Fn&& fn) {
    const std::size_t m = shape.num_sites();
    std::size_t edge = 0;
    for (std::size_t axis = 0; axis < shape.dims(); ++axis) {
        const std::size_t n = shape.size(axis);
        if (n < 2) continue;
        const std::size_t stride = shape.stride(axis);
        const std::size_t block = stride * n;
        const std::size_t run = stride * (n - 1);
        for (std::size_t base = 0; base < m; base += block) {
            for (std::size_t t = 0; t < run; ++t) {
                const std::size_t near = base + t;
                fn(edge++, near, near + stride);
            }
        }
    }
}

namespace detail {

inline void diff_into(const LatticeShape& shape, std::span<const double> f, std::span<double> out) {
    for_each_edge(shape, [&](std::size_t e, std::size_t a, std::size_t b) { out[e] = f[b] - f[a]; });
}

inline void diff_adjoint_into(const LatticeShape& shape, std::span<const double> w,
                              std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for_each_edge(shape, [&](std::size_t e, std::size_t a, std::size_t b) {
        out[b] += w[e];
        out[a] -= w[e];
    });
}

// out = B^T diag(weights) B x; an empty weight span means unit weights.
inline void laplacian_into(const LatticeShape& shape, std::span<const double> weights,
                           std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const bool weighted = !weights.empty();
    for_each_edge(shape, [&](std::size_t e, std::size_t a, std::size_t b) {
        double d = x[b] - x[a];
        if (weighted) d *= weights[e];
        out[b] += d;
        out[a] -= d;
    });
}

inline std::vector<double> laplacian_diagonal(const LatticeShape& shape,
                                              std::span<const double> weights) {
    std::vector<double> diag(shape.num_sites(), 0.0);
    const bool weighted = !weights.empty();
    for_each_edge(shape, [&](std::size_t e, std::size_t a, std::size_t b) {
        const double c = weighted ? weights[e] : 1.0;
        diag[a] += c;
        diag[b] += c;
    });
    return diag;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

inline void subtract_mean(std::span<double> x) {
    if (x.empty()) return;
    const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    for (double& v : x) v -= mu;
}

struct CgStats {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

// Preconditioned conjugate gradient for a symmetric positive semidefinite
// operator; `precondition(r, z)` applies a symmetric positive (semi)definite
// approximation of the inverse. Consistent singular systems are fine; x keeps
// any null-space component of the starting point.
template <typename Op, typename Pre>
CgStats preconditioned_cg(Op&& apply, Pre&& precondition, std::span<const double> rhs,
                          std::span<double> x, double tol, std::size_t max_iter) {
    const std::size_t n = rhs.size();
    CgStats stats;
    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        stats.converged = true;
        return stats;
    }
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply(std::span<const double>(x), std::span<double>(ap));
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    precondition(std::span<const double>(r), std::span<double>(z));
    p = z;
    double rz = dot(r, z);
    double res = norm2(r);
    while (res > tol * rhs_norm && stats.iterations < max_iter) {
        apply(std::span<const double>(p), std::span<double>(ap));
        const double pap = dot(p, ap);
        if (pap <= 0.0) break;
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(std::span<const double>(r), std::span<double>(z));
        const double rz_next = dot(r, z);
        res = norm2(r);
        ++stats.iterations;
        // Residual left only where the preconditioner vanishes (isolated
        // sites of a weighted graph): nothing more can be removed.
        if (rz_next <= 0.0) break;
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    stats.relative_residual = res / rhs_norm;
    stats.converged = res <= tol * rhs_norm;
    return stats;
}

// Jacobi-preconditioned conjugate gradient.
template <typename Op>
CgStats conjugate_gradient(Op&& apply, std::span<const double> diag, std::span<const double> rhs,
                           std::span<double> x, double tol, std::size_t max_iter) {
    auto jacobi = [&](std::span<const double> r, std::span<double> z) {
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
    };
    return preconditioned_cg(apply, jacobi, rhs, x, tol, max_iter);
}

// Pseudo-inverse solve of the (optionally edge-weighted) lattice Laplacian.
// rhs must sum to zero over every connected component of the weighted graph.
inline CgStats weighted_laplacian_solve(const LatticeShape& shape, std::span<const double> weights,
                                        std::span<const double> rhs, std::span<double> x,
                                        double tol, std::size_t max_iter) {
    const auto diag = laplacian_diagonal(shape, weights);
    auto op = [&](std::span<const double> in, std::span<double> out) {
        laplacian_into(shape, weights, in, out);
    };
    return conjugate_gradient(op, diag, rhs, x, tol, max_iter);
}

}  // namespace detail

// (B f)_e = f[far] - f[near], one entry per edge.
inline std::vector<double> apply_diff(const Signal& signal) {
    require(signal.values.size() == signal.shape.num_sites(), "signal length does not match lattice");
    std::vector<double> out(signal.shape.num_edges());
    detail::diff_into(signal.shape, signal.values, out);
    return out;
}

inline Signal apply_diff_adjoint(std::span<const double> w, const LatticeShape& shape) {
    require(w.size() == shape.num_edges(), "edge vector length does not match lattice");
    std::vector<double> out(shape.num_sites());
    detail::diff_adjoint_into(shape, w, out);
    return Signal(shape, std::move(out));
}

inline Signal apply_laplacian(const Signal& x) {
    std::vector<double> out(x.size());
    detail::laplacian_into(x.shape, {}, x.values, out);
    return Signal(x.shape, std::move(out));
}

// Solves B^T B x = rhs for the mean-zero x. The relative residual bound is
// `tol`; the iteration cap is 10 M.
inline Signal laplacian_solve(const Signal& rhs, double tol = 1e-10) {
    require(tol > 0.0, "tolerance must be positive");
    const std::size_t m = rhs.size();
    const double rhs_norm = detail::norm2(rhs.values);
    const double sum = std::accumulate(rhs.values.begin(), rhs.values.end(), 0.0);
    require(std::abs(sum) / std::sqrt(static_cast<double>(m)) <= tol * std::max(1.0, rhs_norm),
            "laplacian_solve: right-hand side is not orthogonal to constants");
    std::vector<double> b = rhs.values;
    detail::subtract_mean(b);
    std::vector<double> x(m, 0.0);
    const auto stats = detail::weighted_laplacian_solve(rhs.shape, {}, b, x, tol, 10 * m);
    if (!stats.converged) {
        throw ConvergenceError("laplacian_solve: no convergence after " +
                               std::to_string(stats.iterations) + " iterations");
    }
    detail::subtract_mean(x);
    return Signal(rhs.shape, std::move(x));
}

}  // namespace tvdn
