#pragma once

// Brute-force references used only by the test suites. Nothing here calls
// the library's operators: edges are enumerated from coordinates and the
// difference matrix is assembled densely.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace tvdn::oracle {

struct Edge {
    std::size_t near, far;
};

// Edges of a lattice with axis 0 fastest, direction-major order.
inline std::vector<Edge> lattice_edges(const std::vector<std::size_t>& sizes) {
    std::size_t m = 1;
    for (auto n : sizes) m *= n;
    std::vector<Edge> edges;
    for (std::size_t axis = 0; axis < sizes.size(); ++axis) {
        for (std::size_t site = 0; site < m; ++site) {
            std::size_t rest = site, stride = 1, coord = 0;
            for (std::size_t k = 0; k <= axis; ++k) {
                coord = rest % sizes[k];
                rest /= sizes[k];
                if (k < axis) stride *= sizes[k];
            }
            if (coord + 1 < sizes[axis]) edges.push_back({site, site + stride});
        }
    }
    return edges;
}

inline Eigen::MatrixXd dense_diff(const std::vector<std::size_t>& sizes) {
    std::size_t m = 1;
    for (auto n : sizes) m *= n;
    const auto edges = lattice_edges(sizes);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(edges.size()),
                                              static_cast<Eigen::Index>(m));
    for (std::size_t e = 0; e < edges.size(); ++e) {
        b(e, edges[e].far) += 1.0;
        b(e, edges[e].near) -= 1.0;
    }
    return b;
}

inline double tv_objective(const std::vector<Edge>& edges, const std::vector<double>& y,
                           const std::vector<double>& f, double lambda) {
    double obj = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) obj += 0.5 * (y[i] - f[i]) * (y[i] - f[i]);
    for (const auto& e : edges) obj += lambda * std::abs(f[e.far] - f[e.near]);
    return obj;
}

// Exhaustive active-sign-pattern enumeration. Every edge is fused (0) or
// carries a sign +-1; a pattern fixes the estimate as the group means of
// y - B^T (lambda s). The true minimizer arises from its own pattern and
// every candidate is a valid point, so the lowest objective is the optimum.
inline std::vector<double> tv_brute_force(const std::vector<std::size_t>& sizes,
                                          const std::vector<double>& y, double lambda) {
    const auto edges = lattice_edges(sizes);
    const std::size_t m = y.size();
    const std::size_t p = edges.size();
    std::size_t patterns = 1;
    for (std::size_t e = 0; e < p; ++e) patterns *= 3;
    std::vector<double> best = y;
    double best_obj = tv_objective(edges, y, y, lambda);
    std::vector<int> s(p);
    std::vector<std::size_t> group(m);
    for (std::size_t code = 0; code < patterns; ++code) {
        std::size_t c = code;
        for (std::size_t e = 0; e < p; ++e) {
            s[e] = static_cast<int>(c % 3) - 1;
            c /= 3;
        }
        // Flood fill over fused edges.
        std::fill(group.begin(), group.end(), m);
        std::size_t groups = 0;
        for (std::size_t start = 0; start < m; ++start) {
            if (group[start] != m) continue;
            std::queue<std::size_t> q;
            q.push(start);
            group[start] = groups;
            while (!q.empty()) {
                const std::size_t u = q.front();
                q.pop();
                for (std::size_t e = 0; e < p; ++e) {
                    if (s[e] != 0) continue;
                    std::size_t v = m;
                    if (edges[e].near == u) v = edges[e].far;
                    if (edges[e].far == u) v = edges[e].near;
                    if (v != m && group[v] == m) {
                        group[v] = groups;
                        q.push(v);
                    }
                }
            }
            ++groups;
        }
        std::vector<double> bts(m, 0.0);
        for (std::size_t e = 0; e < p; ++e) {
            bts[edges[e].far] += lambda * s[e];
            bts[edges[e].near] -= lambda * s[e];
        }
        std::vector<double> sum(groups, 0.0), cnt(groups, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            sum[group[i]] += y[i] - bts[i];
            cnt[group[i]] += 1.0;
        }
        std::vector<double> f(m);
        for (std::size_t i = 0; i < m; ++i) f[i] = sum[group[i]] / cnt[group[i]];
        const double obj = tv_objective(edges, y, f, lambda);
        if (obj < best_obj) {
            best_obj = obj;
            best = f;
        }
    }
    return best;
}

// min ||w||_inf s.t. B^T w = y - mean(y), by parametrizing the affine set
// as w_p + K t (K a null-space basis of B^T) and refining a grid over t.
inline double lambda_grid_search(const std::vector<std::size_t>& sizes, const std::vector<double>& y,
                                 int points_per_axis = 41, int rounds = 40) {
    const Eigen::MatrixXd b = dense_diff(sizes);
    const Eigen::MatrixXd bt = b.transpose();
    Eigen::VectorXd c(static_cast<Eigen::Index>(y.size()));
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) c(i) = y[i] - mean;
    const Eigen::VectorXd wp = bt.completeOrthogonalDecomposition().solve(c);
    const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(bt).kernel();
    const Eigen::Index k = bt.cols() - Eigen::FullPivLU<Eigen::MatrixXd>(bt).rank();
    auto value = [&](const Eigen::VectorXd& t) {
        if (k == 0) return wp.cwiseAbs().maxCoeff();
        return (wp + kernel * t).cwiseAbs().maxCoeff();
    };
    if (k == 0) return value(Eigen::VectorXd());
    Eigen::VectorXd center = Eigen::VectorXd::Zero(k);
    double half = 4.0 * (wp.cwiseAbs().maxCoeff() + 1.0);
    double best = value(center);
    for (int round = 0; round < rounds; ++round) {
        Eigen::VectorXd best_t = center;
        std::vector<int> idx(static_cast<std::size_t>(k), 0);
        for (;;) {
            Eigen::VectorXd t(k);
            for (Eigen::Index j = 0; j < k; ++j)
                t(j) = center(j) - half + 2.0 * half * idx[j] / (points_per_axis - 1);
            const double v = value(t);
            if (v < best) {
                best = v;
                best_t = t;
            }
            std::size_t j = 0;
            while (j < idx.size() && ++idx[j] == points_per_axis) idx[j++] = 0;
            if (j == idx.size()) break;
        }
        center = best_t;
        half *= 0.25;
    }
    return best;
}

// Components of the graph joining neighbours with |f_a - f_b| <= tol, by
// breadth-first flood fill over coordinate neighbours.
inline std::size_t flood_fill_components(const std::vector<std::size_t>& sizes, const std::vector<double>& f,
                                         double tol) {
    const std::size_t m = f.size();
    std::vector<std::vector<std::size_t>> adj(m);
    for (const auto& e : lattice_edges(sizes)) {
        if (std::abs(f[e.far] - f[e.near]) <= tol) {
            adj[e.near].push_back(e.far);
            adj[e.far].push_back(e.near);
        }
    }
    std::vector<bool> seen(m, false);
    std::size_t count = 0;
    for (std::size_t s = 0; s < m; ++s) {
        if (seen[s]) continue;
        ++count;
        std::queue<std::size_t> q;
        q.push(s);
        seen[s] = true;
        while (!q.empty()) {
            const auto v = q.front();
            q.pop();
            for (auto u : adj[v])
                if (!seen[u]) {
                    seen[u] = true;
                    q.push(u);
                }
        }
    }
    return count;
}

}  // namespace tvdn::oracle
