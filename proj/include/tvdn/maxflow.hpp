#pragma once

// Dinic max-flow on real capacities.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace tvdn::detail {

class MaxFlow {
public:
    explicit MaxFlow(std::size_t nodes) : adjacency_(nodes) {}

    std::size_t num_nodes() const { return adjacency_.size(); }

    // Adds u -> v with `capacity` and the paired v -> u arc with
    // `reverse_capacity`. Returns the forward arc id.
    std::size_t add_edge(std::size_t u, std::size_t v, double capacity, double reverse_capacity = 0.0) {
        const std::size_t id = to_.size();
        to_.push_back(v);
        capacity_.push_back(capacity);
        residual_.push_back(capacity);
        adjacency_[u].push_back(id);
        to_.push_back(u);
        capacity_.push_back(reverse_capacity);
        residual_.push_back(reverse_capacity);
        adjacency_[v].push_back(id + 1);
        return id;
    }

    void set_capacity(std::size_t arc, double capacity, double reverse_capacity) {
        capacity_[arc] = capacity;
        capacity_[arc ^ 1] = reverse_capacity;
    }

    // Net flow pushed along the forward direction of `arc`.
    double flow(std::size_t arc) const { return capacity_[arc] - residual_[arc]; }

    double solve(std::size_t source, std::size_t sink) {
        residual_ = capacity_;
        double cap_max = 0.0;
        for (double c : capacity_) cap_max = std::max(cap_max, c);
        eps_ = 1e-14 * cap_max;
        double total = 0.0;
        level_.assign(num_nodes(), -1);
        next_.assign(num_nodes(), 0);
        while (build_levels(source, sink)) {
            std::fill(next_.begin(), next_.end(), 0);
            for (;;) {
                const double pushed = augment(source, sink, std::numeric_limits<double>::infinity());
                if (pushed <= 0.0) break;
                total += pushed;
            }
        }
        return total;
    }

    // Nodes reachable from `source` in the residual graph of the last solve.
    std::vector<char> source_side(std::size_t source) const {
        std::vector<char> seen(num_nodes(), 0);
        std::vector<std::size_t> stack{source};
        seen[source] = 1;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t arc : adjacency_[u]) {
                const std::size_t v = to_[arc];
                if (!seen[v] && residual_[arc] > eps_) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        return seen;
    }

private:
    bool build_levels(std::size_t source, std::size_t sink) {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<std::size_t> queue;
        level_[source] = 0;
        queue.push(source);
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop();
            for (std::size_t arc : adjacency_[u]) {
                const std::size_t v = to_[arc];
                if (level_[v] < 0 && residual_[arc] > eps_) {
                    level_[v] = level_[u] + 1;
                    queue.push(v);
                }
            }
        }
        return level_[sink] >= 0;
    }

    double augment(std::size_t u, std::size_t sink, double limit) {
        if (u == sink) return limit;
        auto& arcs = adjacency_[u];
        for (std::size_t& i = next_[u]; i < arcs.size(); ++i) {
            const std::size_t arc = arcs[i];
            const std::size_t v = to_[arc];
            if (level_[v] != level_[u] + 1 || residual_[arc] <= eps_) continue;
            const double pushed = augment(v, sink, std::min(limit, residual_[arc]));
            if (pushed > 0.0) {
                residual_[arc] -= pushed;
                residual_[arc ^ 1] += pushed;
                return pushed;
            }
        }
        return 0.0;
    }

    std::vector<std::vector<std::size_t>> adjacency_;
    std::vector<std::size_t> to_;
    std::vector<double> capacity_;
    std::vector<double> residual_;
    std::vector<int> level_;
    std::vector<std::size_t> next_;
    double eps_ = 0.0;
};

}  // namespace tvdn::detail
