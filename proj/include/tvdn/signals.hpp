#pragma once

// Test signals: the Donoho-Johnstone functions, piecewise constant
// constructions and seeded Gaussian noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tvdn/error.hpp"
#include "tvdn/grid.hpp"

namespace tvdn {

enum class TestFunction { blocks, bumps, heavisine, doppler, zero };

inline TestFunction parse_test_function(std::string_view name) {
    if (name == "blocks") return TestFunction::blocks;
    if (name == "bumps") return TestFunction::bumps;
    if (name == "heavisine") return TestFunction::heavisine;
    if (name == "doppler") return TestFunction::doppler;
    if (name == "zero") return TestFunction::zero;
    throw InputError("unknown test function: " + std::string(name));
}

inline std::string to_string(TestFunction fn) {
    switch (fn) {
        case TestFunction::blocks: return "blocks";
        case TestFunction::bumps: return "bumps";
        case TestFunction::heavisine: return "heavisine";
        case TestFunction::doppler: return "doppler";
        case TestFunction::zero: return "zero";
    }
    return "unknown";
}

inline double sample_sd(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

namespace detail {

constexpr std::array<double, 11> kJumpPositions = {0.10, 0.13, 0.15, 0.23, 0.25, 0.40,
                                                    0.44, 0.65, 0.76, 0.78, 0.81};
constexpr std::array<double, 11> kBlockHeights = {4.0, -5.0, 3.0, -4.0, 5.0, -4.2,
                                                   2.1, 4.3,  -3.1, 2.1, -4.2};
constexpr std::array<double, 11> kBumpHeights = {4.0, 5.0, 3.0, 4.0, 5.0, 4.2,
                                                  2.1, 4.3, 3.1, 5.1, 4.2};
constexpr std::array<double, 11> kBumpWidths = {0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                                 0.01,  0.01,  0.005, 0.008, 0.005};

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

// Unscaled shapes on t in (0, 1]. Blocks uses a right-continuous step so
// that a sample landing exactly on a jump position takes the new level.
inline double test_function_value(TestFunction fn, double t) {
    switch (fn) {
        case TestFunction::blocks: {
            double v = 0.0;
            for (std::size_t j = 0; j < kJumpPositions.size(); ++j)
                if (t >= kJumpPositions[j]) v += kBlockHeights[j];
            return v;
        }
        case TestFunction::bumps: {
            double v = 0.0;
            for (std::size_t j = 0; j < kJumpPositions.size(); ++j)
                v += kBumpHeights[j] *
                     std::pow(1.0 + std::abs((t - kJumpPositions[j]) / kBumpWidths[j]), -4.0);
            return v;
        }
        case TestFunction::heavisine:
            return 4.0 * std::sin(4.0 * M_PI * t) - sgn(t - 0.3) - sgn(0.72 - t);
        case TestFunction::doppler: {
            constexpr double eps = 0.05;
            return std::sqrt(t * (1.0 - t)) * std::sin(2.0 * M_PI * (1.0 + eps) / (t + eps));
        }
        case TestFunction::zero: return 0.0;
    }
    return 0.0;
}

}  // namespace detail

// Samples the named function at t_i = i / N, i = 1..N, and rescales it so
// that its sample standard deviation equals `snr` (noise is added later at
// sigma = 1). The zero function ignores snr.
inline Signal gen_test_function(TestFunction fn, std::size_t n, double snr) {
    require(n >= 8, "test functions need N >= 8");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1) / static_cast<double>(n);
        v[i] = detail::test_function_value(fn, t);
    }
    if (fn != TestFunction::zero) {
        require(snr > 0.0, "snr must be positive");
        const double sd = sample_sd(v);
        require(sd > 0.0, "test function is constant at this size");
        for (double& x : v) x *= snr / sd;
    }
    return Signal::line(std::move(v));
}

inline Signal gen_test_function(std::string_view name, std::size_t n, double snr) {
    return gen_test_function(parse_test_function(name), n, snr);
}

// An L-piece constant vector: level h_l repeated N_l times.
class PiecewiseConstantSpec {
public:
    PiecewiseConstantSpec() = default;

    // Consecutive equal levels are merged.
    PiecewiseConstantSpec(std::vector<double> levels, std::vector<std::size_t> lengths) {
        require(!levels.empty() && levels.size() == lengths.size(),
                "levels and lengths must be non-empty and equally long");
        for (std::size_t l = 0; l < levels.size(); ++l) {
            require(lengths[l] >= 1, "segment lengths must be positive");
            require(std::isfinite(levels[l]), "levels must be finite");
            if (!levels_.empty() && levels_.back() == levels[l]) {
                lengths_.back() += lengths[l];
            } else {
                levels_.push_back(levels[l]);
                lengths_.push_back(lengths[l]);
            }
        }
    }

    // Reads the exact level structure of a 1D signal.
    static PiecewiseConstantSpec from_signal(const Signal& f) {
        require(f.shape.dims() == 1, "piecewise constant specs are one-dimensional");
        std::vector<double> levels;
        std::vector<std::size_t> lengths;
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i == 0 || f[i] != f[i - 1]) {
                levels.push_back(f[i]);
                lengths.push_back(1);
            } else {
                ++lengths.back();
            }
        }
        return PiecewiseConstantSpec(std::move(levels), std::move(lengths));
    }

    std::size_t num_levels() const { return levels_.size(); }
    const std::vector<double>& levels() const { return levels_; }
    const std::vector<std::size_t>& lengths() const { return lengths_; }

    std::size_t num_samples() const {
        return std::accumulate(lengths_.begin(), lengths_.end(), std::size_t{0});
    }

    std::size_t max_length() const { return *std::max_element(lengths_.begin(), lengths_.end()); }

    // Cumulative lengths N_1, N_1 + N_2, ... for the L - 1 jumps. A jump at
    // location j means samples j - 1 and j (0-based) differ.
    std::vector<std::size_t> jump_locations() const {
        std::vector<std::size_t> out;
        std::size_t acc = 0;
        for (std::size_t l = 0; l + 1 < lengths_.size(); ++l) {
            acc += lengths_[l];
            out.push_back(acc);
        }
        return out;
    }

    // s_1 .. s_{L-1}; s_0 = s_L = 0 are implicit.
    std::vector<int> jump_signs() const {
        std::vector<int> out;
        for (std::size_t l = 0; l + 1 < levels_.size(); ++l)
            out.push_back(levels_[l + 1] > levels_[l] ? 1 : -1);
        return out;
    }

    // Whether s_{l+1} = -s_l for every consecutive pair of jumps.
    bool alternates() const {
        const auto s = jump_signs();
        for (std::size_t l = 0; l + 1 < s.size(); ++l)
            if (s[l + 1] != -s[l]) return false;
        return true;
    }

    double min_jump() const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l + 1 < levels_.size(); ++l)
            m = std::min(m, std::abs(levels_[l + 1] - levels_[l]));
        return m;
    }

    PiecewiseConstantSpec scaled(double c) const {
        auto levels = levels_;
        for (double& h : levels) h *= c;
        return PiecewiseConstantSpec(std::move(levels), lengths_);
    }

    Signal realize() const {
        std::vector<double> v;
        v.reserve(num_samples());
        for (std::size_t l = 0; l < levels_.size(); ++l) v.insert(v.end(), lengths_[l], levels_[l]);
        return Signal::line(std::move(v));
    }

private:
    std::vector<double> levels_;
    std::vector<std::size_t> lengths_;
};

enum class PiecewiseKind { battlements, staircase };

inline PiecewiseKind parse_piecewise_kind(std::string_view name) {
    if (name == "battlements") return PiecewiseKind::battlements;
    if (name == "staircase") return PiecewiseKind::staircase;
    throw InputError("unknown piecewise constant family: " + std::string(name));
}

// Battlements alternate 0, h, 0, h, ...; staircases climb 0, h, 2h, ....
// When L does not divide N the leftover samples go one each to the
// leftmost segments.
inline PiecewiseConstantSpec gen_piecewise(PiecewiseKind kind, std::size_t n, std::size_t pieces,
                                           double h) {
    require(pieces >= 1, "need at least one piece");
    require(pieces <= n, "more pieces than samples");
    require(h != 0.0 || pieces == 1, "jump height must be non-zero");
    std::vector<double> levels(pieces);
    std::vector<std::size_t> lengths(pieces, n / pieces);
    for (std::size_t l = 0; l < n % pieces; ++l) ++lengths[l];
    for (std::size_t l = 0; l < pieces; ++l) {
        levels[l] = kind == PiecewiseKind::battlements ? (l % 2 == 0 ? 0.0 : h)
                                                       : h * static_cast<double>(l);
    }
    return PiecewiseConstantSpec(std::move(levels), std::move(lengths));
}

struct NoiseSpec {
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

// Replicate r of an experiment seeded with `base` draws from base + r.
inline std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t replicate) {
    return base + replicate;
}

// Engine for one seed. Nearby integer seeds are spread through seed_seq so
// that replicates base, base + 1, ... do not start from related states.
inline std::mt19937_64 seeded_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return std::mt19937_64(seq);
}

inline std::vector<double> gaussian_noise(std::size_t n, double sigma, std::uint64_t seed) {
    auto rng = seeded_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(n);
    for (double& x : out) x = sigma * normal(rng);
    return out;
}

// y = f + eps with eps iid N(0, sigma^2) from the seeded stream.
inline Signal add_noise(const Signal& f, const NoiseSpec& noise) {
    require(std::isfinite(noise.sigma) && noise.sigma >= 0.0, "noise sigma must be finite and >= 0");
    if (noise.sigma == 0.0) return f;
    auto eps = gaussian_noise(f.size(), noise.sigma, noise.seed);
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] += f.values[i];
    return Signal(f.shape, std::move(eps));
}

}  // namespace tvdn
