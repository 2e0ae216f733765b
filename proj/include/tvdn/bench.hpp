#pragma once

// Seeded Monte Carlo harness for the denoising, segmentation, Lambda-fit and
// image experiments. Replicate r of a cell draws its noise from seed + r and
// writes into slot r, so tables do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tvdn/error.hpp"
#include "tvdn/extreme_value.hpp"
#include "tvdn/io.hpp"
#include "tvdn/lambda.hpp"
#include "tvdn/parallel.hpp"
#include "tvdn/risk.hpp"
#include "tvdn/segmentation.hpp"
#include "tvdn/selection.hpp"
#include "tvdn/signals.hpp"
#include "tvdn/tv_solve.hpp"

namespace tvdn {

enum class Experiment { mse_1d, seg_1d, lambda_fit, image };

struct ExperimentConfig {
    Experiment experiment = Experiment::mse_1d;
    std::vector<std::string> functions;
    std::vector<std::size_t> sizes;
    std::optional<std::size_t> reps;      // default depends on the experiment and N
    std::vector<double> alphas = {0.05};
    std::vector<double> heights = {2.0, 1.0, 0.1};   // jump heights as multiples of h*
    std::size_t pieces = 5;
    double snr = 7.0;
    std::uint64_t seed = 1;
    std::size_t grid_points = 40;         // oracle / SURE search grid
    std::size_t refine_steps = 30;        // golden-section steps after the grid
    std::size_t threads = worker_count();
    SolverConfig solver;
    std::string output;
};

struct ResultRow {
    std::string function;
    std::size_t size = 0;
    std::string method;
    std::string metric;
    double estimate = 0.0;
    double se = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    const ResultRow& at(const std::string& function, std::size_t size, const std::string& method,
                        const std::string& metric) const {
        for (const auto& r : rows)
            if (r.function == function && r.size == size && r.method == method && r.metric == metric) return r;
        throw InputError("no result for " + function + "/" + std::to_string(size) + "/" + method + "/" + metric);
    }

    json to_json() const {
        json j;
        j["schema_version"] = schema_version;
        j["rows"] = json::array();
        for (const auto& r : rows)
            j["rows"].push_back({{"function", r.function},
                                 {"size", r.size},
                                 {"method", r.method},
                                 {"metric", r.metric},
                                 {"estimate", r.estimate},
                                 {"se", r.se}});
        return j;
    }

    std::string to_csv() const {
        std::string out = "function,size,method,metric,estimate,se\n";
        for (const auto& r : rows)
            out += r.function + "," + std::to_string(r.size) + "," + r.method + "," + r.metric + "," +
                   detail::format_double(r.estimate) + "," + detail::format_double(r.se) + "\n";
        return out;
    }
};

// Mean and standard error of the mean.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> x) {
    require(!x.empty(), "mean_se needs at least one value");
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    if (x.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

// Replicates per size for the denoising table: 500, 50, 5 at N = 10^2, 10^3,
// 10^4, i.e. 5e4 / N, kept within [5, 500].
inline std::size_t default_mse_reps(std::size_t n) {
    const double r = std::round(5e4 / static_cast<double>(n));
    return static_cast<std::size_t>(std::clamp(r, 5.0, 500.0));
}

struct LambdaSearch {
    double lambda = 0.0;
    double value = 0.0;
};

// Minimizes `objective` over lambda: a geometric grid from lambda_max / 1e3
// to lambda_max plus zero, then golden-section refinement in log lambda
// between the neighbours of the best grid point. The grid stage runs on
// `threads` workers, so `objective` must be safe to call concurrently.
inline LambdaSearch minimize_over_lambda(double lambda_max, const std::function<double(double)>& objective,
                                         std::size_t grid_points, std::size_t refine_steps,
                                         std::size_t threads = 1) {
    auto grid = default_lambda_grid(lambda_max, std::max<std::size_t>(grid_points, 2));
    if (grid.front() != 0.0) grid.insert(grid.begin(), 0.0);
    std::vector<double> values(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) { values[k] = objective(grid[k]); }, threads);
    const std::size_t best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    LambdaSearch out{grid[best], values[best]};
    if (refine_steps == 0 || grid.size() < 3) return out;
    // Refine on the log scale; a bracket touching zero starts 1e3 below the first positive point.
    const double lo = best <= 1 ? grid[1] * 1e-3 : grid[best - 1];
    const double hi = grid[std::min(best + 1, grid.size() - 1)];
    double a = std::log(lo);
    double b = std::log(hi);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto eval = [&](double t) {
        const double lambda = std::exp(t);
        const double v = objective(lambda);
        if (v < out.value) out = {lambda, v};
        return v;
    };
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = eval(c), fd = eval(d);
    for (std::size_t it = 0; it < refine_steps; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
    }
    return out;
}

inline const std::vector<std::string>& mse_methods() {
    static const std::vector<std::string> m = {"oracle", "sure", "adaptive", "universal"};
    return m;
}

// Risk x 100 (mean over samples of the squared error, averaged over
// replicates) for oracle, SURE, adaptive and universal thresholds, true sigma = 1.
inline ResultTable bench_mse(const ExperimentConfig& cfg) {
    require(!cfg.functions.empty() && !cfg.sizes.empty(), "bench-mse needs functions and sizes");
    ResultTable table;
    const auto& methods = mse_methods();
    for (const auto& name : cfg.functions) {
        const auto fn = parse_test_function(name);
        for (std::size_t n : cfg.sizes) {
            const std::size_t reps = cfg.reps.value_or(default_mse_reps(n));
            require(reps >= 1, "reps must be >= 1");
            const auto f = gen_test_function(fn, n, cfg.snr);
            std::vector<std::vector<double>> loss(methods.size(), std::vector<double>(reps));
            parallel_for(
                reps,
                [&](std::size_t r) {
                    const auto y = add_noise(f, {1.0, replicate_seed(cfg.seed, r)});
                    auto loss_at = [&](double lambda) {
                        return mean_squared_error(tv_solve(y, lambda, cfg.solver).estimate.values, f.values);
                    };
                    auto sure_at = [&](double lambda) { return sure(y, tv_solve(y, lambda, cfg.solver).estimate, 1.0); };
                    const double top = lambda_max(y);
                    loss[1][r] = loss_at(minimize_over_lambda(top, sure_at, cfg.grid_points, cfg.refine_steps).lambda);
                    loss[2][r] = mean_squared_error(adaptive_tv(y, 1.0, cfg.solver).step2.estimate.values, f.values);
                    loss[3][r] = loss_at(universal_threshold_1d(static_cast<double>(n), 1.0));
                    // The oracle is the best lambda seen, including those the other rules picked.
                    loss[0][r] = std::min({minimize_over_lambda(top, loss_at, cfg.grid_points, cfg.refine_steps).value,
                                           loss[1][r], loss[2][r], loss[3][r]});
                },
                cfg.threads);
            for (std::size_t k = 0; k < methods.size(); ++k) {
                for (double& v : loss[k]) v *= 100.0;
                const auto s = mean_se(loss[k]);
                table.rows.push_back({name, n, methods[k], "risk_x100", s.mean, s.se});
            }
        }
    }
    return table;
}

// Piecewise constant truth for the segmentation table: battlements or
// staircase with `pieces` equal pieces and jump `h`, or blocks rescaled so
// that its smallest jump is `h`.
inline PiecewiseConstantSpec segmentation_truth(const std::string& family, std::size_t n, std::size_t pieces,
                                                double h) {
    if (family == "blocks") {
        const auto spec = PiecewiseConstantSpec::from_signal(gen_test_function(TestFunction::blocks, n, 1.0));
        return spec.scaled(h / spec.min_jump());
    }
    return gen_piecewise(parse_piecewise_kind(family), n, pieces, h);
}

inline std::string height_label(double multiple) {
    if (multiple == 1.0) return "h*";
    if (multiple > 1.0) return detail::format_double(multiple) + "h*";
    return "h*/" + detail::format_double(1.0 / multiple);
}

// Exact segmentation and screening frequencies with lambda^ES and the
// universal threshold lambda_N, sigma = 1. Function labels read
// "<family>(<pieces>,<height>)"; a row's size is N.
inline ResultTable bench_seg(const ExperimentConfig& cfg) {
    require(!cfg.functions.empty() && !cfg.sizes.empty(), "bench-seg needs families and sizes");
    require(!cfg.alphas.empty() && !cfg.heights.empty(), "bench-seg needs alphas and heights");
    ResultTable table;
    for (const auto& family : cfg.functions) {
        for (double alpha : cfg.alphas) {
            for (double mult : cfg.heights) {
                for (std::size_t n : cfg.sizes) {
                    const std::size_t reps = cfg.reps.value_or(200);
                    require(reps >= 1, "reps must be >= 1");
                    const double h = mult * min_jump_height(1.0, alpha);
                    const auto spec = segmentation_truth(family, n, cfg.pieces, h);
                    const std::string label = family + "(" + std::to_string(spec.num_levels()) + "," +
                                              height_label(mult) + ")" +
                                              (cfg.alphas.size() > 1 ? "@" + detail::format_double(alpha) : "");
                    const double thresholds[2] = {exact_seg_threshold(spec.max_length(), 1.0, alpha),
                                                  universal_threshold_1d(static_cast<double>(n), 1.0)};
                    const char* names[2] = {"lambda_es", "lambda_n"};
                    std::vector<double> es[2], sc[2], lv[2];
                    for (int k = 0; k < 2; ++k) es[k] = sc[k] = lv[k] = std::vector<double>(reps);
                    const auto f = spec.realize();
                    parallel_for(
                        reps,
                        [&](std::size_t r) {
                            const auto y = add_noise(f, {1.0, replicate_seed(cfg.seed, r)});
                            for (int k = 0; k < 2; ++k) {
                                const auto fit = tv_denoise_1d(y, thresholds[k]).estimate;
                                const auto o = evaluate_outcome(fit, spec, 1.0);
                                es[k][r] = o.exact;
                                sc[k][r] = o.screening;
                                lv[k][r] = static_cast<double>(o.levels_estimated);
                            }
                        },
                        cfg.threads);
                    const double pi0 = spec.alternates() ? exact_seg_probability_bound(spec.num_levels(), alpha)
                                                         : 0.0;
                    table.rows.push_back({label, n, "lambda_es", "pi0", pi0, 0.0});
                    table.rows.push_back({label, n, "truth", "levels",
                                          static_cast<double>(spec.num_levels()), 0.0});
                    for (int k = 0; k < 2; ++k) {
                        const auto a = mean_se(es[k]), b = mean_se(sc[k]), c = mean_se(lv[k]);
                        table.rows.push_back({label, n, names[k], "pi_es", a.mean, a.se});
                        table.rows.push_back({label, n, names[k], "pi_s", b.mean, b.se});
                        table.rows.push_back({label, n, names[k], "mean_levels", c.mean, c.se});
                        table.rows.push_back({label, n, names[k], "lambda", thresholds[k], 0.0});
                    }
                }
            }
        }
    }
    return table;
}

// Plotting positions (i + 0.5) / n against the fitted Gumbel quantiles.
struct QqData {
    std::vector<double> empirical;
    std::vector<double> fitted;
    double correlation = 0.0;
};

inline double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "correlation needs two equal samples of size >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

inline QqData gumbel_qq(std::span<const double> samples, const GumbelParams& fit) {
    QqData q;
    q.empirical.assign(samples.begin(), samples.end());
    std::sort(q.empirical.begin(), q.empirical.end());
    const double n = static_cast<double>(q.empirical.size());
    q.fitted.resize(q.empirical.size());
    for (std::size_t i = 0; i < q.fitted.size(); ++i)
        q.fitted[i] = fit.quantile((static_cast<double>(i) + 0.5) / n);
    q.correlation = pearson_correlation(q.empirical, q.fitted);
    return q;
}

struct LambdaSizeResult {
    std::size_t n = 0;
    std::vector<double> samples;
    GevFit fit;          // Gumbel and GEV fits with the likelihood-ratio test
    QqData qq;
    double closed_form_max_diff = 0.0;   // d = 1 only: max |cut solver - partial sums|
};

struct LambdaFitResult {
    int dim = 2;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<LambdaSizeResult> sizes;
    std::optional<GumbelFitCoefficients> coefficients;   // needs two or more sizes

    LambdaFitFile fit_file() const {
        LambdaFitFile f;
        f.dim = dim;
        f.reps = reps;
        f.seed = seed;
        for (const auto& s : sizes) {
            f.n_values.push_back(static_cast<double>(s.n));
            f.mu.push_back(s.fit.gumbel.mu);
            f.beta.push_back(s.fit.gumbel.beta);
        }
        if (coefficients) f.coefficients = *coefficients;
        return f;
    }

    json to_json() const {
        auto j = tvdn::to_json(fit_file());
        if (!coefficients) {
            for (const char* k : {"a_mu", "b_mu", "a_beta", "b_beta"}) j[k] = nullptr;
        }
        j["fits"] = json::array();
        for (const auto& s : sizes) {
            j["fits"].push_back({{"n", s.n},
                                 {"gumbel_mu", s.fit.gumbel.mu},
                                 {"gumbel_beta", s.fit.gumbel.beta},
                                 {"gev_mu", s.fit.gev.mu},
                                 {"gev_scale", s.fit.gev.scale},
                                 {"gev_xi", s.fit.gev.xi},
                                 {"lr_statistic", s.fit.lr_statistic},
                                 {"p_value", s.fit.p_value},
                                 {"gev_converged", s.fit.converged},
                                 {"qq_correlation", s.qq.correlation}});
        }
        return j;
    }
};

// Lambda of `reps` standard normal draws on the cube N^dim for each N, the
// Gumbel/GEV fits, QQ data, and the log-log regression of (mu, beta). In 1D
// every draw is recomputed with the cut solver and compared against the
// partial-sum closed form.
inline LambdaFitResult lambda_fit(int dim, const std::vector<std::size_t>& sizes, std::size_t reps,
                                  std::uint64_t seed, std::size_t threads = worker_count()) {
    require(dim >= 1 && dim <= 3, "dim must be 1, 2 or 3");
    require(!sizes.empty(), "lambda-fit needs at least one size");
    require(reps >= 30, "lambda-fit needs reps >= 30");
    LambdaFitResult out;
    out.dim = dim;
    out.reps = reps;
    out.seed = seed;
    std::vector<SizedGumbelFit> fits;
    for (std::size_t n : sizes) {
        require(n >= 2, "lattice sides must be >= 2");
        const LatticeShape shape(std::vector<std::size_t>(static_cast<std::size_t>(dim), n));
        LambdaSizeResult s;
        s.n = n;
        s.samples = monte_carlo_lambda(shape, reps, seed, threads);
        if (dim == 1) {
            std::vector<double> diff(reps);
            parallel_for(
                reps,
                [&](std::size_t r) {
                    const Signal y(shape, gaussian_noise(n, 1.0, replicate_seed(seed, r)));
                    diff[r] = std::abs(sample_lambda(y).lambda - s.samples[r]);
                },
                threads);
            s.closed_form_max_diff = *std::max_element(diff.begin(), diff.end());
            if (s.closed_form_max_diff > 1e-6 * (1.0 + *std::max_element(s.samples.begin(), s.samples.end())))
                throw ConvergenceError("Lambda cut solver disagrees with the 1D closed form at N = " +
                                       std::to_string(n));
        }
        s.fit = fit_gev_and_lr_test(s.samples);
        s.qq = gumbel_qq(s.samples, s.fit.gumbel);
        fits.push_back({static_cast<double>(n), s.fit.gumbel});
        out.sizes.push_back(std::move(s));
    }
    std::vector<double> distinct(sizes.begin(), sizes.end());
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() >= 2)
        out.coefficients = fit_loglog_regression(fits, dim);
    return out;
}

// Noise level sigma_f * factor, where sigma_f is the sample standard
// deviation of the image: low SNR 5, medium 1, high 1/5.
struct NoiseRegime {
    std::string name;
    double factor = 1.0;
};

inline const std::vector<NoiseRegime>& image_regimes() {
    static const std::vector<NoiseRegime> r = {{"low", 5.0}, {"medium", 1.0}, {"high", 0.2}};
    return r;
}

// One noisy realization per regime; the loss of each method as a percentage
// above the oracle loss (SURE and adaptive, each with sigma known and with the
// MAD estimate). Losses use the real-valued estimates.
inline ResultTable bench_image(const Signal& image, const std::string& name, const ExperimentConfig& cfg) {
    require(image.shape.dims() == 2, "image experiment needs a two-dimensional signal");
    const double sigma_f = sample_sd(image.values);
    require(sigma_f > 0.0, "image is constant");
    ResultTable table;
    for (std::size_t k = 0; k < image_regimes().size(); ++k) {
        const auto& regime = image_regimes()[k];
        const double sigma = sigma_f * regime.factor;
        const auto y = add_noise(image, {sigma, replicate_seed(cfg.seed, k)});
        const double sigma_hat = estimate_sigma(y);
        auto solve = [&](double lambda) { return tv_solve(y, lambda, cfg.solver).estimate; };
        auto loss_at = [&](double lambda) { return mean_squared_error(solve(lambda).values, image.values); };
        const double top = lambda_max(y);
        auto oracle = minimize_over_lambda(top, loss_at, cfg.grid_points, cfg.refine_steps, cfg.threads);
        auto seen = [&](double lambda, double loss) {
            if (loss < oracle.value) oracle = {lambda, loss};
            return loss;
        };
        auto sure_loss = [&](double s) {
            const auto best = minimize_over_lambda(
                top, [&](double lambda) { return sure(y, solve(lambda), s); }, cfg.grid_points, cfg.refine_steps,
                cfg.threads);
            return seen(best.lambda, loss_at(best.lambda));
        };
        auto adaptive_loss = [&](double s) {
            const auto a = adaptive_tv(y, s, cfg.solver);
            return seen(a.report.lambda2, mean_squared_error(a.step2.estimate.values, image.values));
        };
        const std::pair<std::string, double> results[] = {
            {"sure_sigma_known", sure_loss(sigma)},
            {"adaptive_sigma_known", adaptive_loss(sigma)},
            {"sure_sigma_mad", sure_loss(sigma_hat)},
            {"adaptive_sigma_mad", adaptive_loss(sigma_hat)},
        };
        const std::size_t size = image.size();
        table.rows.push_back({name + ":" + regime.name, size, "oracle", "loss", oracle.value, 0.0});
        table.rows.push_back({name + ":" + regime.name, size, "oracle", "lambda", oracle.lambda, 0.0});
        for (const auto& [method, loss] : results) {
            table.rows.push_back({name + ":" + regime.name, size, method, "loss", loss, 0.0});
            table.rows.push_back(
                {name + ":" + regime.name, size, method, "pct_over_oracle", 100.0 * (loss / oracle.value - 1.0), 0.0});
        }
    }
    return table;
}

}  // namespace tvdn
