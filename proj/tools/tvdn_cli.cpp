// tvdn: TV denoising, threshold selection and the Monte Carlo benchmarks.
//
// Exit codes: 0 success, 1 internal error, 2 bad input, 3 solver did not converge.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvdn.hpp"

namespace fs = std::filesystem;
using namespace tvdn;

namespace {

constexpr int exit_bad_input = 2;
constexpr int exit_no_convergence = 3;

struct LoadedSignal {
    Signal signal;
    std::optional<PgmImage> pgm;   // header of the source image, reused on output
};

LoadedSignal load_signal(const std::string& path) {
    if (has_pgm_extension(path)) {
        auto img = read_pgm(path);
        auto s = pgm_to_signal(img);
        return {std::move(s), std::move(img)};
    }
    return {read_signal_csv(path), std::nullopt};
}

void save_signal(const std::string& path, const Signal& f, const std::optional<PgmImage>& like) {
    if (has_pgm_extension(path)) {
        write_pgm(path, signal_to_pgm(f, like ? like->maxval : 255, like ? like->binary : true));
        return;
    }
    require(f.shape.dims() == 1, "CSV output needs a one-dimensional signal; use a .pgm path for images");
    write_signal_csv(path, f);
}

void save_table(const std::string& path, const ResultTable& t) {
    if (path.empty()) {
        std::cout << t.to_csv();
        return;
    }
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        detail::write_file(path, t.to_csv());
    } else {
        write_json(path, t.to_json());
    }
}

std::optional<GumbelFitCoefficients> load_coefficients(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return read_coefficients(path);
}

// --- denoise ---------------------------------------------------------------

struct DenoiseOptions {
    std::string in, out, report, truth, coeffs;
    std::string method = "adaptive";
    std::optional<double> lambda;
    std::optional<double> sigma;
    double alpha = 0.05;
    std::size_t grid = 40;
};

int run_denoise(const DenoiseOptions& o) {
    const auto input = load_signal(o.in);
    const Signal& y = input.signal;
    std::optional<Signal> truth;
    if (!o.truth.empty()) {
        truth = load_signal(o.truth).signal;
        require(truth->size() == y.size(), "truth and input sizes differ");
    }
    const auto method = o.lambda ? ThresholdMethod::fixed : parse_threshold_method(o.method);
    require(method != ThresholdMethod::fixed || o.lambda, "method fixed needs --lambda");
    require(method != ThresholdMethod::oracle || truth, "method oracle needs --truth");

    SolverConfig cfg;
    json report;
    report["schema_version"] = schema_version;
    report["method"] = to_string(method);
    report["input"] = o.in;
    report["n_values"] = y.size();
    report["shape"] = y.shape.sizes();

    const bool sigma_estimated = !o.sigma.has_value();
    const double sigma = o.sigma ? *o.sigma : estimate_sigma(y);
    require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and >= 0");
    report["sigma"] = sigma;
    report["sigma_estimated"] = sigma_estimated;

    TvSolution sol;
    const auto coeffs = load_coefficients(o.coeffs);
    switch (method) {
        case ThresholdMethod::fixed:
            sol = tv_solve(y, *o.lambda, cfg);
            break;
        case ThresholdMethod::universal: {
            const double lambda = y.shape.dims() == 1
                                      ? universal_threshold_1d(static_cast<double>(y.size()), sigma)
                                      : universal_threshold_lattice(y.shape, sigma, coeffs).lambda;
            report["lambda1"] = lambda;
            sol = tv_solve(y, lambda, cfg);
            break;
        }
        case ThresholdMethod::adaptive: {
            auto a = adaptive_tv(y, sigma, cfg, coeffs);
            report["lambda1"] = a.report.lambda1;
            report["count1"] = a.report.count1;
            report["n_bar"] = a.report.n_bar;
            report["lambda2"] = a.report.lambda2;
            report["step1_converged"] = a.step1.converged;
            sol = std::move(a.step2);
            break;
        }
        case ThresholdMethod::exact_seg: {
            require(y.shape.dims() == 1, "exact_seg needs a one-dimensional signal");
            // N_max is unknown from data; the fit at lambda_N supplies the piece lengths.
            const auto pilot = tv_solve(y, universal_threshold_1d(static_cast<double>(y.size()), sigma));
            const auto jumps = extract_jumps(pilot.estimate, sigma, JumpRule::calibrated);
            std::size_t prev = 0, n_max = 0;
            for (std::size_t j : jumps) {
                n_max = std::max(n_max, j - prev);
                prev = j;
            }
            n_max = std::max(n_max, y.size() - prev);
            const double lambda = exact_seg_threshold(n_max, sigma, o.alpha);
            report["n_max"] = n_max;
            report["alpha"] = o.alpha;
            sol = tv_solve(y, lambda, cfg);
            break;
        }
        case ThresholdMethod::sure:
        case ThresholdMethod::oracle: {
            auto objective = [&](double lambda) {
                const auto f = tv_solve(y, lambda, cfg).estimate;
                return method == ThresholdMethod::sure ? tvdn::sure(y, f, sigma)
                                                       : mean_squared_error(f.values, truth->values);
            };
            const auto best = minimize_over_lambda(lambda_max(y), objective, o.grid, 30, worker_count());
            report["criterion"] = best.value;
            sol = tv_solve(y, best.lambda, cfg);
            break;
        }
    }

    report["lambda"] = sol.lambda;
    report["ncc"] = ncc(sol.estimate);
    report["gap"] = sol.gap;
    report["objective"] = sol.objective;
    report["iterations"] = sol.iterations;
    report["converged"] = sol.converged;
    if (truth) report["loss"] = mean_squared_error(sol.estimate.values, truth->values);

    if (!o.out.empty()) save_signal(o.out, sol.estimate, input.pgm);
    const std::string report_path = !o.report.empty() ? o.report : (o.out.empty() ? "" : o.out + ".json");
    if (report_path.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        write_json(report_path, report);
    }
    if (!sol.converged) {
        std::cerr << "tvdn: solver stopped at the iteration cap (gap " << sol.gap << ")\n";
        return exit_no_convergence;
    }
    return 0;
}

// --- gen -------------------------------------------------------------------

struct GenOptions {
    std::string function = "blocks";
    std::size_t size = 1000;
    double snr = 7.0;
    double sigma = 1.0;
    std::uint64_t seed = 1;
    std::size_t pieces = 5;
    std::optional<double> height;
    double alpha = 0.05;
    std::string out, truth;
};

int run_gen(const GenOptions& o) {
    Signal f;
    if (o.function == "battlements" || o.function == "staircase") {
        const double h = o.height ? *o.height : 2.0 * min_jump_height(o.sigma, o.alpha);
        f = gen_piecewise(parse_piecewise_kind(o.function), o.size, o.pieces, h).realize();
    } else {
        f = gen_test_function(o.function, o.size, o.snr);
        for (double& v : f.values) v *= o.sigma;
    }
    const auto y = add_noise(f, {o.sigma, o.seed});
    require(!o.out.empty(), "gen needs --out");
    write_signal_csv(o.out, y);
    if (!o.truth.empty()) write_signal_csv(o.truth, f);
    return 0;
}

// --- benchmarks ------------------------------------------------------------

int run_bench_mse(ExperimentConfig cfg) {
    cfg.experiment = Experiment::mse_1d;
    if (cfg.functions.empty()) cfg.functions = {"blocks", "bumps", "heavisine", "doppler", "zero"};
    if (cfg.sizes.empty()) cfg.sizes = {100, 1000, 10000};
    save_table(cfg.output, bench_mse(cfg));
    return 0;
}

int run_bench_seg(ExperimentConfig cfg) {
    cfg.experiment = Experiment::seg_1d;
    if (cfg.functions.empty()) cfg.functions = {"battlements", "staircase"};
    if (cfg.sizes.empty()) cfg.sizes = {100, 1000, 10000};
    save_table(cfg.output, bench_seg(cfg));
    return 0;
}

int run_bench_image(ExperimentConfig cfg, const std::string& in) {
    cfg.experiment = Experiment::image;
    const auto img = load_signal(in).signal;
    require(img.shape.dims() == 2, "bench-image needs a PGM image");
    save_table(cfg.output, bench_image(img, fs::path(in).stem().string(), cfg));
    return 0;
}

struct LambdaOptions {
    int dim = 2;
    std::vector<std::size_t> sizes;
    std::size_t reps = 200;
    std::uint64_t seed = 1;
    std::string out;
};

int run_lambda_sample(const LambdaOptions& o) {
    require(o.dim >= 1 && o.dim <= 3, "dim must be 1, 2 or 3");
    require(o.sizes.size() == 1, "lambda-sample takes exactly one size");
    require(!o.out.empty(), "lambda-sample needs --out");
    const LatticeShape shape(std::vector<std::size_t>(static_cast<std::size_t>(o.dim), o.sizes[0]));
    write_lambda_csv(o.out, monte_carlo_lambda(shape, o.reps, o.seed));
    return 0;
}

// Writes <out>/samples_n<N>.csv, <out>/qq_n<N>.csv and <out>/fit.json.
int run_lambda_fit(const LambdaOptions& o) {
    require(!o.sizes.empty(), "lambda-fit needs --sizes");
    require(!o.out.empty(), "lambda-fit needs --out (a directory)");
    const auto result = lambda_fit(o.dim, o.sizes, o.reps, o.seed);
    fs::create_directories(o.out);
    for (const auto& s : result.sizes) {
        const std::string tag = "n" + std::to_string(s.n);
        write_lambda_csv((fs::path(o.out) / ("samples_" + tag + ".csv")).string(), s.samples);
        detail::write_file((fs::path(o.out) / ("qq_" + tag + ".csv")).string(),
                           two_column_csv("empirical", "fitted", s.qq.empirical, s.qq.fitted));
    }
    write_json((fs::path(o.out) / "fit.json").string(), result.to_json());
    return 0;
}

struct RiskOptions {
    std::string in, out, truth;
    std::optional<double> sigma;
    std::size_t grid = 30;
};

int run_risk_curve(const RiskOptions& o) {
    const auto y = load_signal(o.in).signal;
    const auto grid = default_lambda_grid(lambda_max(y), o.grid);
    RiskCurve curve;
    if (!o.truth.empty()) {
        const auto truth = load_signal(o.truth).signal;
        curve = risk_curve(y, grid, OracleCriterion{truth}, {}, worker_count());
    } else {
        const double sigma = o.sigma ? *o.sigma : estimate_sigma(y);
        curve = risk_curve(y, grid, SureCriterion{sigma}, {}, worker_count());
    }
    const auto csv = two_column_csv("lambda", "value", curve.lambdas, curve.values);
    if (o.out.empty()) {
        std::cout << csv;
    } else {
        detail::write_file(o.out, csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Total variation denoising with universal threshold selection"};
    app.require_subcommand(1);

    DenoiseOptions dn;
    auto* denoise = app.add_subcommand("denoise", "Denoise a CSV signal or PGM image");
    denoise->add_option("--in", dn.in, "Input (.csv with header 'value', or .pgm)")->required();
    denoise->add_option("--out", dn.out, "Estimate, written in the input's format");
    denoise->add_option("--report", dn.report, "JSON report path (default <out>.json, or stdout)");
    denoise->add_option("--method", dn.method, "fixed, universal, adaptive, sure, oracle or exact_seg");
    denoise->add_option("--lambda", dn.lambda, "Fixed threshold (implies --method fixed)");
    auto* sig = denoise->add_option("--sigma", dn.sigma, "Noise level; estimated by MAD when absent");
    denoise->add_option("--sigma-known", dn.sigma, "Alias of --sigma")->excludes(sig);
    denoise->add_option("--truth", dn.truth, "Noiseless signal: enables --method oracle and the loss");
    denoise->add_option("--coeffs", dn.coeffs, "Gumbel coefficient JSON from lambda-fit");
    denoise->add_option("--alpha", dn.alpha, "Level for exact_seg");
    denoise->add_option("--grid", dn.grid, "Grid points for sure/oracle");

    GenOptions gn;
    auto* gen = app.add_subcommand("gen", "Generate a noisy 1D test signal");
    gen->add_option("--function", gn.function, "blocks, bumps, heavisine, doppler, zero, battlements, staircase");
    gen->add_option("--sizes", gn.size, "N");
    gen->add_option("--snr", gn.snr, "Signal standard deviation over sigma");
    gen->add_option("--sigma", gn.sigma, "Noise level");
    gen->add_option("--seed", gn.seed);
    gen->add_option("--pieces", gn.pieces, "Pieces for battlements/staircase");
    gen->add_option("--height", gn.height, "Jump height (default 2 h*)");
    gen->add_option("--alpha", gn.alpha, "Level defining h*");
    gen->add_option("--out", gn.out, "Noisy signal CSV")->required();
    gen->add_option("--truth", gn.truth, "Noiseless signal CSV");

    ExperimentConfig mse;
    auto* bmse = app.add_subcommand("bench-mse", "Risk x 100 of oracle, SURE, adaptive and universal thresholds");
    bmse->add_option("--function", mse.functions, "Test functions (default all five)");
    bmse->add_option("--sizes", mse.sizes, "N values (default 100 1000 10000)");
    bmse->add_option("--reps", mse.reps, "Replicates (default 500, 50, 5 by N)");
    bmse->add_option("--seed", mse.seed);
    bmse->add_option("--snr", mse.snr);
    bmse->add_option("--grid", mse.grid_points, "Grid points for oracle/SURE");
    bmse->add_option("--out", mse.output, ".json or .csv (default CSV on stdout)");

    ExperimentConfig seg;
    auto* bseg = app.add_subcommand("bench-seg", "Exact segmentation and screening frequencies");
    bseg->add_option("--function", seg.functions, "battlements, staircase, blocks");
    bseg->add_option("--sizes", seg.sizes, "N values (default 100 1000 10000)");
    bseg->add_option("--reps", seg.reps, "Replicates (default 200)");
    bseg->add_option("--seed", seg.seed);
    bseg->add_option("--alpha", seg.alphas, "Levels for lambda^ES and h*");
    bseg->add_option("--heights", seg.heights, "Jump heights as multiples of h*");
    bseg->add_option("--pieces", seg.pieces);
    bseg->add_option("--out", seg.output, ".json or .csv (default CSV on stdout)");

    ExperimentConfig img;
    std::string img_in;
    auto* bimg = app.add_subcommand("bench-image", "Percentage over oracle loss on one PGM image");
    bimg->add_option("--in", img_in, "Clean image (.pgm)")->required();
    bimg->add_option("--seed", img.seed);
    bimg->add_option("--grid", img.grid_points, "Grid points for oracle/SURE");
    bimg->add_option("--out", img.output, ".json or .csv (default CSV on stdout)");

    LambdaOptions ls;
    auto* lsample = app.add_subcommand("lambda-sample", "Monte Carlo draws of Lambda on N^d");
    lsample->add_option("--dim", ls.dim);
    lsample->add_option("--sizes", ls.sizes, "Side N")->required();
    lsample->add_option("--reps", ls.reps);
    lsample->add_option("--seed", ls.seed);
    lsample->add_option("--out", ls.out, "CSV with header 'lambda'")->required();

    LambdaOptions lf;
    auto* lfit = app.add_subcommand("lambda-fit", "Gumbel/GEV fits per N and the log-log regression");
    lfit->add_option("--dim", lf.dim);
    lfit->add_option("--sizes", lf.sizes, "Sides N")->required();
    lfit->add_option("--reps", lf.reps);
    lfit->add_option("--seed", lf.seed);
    lfit->add_option("--out", lf.out, "Output directory")->required();

    RiskOptions rk;
    auto* rcurve = app.add_subcommand("risk-curve", "SURE (or true loss with --truth) over a lambda grid");
    rcurve->add_option("--in", rk.in)->required();
    rcurve->add_option("--out", rk.out, "CSV lambda,value (default stdout)");
    rcurve->add_option("--sigma", rk.sigma);
    rcurve->add_option("--truth", rk.truth);
    rcurve->add_option("--grid", rk.grid, "Grid points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_bad_input;
    }

    try {
        if (*denoise) return run_denoise(dn);
        if (*gen) return run_gen(gn);
        if (*bmse) return run_bench_mse(mse);
        if (*bseg) return run_bench_seg(seg);
        if (*bimg) return run_bench_image(img, img_in);
        if (*lsample) return run_lambda_sample(ls);
        if (*lfit) return run_lambda_fit(lf);
        if (*rcurve) return run_risk_curve(rk);
    } catch (const ConvergenceError& e) {
        std::cerr << "tvdn: " << e.what() << "\n";
        return exit_no_convergence;
    } catch (const InputError& e) {
        std::cerr << "tvdn: " << e.what() << "\n";
        return exit_bad_input;
    } catch (const json::exception& e) {
        std::cerr << "tvdn: " << e.what() << "\n";
        return exit_bad_input;
    } catch (const std::exception& e) {
        std::cerr << "tvdn: internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
