#include "cli/app.hpp"

#include "cli/benchmark.hpp"
#include "cli/json_config.hpp"
#include "cli/report.hpp"

#include "irrnn/error.hpp"
#include "irrnn/estimator.hpp"
#include "irrnn/metrics.hpp"
#include "irrnn/simgen.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#ifndef IRRNN_VERSION
#define IRRNN_VERSION "unknown"
#endif

namespace irrnn::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kSimulationSidecar = "simulation.json";

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collected while a command runs and written to <out>/run.log at the end.
struct RunLog {
    fs::path dir;
    std::vector<std::string> lines;

    void add(const std::string& key, const std::string& value) { lines.push_back(key + ": " + value); }

    void write(const std::string& status) const {
        if (dir.empty()) {
            return;
        }
        std::error_code ec;
        fs::create_directories(dir, ec);
        std::ofstream out(dir / "run.log", std::ios::trunc);
        if (!out) {
            return;
        }
        for (const auto& l : lines) {
            out << l << '\n';
        }
        out << "status: " << status << '\n';
    }
};

std::string versions() {
    std::ostringstream s;
    s << "irrnn " << IRRNN_VERSION << ", Eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
      << EIGEN_MINOR_VERSION << ", compiler " << __VERSION__;
    return s.str();
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + format_number(v[i]);
    }
    return s;
}

std::vector<int> parse_dims(const std::string& text) {
    std::vector<int> dims;
    std::string cur;
    auto flush = [&] {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(cur, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (cur.empty() || used != cur.size()) {
            throw InvalidArgument("bad grid dimensions '" + text + "'");
        }
        dims.push_back(v);
        cur.clear();
    };
    for (char c : text) {
        if (c == ',' || c == 'x') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    return dims;
}

std::string noise_of(const fs::path& dataset_dir) {
    std::ifstream in(dataset_dir / kSimulationSidecar);
    if (!in) {
        return "unknown";
    }
    try {
        auto j = nlohmann::json::parse(in);
        return j.value("noise", "unknown");
    } catch (const nlohmann::json::exception&) {
        return "unknown";
    }
}

struct FitArgs {
    int layers = 4;
    int width = 64;
    int epochs = 500;
    int batch = 32;
    double lr = 0.1;
    double lr_decay = 0.995;
    std::optional<double> lambda;
    std::vector<double> eta;
    std::string activation = "relu";
    double alpha_level = 0.05;
    int folds = 5;

    void add_to(CLI::App& app) {
        app.add_option("--layers", layers, "Hidden layers per network")->capture_default_str();
        app.add_option("--width", width, "Units per hidden layer")->capture_default_str();
        app.add_option("--epochs", epochs, "SGD epochs per network")->capture_default_str();
        app.add_option("--batch", batch, "Mini-batch size in voxels")->capture_default_str();
        app.add_option("--lr", lr, "Initial learning rate")->capture_default_str();
        app.add_option("--lr-decay", lr_decay, "Per-epoch learning-rate factor")->capture_default_str();
        app.add_option("--lambda", lambda, "L1 weight (default: voxel-wise Lasso CV)");
        app.add_option("--eta", eta, "Per-covariate thresholds, comma separated (default: MUA-matched)")
            ->delimiter(',');
        app.add_option("--activation", activation, "relu or sigmoid")->capture_default_str();
        app.add_option("--alpha-level", alpha_level, "Two-sided level of the MUA z-test")->capture_default_str();
        app.add_option("--folds", folds, "Cross-validation folds for lambda")->capture_default_str();
    }

    FitConfig build(std::uint64_t seed) const {
        FitConfig cfg = FitConfig::defaults(seed);
        cfg.set_architecture(layers, width);
        const Activation act = parse_activation(activation);
        cfg.net_beta.activation = act;
        cfg.net_alpha.activation = act;
        cfg.net_sigma.activation = act;
        cfg.train.epochs = epochs;
        cfg.train.batch_size = batch;
        cfg.train.learning_rate = lr;
        cfg.train.lr_decay = lr_decay;
        cfg.lambda = lambda;
        if (!eta.empty()) {
            cfg.eta = eta;
        }
        cfg.alpha_level = alpha_level;
        cfg.lambda_selection.folds = folds;
        // Everything that does not depend on the data is checked up front.
        cfg.validate(eta.empty() ? 1 : static_cast<Index>(eta.size()));
        (void)normal_critical_value(alpha_level);
        if (folds < 2) {
            throw InvalidArgument("--folds must be >= 2");
        }
        return cfg;
    }
};

void describe(RunLog& log, const FitConfig& cfg) {
    log.add("net_beta_seed", std::to_string(cfg.net_beta.seed));
    log.add("net_alpha_seed", std::to_string(cfg.net_alpha.seed));
    log.add("net_sigma_seed", std::to_string(cfg.net_sigma.seed));
    log.add("train_seed", std::to_string(cfg.train.seed));
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::vector<int> dims{16, 16, 8};
    int n = 20;
    int j = 3;
    std::string noise = "gaussian";
    std::vector<double> ratio{0.2, 0.5, 1.0};
    std::uint64_t seed = 0;
    std::string out;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out, RunLog& log) {
    SimConfig cfg;
    cfg.dims = a.dims;
    cfg.subjects = a.n;
    cfg.covariates = a.j;
    cfg.noise = parse_noise(a.noise);
    if (a.ratio.size() != 3) {
        throw InvalidArgument("--ratio needs three values");
    }
    std::copy(a.ratio.begin(), a.ratio.end(), cfg.variance_ratio.begin());
    cfg.seed = a.seed;
    cfg.validate();

    const fs::path dir = a.out;
    log.dir = dir;
    log.add("seed", std::to_string(a.seed));
    const auto start = Clock::now();
    const Simulation sim = generate(cfg);
    log.add("generate_seconds", format_number(seconds_since(start)));
    const auto save_start = Clock::now();
    save_dataset(sim.data, dir, &sim.truth);

    nlohmann::json side = {{"dims", cfg.dims},
                           {"subjects", cfg.subjects},
                           {"covariates", cfg.covariates},
                           {"noise", std::string(to_string(cfg.noise))},
                           {"variance_ratio", cfg.variance_ratio},
                           {"seed", cfg.seed}};
    std::ofstream sf(dir / kSimulationSidecar, std::ios::trunc);
    if (!sf) {
        throw IoError("cannot write " + (dir / kSimulationSidecar).string());
    }
    sf << side.dump(2) << '\n';
    log.add("save_seconds", format_number(seconds_since(save_start)));

    const auto realized = component_variances(sim.data, sim.truth);
    std::ostringstream ratio;
    ratio << std::fixed << std::setprecision(4) << realized[0] / realized[2] * cfg.variance_ratio[2] << " : "
          << realized[1] / realized[2] * cfg.variance_ratio[2] << " : " << cfg.variance_ratio[2];
    out << "wrote " << dir.string() << '\n';
    out << "V = " << sim.data.voxels() << '\n';
    out << "realized variance ratio (main : deviation : error) = " << ratio.str() << '\n';
    log.add("realized_ratio", ratio.str());
}

// ---- fit ------------------------------------------------------------------

struct FitCommandArgs {
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
    FitArgs fit;
};

void cmd_fit(const FitCommandArgs& a, std::ostream& out, RunLog& log) {
    FitConfig cfg = a.fit.build(a.seed);
    log.dir = a.out;
    log.add("seed", std::to_string(a.seed));
    describe(log, cfg);

    const Dataset ds = load_dataset(a.data);
    cfg.validate(ds.covariates());
    const auto start = Clock::now();
    const FitResult r = fit(ds, cfg);
    const double elapsed = seconds_since(start);
    save_fit(r, a.out);

    const bool unchanged = (r.beta_hat.array() == r.beta_tilde.array()).all();
    out << "lambda = " << format_number(r.tuning.lambda) << (r.tuning.lambda_selected ? " (cross-validated)" : "")
        << '\n';
    out << "eta = " << join(r.tuning.eta) << (r.tuning.eta_selected ? " (matched to MUA counts)" : "") << '\n';
    out << "beta_hat == beta_tilde: " << (unchanged ? "yes" : "no") << '\n';
    out << "wall time = " << std::fixed << std::setprecision(2) << elapsed << " s" << std::defaultfloat << '\n';
    log.add("lambda", format_number(r.tuning.lambda));
    log.add("eta", join(r.tuning.eta));
    log.add("fit_seconds", format_number(elapsed));
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    std::string fit;
    std::string truth;
    std::string test;
    bool with_alpha = false;
    bool slices = false;
    std::string out;
};

void dump_slices(const FitResult& f, const Dataset& ds, const GroundTruth& truth, const fs::path& dir) {
    fs::create_directories(dir);
    const auto& dims = ds.grid.dims();
    const int slice = dims.size() == 3 ? dims[2] / 2 : 0;
    std::ofstream side(dir / "slices.txt", std::ios::trunc);
    if (!side) {
        throw IoError("cannot write " + (dir / "slices.txt").string());
    }
    side << "# file slice min max (pixel 0 = min, 255 = max)\n";
    for (Index j = 0; j < truth.beta.rows(); ++j) {
        const std::pair<std::string, Vector> images[] = {
            {"beta_true_" + std::to_string(j) + ".pgm", truth.beta.row(j).transpose()},
            {"beta_hat_" + std::to_string(j) + ".pgm", f.beta_hat.row(j).transpose()},
        };
        for (const auto& [name, values] : images) {
            const auto [lo, hi] = write_slice_pgm(dir / name, values, ds.grid, slice);
            side << name << ' ' << slice << ' ' << format_number(lo) << ' ' << format_number(hi) << '\n';
        }
    }
}

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out, RunLog& log) {
    if (a.truth.empty() && a.test.empty()) {
        throw InvalidArgument("evaluate needs --truth and/or --test");
    }
    if (a.slices && (a.truth.empty() || a.out.empty())) {
        throw InvalidArgument("--slices needs --truth and --out");
    }
    if (a.with_alpha && a.test.empty() && a.truth.empty()) {
        throw InvalidArgument("--with-alpha needs a dataset");
    }
    log.dir = a.out;
    const FitResult f = load_fit(a.fit);

    MetricsReport report;
    for (auto field : MetricsReport::kFields) {
        report.set(field, std::numeric_limits<double>::quiet_NaN());
    }
    std::string noise = "unknown";
    int subjects = static_cast<int>(f.alpha_hat.rows());
    if (!a.truth.empty()) {
        const Dataset ds = load_dataset(a.truth);
        const auto truth = load_ground_truth(a.truth);
        if (!truth) {
            throw FormatError("truth", "no ground-truth arrays in " + a.truth);
        }
        if (ds.grid.dims() != f.grid_dims) {
            throw FormatError("dims", "truth grid does not match the fitted grid");
        }
        report = evaluate(estimate_from_fit(f), *truth);
        report.recon_mse = std::numeric_limits<double>::quiet_NaN();
        noise = noise_of(a.truth);
        subjects = static_cast<int>(ds.subjects());
        if (a.slices) {
            dump_slices(f, ds, *truth, fs::path(a.out) / "slices");
        }
    }
    if (!a.test.empty() || a.with_alpha) {
        const std::string dir = a.test.empty() ? a.truth : a.test;
        const Dataset test = load_dataset(dir);
        report.recon_mse = recon_mse(f, test, a.with_alpha);
        if (noise == "unknown") {
            noise = noise_of(dir);
        }
    }

    const std::string text = format_report(report);
    out << text;
    std::vector<CsvRow> rows;
    for (auto field : MetricsReport::kFields) {
        rows.push_back({"irrnn", subjects, dims_label(f.grid_dims), noise, std::string(field), report.get(field), 0.0});
    }
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::ofstream t(fs::path(a.out) / "report.txt", std::ios::trunc);
        std::ofstream c(fs::path(a.out) / "metrics.csv", std::ios::trunc);
        if (!t || !c) {
            throw IoError("cannot write reports under " + a.out);
        }
        t << text;
        write_csv(c, rows);
    }
}

// ---- benchmark ------------------------------------------------------------

struct BenchmarkArgs {
    int reps = 10;
    std::vector<int> n{20};
    std::vector<std::string> dims{"16,16,8"};
    std::vector<std::string> noise{"gaussian"};
    std::vector<std::string> methods{"mua", "smua", "irrnn"};
    int j = 3;
    std::vector<double> ratio{0.2, 0.5, 1.0};
    double smooth_sigma = 1.0;
    int jobs = 1;
    std::uint64_t seed = 0;
    bool hundredths = false;
    std::string out;
    FitArgs fit;
};

void cmd_benchmark(const BenchmarkArgs& a, std::ostream& out, std::ostream& err, RunLog& log) {
    BenchmarkPlan plan;
    plan.reps = a.reps;
    plan.seed = a.seed;
    plan.covariates = a.j;
    if (a.ratio.size() != 3) {
        throw InvalidArgument("--ratio needs three values");
    }
    std::copy(a.ratio.begin(), a.ratio.end(), plan.variance_ratio.begin());
    plan.smooth_sigma = a.smooth_sigma;
    plan.jobs = a.jobs;
    plan.fit = a.fit.build(a.seed);
    plan.methods.clear();
    for (const auto& m : a.methods) {
        plan.methods.push_back(parse_method(m));
    }
    for (int n : a.n) {
        for (const auto& d : a.dims) {
            for (const auto& k : a.noise) {
                plan.cells.push_back({n, parse_dims(d), parse_noise(k)});
            }
        }
    }
    plan.validate();

    log.dir = a.out;
    log.add("seed", std::to_string(a.seed));
    log.add("replication_seeds", "derive_seed(seed, rep); fit seed derive_seed(replication seed, 1)");

    const auto start = Clock::now();
    auto progress = [&](const Cell& cell, const Replication& r) {
        err << "N=" << cell.subjects << " dims=" << dims_label(cell.dims) << " noise=" << to_string(cell.noise)
            << " rep " << r.index;
        for (std::size_t k = 0; k < plan.methods.size(); ++k) {
            const auto& o = r.outcomes[k];
            err << "  " << to_string(plan.methods[k]) << ' ' << std::fixed << std::setprecision(2) << o.seconds
                << 's' << std::defaultfloat;
            if (!o.ok()) {
                err << " FAILED (" << o.error << ')';
            }
        }
        err << '\n';
    };
    const auto results = run_benchmark(plan, progress);
    const double elapsed = seconds_since(start);

    const std::string table = format_table(results, plan.methods, a.hundredths);
    out << table;
    log.add("benchmark_seconds", format_number(elapsed));
    for (const auto& cell : results) {
        for (const auto& r : cell.reps) {
            std::string timing;
            for (std::size_t k = 0; k < plan.methods.size(); ++k) {
                timing += std::string(k ? " " : "") + std::string(to_string(plan.methods[k])) + "=" +
                          format_number(r.outcomes[k].seconds);
            }
            log.add("seconds N=" + std::to_string(cell.cell.subjects) + " dims=" + dims_label(cell.cell.dims) +
                        " noise=" + std::string(to_string(cell.cell.noise)) + " rep " + std::to_string(r.index),
                    timing);
            for (std::size_t k = 0; k < plan.methods.size(); ++k) {
                if (!r.outcomes[k].ok()) {
                    log.add("failure", std::string(to_string(plan.methods[k])) + " N=" +
                                           std::to_string(cell.cell.subjects) + " dims=" +
                                           dims_label(cell.cell.dims) + " rep " + std::to_string(r.index) + ": " +
                                           r.outcomes[k].error);
                }
            }
        }
    }
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::ofstream t(fs::path(a.out) / "table.txt", std::ios::trunc);
        std::ofstream s(fs::path(a.out) / "summary.csv", std::ios::trunc);
        std::ofstream r(fs::path(a.out) / "replications.csv", std::ios::trunc);
        if (!t || !s || !r) {
            throw IoError("cannot write reports under " + a.out);
        }
        t << table;
        write_csv(s, summary_rows(results, plan.methods));
        write_replications_csv(r, results, plan.methods);
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Image response regression with neural-network coefficient fields"};
    app.name("irrnn");
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file with one object per subcommand");
    app.set_version_flag("--version", IRRNN_VERSION);
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset with ground truth");
    simulate->add_option("--dims", sim.dims, "Grid size, e.g. 16,16,8")->delimiter(',')->capture_default_str();
    simulate->add_option("--n", sim.n, "Subjects")->capture_default_str();
    simulate->add_option("--j", sim.j, "Covariates")->capture_default_str();
    simulate->add_option("--noise", sim.noise, "gaussian or chisq3")->capture_default_str();
    simulate->add_option("--ratio", sim.ratio, "Variance ratio main,deviation,error")
        ->delimiter(',')
        ->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "Output dataset directory")->required();

    FitCommandArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the three networks to a dataset");
    fit_cmd->add_option("--data", fit_args.data, "Dataset directory")->required();
    fit_cmd->add_option("--out", fit_args.out, "Output fit directory")->required();
    fit_cmd->add_option("--seed", fit_args.seed, "Master seed")->capture_default_str();
    fit_args.fit.add_to(*fit_cmd);

    EvaluateArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a fit against ground truth or held-out data");
    eval_cmd->add_option("--fit", ev.fit, "Fit directory")->required();
    eval_cmd->add_option("--truth", ev.truth, "Dataset directory with ground-truth arrays");
    eval_cmd->add_option("--test", ev.test, "Held-out dataset for reconstruction error");
    eval_cmd->add_flag("--with-alpha", ev.with_alpha, "Include the fitted deviations (fitted subjects only)");
    eval_cmd->add_flag("--slices", ev.slices, "Write PGM slices of true and estimated main effects");
    eval_cmd->add_option("--out", ev.out, "Output directory for report.txt, metrics.csv, run.log");

    BenchmarkArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "Replicated simulation study over methods and cells");
    bench_cmd->add_option("--reps", bench.reps, "Replications per cell")->capture_default_str();
    bench_cmd->add_option("--n", bench.n, "Subjects (repeatable)")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--dims", bench.dims, "Grid size (repeatable), e.g. 16,16,8 or 16x16x8")
        ->capture_default_str();
    bench_cmd->add_option("--noise", bench.noise, "gaussian and/or chisq3 (repeatable)")
        ->delimiter(',')
        ->capture_default_str();
    bench_cmd->add_option("--methods", bench.methods, "Comma-separated subset of mua,smua,irrnn")
        ->delimiter(',')
        ->capture_default_str();
    bench_cmd->add_option("--j", bench.j, "Covariates")->capture_default_str();
    bench_cmd->add_option("--ratio", bench.ratio, "Variance ratio main,deviation,error")
        ->delimiter(',')
        ->capture_default_str();
    bench_cmd->add_option("--smooth-sigma", bench.smooth_sigma, "Pre-smoothing kernel sigma in voxels (smua)")
        ->capture_default_str();
    bench_cmd->add_option("--jobs", bench.jobs, "Replications run concurrently")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
    bench_cmd->add_flag("--hundredths", bench.hundredths, "Print the table in 0.01 units");
    bench_cmd->add_option("--out", bench.out, "Output directory for tables and CSV");
    bench.fit.add_to(*bench_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kUsage;
    }

    RunLog log;
    std::string command = "irrnn";
    for (const auto& a : args) {
        command += ' ' + a;
    }
    log.add("command", command);
    log.add("versions", versions());
    const auto start = Clock::now();
    auto finish = [&](int code, const std::string& status) {
        log.add("wall_seconds", format_number(seconds_since(start)));
        std::string cfg = app.config_to_str(true, false);
        if (!cfg.empty() && cfg.back() == '\n') {
            cfg.pop_back();
        }
        log.lines.insert(log.lines.begin() + 2, "config: " + cfg);
        log.write(status);
        return code;
    };
    try {
        if (simulate->parsed()) {
            cmd_simulate(sim, out, log);
        } else if (fit_cmd->parsed()) {
            cmd_fit(fit_args, out, log);
        } else if (eval_cmd->parsed()) {
            cmd_evaluate(ev, out, log);
        } else {
            cmd_benchmark(bench, out, err, log);
        }
        return finish(kOk, "ok");
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const FormatError& e) {
        err << "data error: " << e.what() << '\n';
        return finish(kDataError, std::string("data error: ") + e.what());
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kDataError;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return finish(kNumericalError, std::string("numerical failure: ") + e.what());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
}

}  // namespace irrnn::cli
