// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// below; pass criterion numbers as arguments to run a subset.

#include "support/oracles.hpp"
#include "unit/helpers.hpp"

#include "cli/app.hpp"
#include "cli/benchmark.hpp"

#include "irrnn/baselines.hpp"
#include "irrnn/estimator.hpp"
#include "irrnn/linmod.hpp"
#include "irrnn/metrics.hpp"
#include "irrnn/simgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace irrnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Analytic network gradients against central differences.
Outcome gradients() {
    constexpr int kTriples = 100;
    constexpr double kRel = 1e-5, kAbs = 1e-8, kMinKink = 1e-3, kBudget = 10.0;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240101);
    std::uniform_int_distribution<int> batch(1, 6), kind(0, 2);
    std::normal_distribution<double> n;
    int failed = 0;
    double worst = 0.0, worst_abs = 0.0;
    for (int t = 0; t < kTriples; ++t) {
        NeuralNet net;
        Matrix inputs;
        // ReLU is not differentiable at a kink; redraw inputs that sit on one.
        do {
            net = oracle::random_net(rng);
            inputs.resize(net.config().input_dim, batch(rng));
            for (Index i = 0; i < inputs.size(); ++i) {
                inputs.data()[i] = n(rng);
            }
        } while (net.config().activation == Activation::relu && oracle::kink_distance(net, inputs) < kMinKink);
        oracle::Loss loss;
        loss.kind = static_cast<oracle::LossKind>(kind(rng));
        for (Index b = 0; b < inputs.cols(); ++b) {
            std::vector<oracle::Real> row;
            for (int k = 0; k < net.config().output_dim; ++k) {
                const double v = n(rng);
                row.push_back(loss.kind == oracle::LossKind::log_variance ? std::exp(v) : v);
            }
            loss.target.push_back(row);
        }
        const auto r = oracle::check_gradients(net, inputs, loss, 1e-6, kRel, kAbs);
        failed += r.failed > 0;
        worst = std::max(worst, r.worst_relative);
        worst_abs = std::max(worst_abs, r.worst_absolute);
    }
    const double secs = seconds_since(t0);
    return {failed == 0 && secs < kBudget,
            fmt("%d/%d triples disagree, worst abs diff %.2e, worst relative %.2e, %.2f s (budget %.0f s)", failed,
                kTriples, worst_abs, worst, secs, kBudget)};
}

// 2. OLS and Lasso against closed forms.
Outcome linear_model() {
    constexpr int kInstances = 100;
    constexpr double kOlsTol = 1e-10, kLassoTol = 1e-6, kBudget = 10.0;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(77);
    double ols_err = 0.0, lasso_err = 0.0;
    int kill_failures = 0;
    for (int k = 0; k < kInstances; ++k) {
        const Matrix X = test::random_matrix(50, 3, rng);
        const Vector y = test::random_matrix(50, 1, rng, 2.0).col(0) + X * Vector::Constant(3, 0.5);
        const Vector ols = ols_voxel(X, y).coef;
        const Vector ref = oracle::ols_normal_equations3(X, y);
        ols_err = std::max(ols_err, (ols - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff()));
        lasso_err = std::max(lasso_err, (lasso_voxel(X, y, 0.0) - ols).cwiseAbs().maxCoeff());
        const double lambda_max = (X.transpose() * y).cwiseAbs().maxCoeff() / 50.0;
        for (double f : {1.0, 1.5, 10.0}) {
            kill_failures += !(lasso_voxel(X, y, f * lambda_max).array() == 0.0).all();
        }
    }
    const double secs = seconds_since(t0);
    return {ols_err <= kOlsTol && lasso_err <= kLassoTol && kill_failures == 0 && secs < kBudget,
            fmt("OLS err %.2e (tol %.0e), Lasso(0) - OLS %.2e (tol %.0e), %d kill failures, %.2f s", ols_err, kOlsTol,
                lasso_err, kLassoTol, kill_failures, secs)};
}

// 3. AUC and median/IQR against brute force.
Outcome metric_oracles() {
    constexpr int kSets = 100;
    // Half of the sets carry ties, scored with the 1/2 convention.
    constexpr double kAucTol = 1e-12, kSummaryTol = 1e-12, kBudget = 5.0;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> size(2, 400);
    std::normal_distribution<double> n;
    double auc_err = 0.0, summary_err = 0.0;
    for (int k = 0; k < kSets; ++k) {
        const bool ties = k % 2 == 1;
        const int m = size(rng);
        std::vector<double> scores(static_cast<std::size_t>(m));
        std::vector<std::uint8_t> labels(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const double s = n(rng);
            scores[static_cast<std::size_t>(i)] = ties ? std::round(2.0 * s) / 2.0 : s;
            labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(n(rng) + 0.5 * s > 0.0);
        }
        labels[0] = 0;
        labels[1] = 1;
        const double err = std::abs(roc_auc(scores, labels) - oracle::auc(scores, labels));
        auc_err = std::max(auc_err, err);

        const auto s = summarize(scores);
        const auto [med, iqr] = oracle::median_iqr(scores);
        summary_err = std::max({summary_err, std::abs(s.median - med), std::abs(s.iqr - iqr)});
    }
    const double secs = seconds_since(t0);
    return {auc_err <= kAucTol && summary_err <= kSummaryTol && secs < kBudget,
            fmt("AUC err %.2e, median/IQR err %.2e, %.2f s (budget %.0f s)", auc_err, summary_err, secs, kBudget)};
}

// 4. Simulation variance calibration and noise standardization.
Outcome calibration() {
    constexpr int kSeeds = 20;
    constexpr double kRel = 0.10, kMomentTol = 0.01;
    constexpr long kDraws = 1000000;
    const std::array<double, 3> target{0.2, 0.5, 1.0};
    double worst = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
        SimConfig cfg;
        cfg.dims = {32, 32, 8};
        cfg.subjects = 50;
        cfg.seed = static_cast<std::uint64_t>(1000 + s);
        const auto sim = generate(cfg);
        const auto v = component_variances(sim.data, sim.truth);
        // The ratio is a proportion, so compare after scaling the error term to 1.
        for (int c = 0; c < 3; ++c) {
            worst = std::max(worst, std::abs(v[c] / v[2] - target[c]) / target[c]);
        }
    }
    Rng rng(99);
    double sum = 0.0, sum2 = 0.0;
    for (long i = 0; i < kDraws; ++i) {
        const double e = draw_noise(NoiseKind::chisq3, rng);
        sum += e;
        sum2 += e * e;
    }
    const double mean = sum / kDraws;
    const double var = sum2 / kDraws - mean * mean;
    return {worst <= kRel && std::abs(mean) < kMomentTol && std::abs(var - 1.0) < kMomentTol,
            fmt("worst ratio deviation %.2f%% (tol 10%%), chi-square mean %.4f var %.4f", 100.0 * worst, mean, var)};
}

// Shared desk-scale runs for criteria 5 to 9.
struct DeskRuns {
    cli::BenchmarkPlan plan;
    std::map<std::pair<std::string, NoiseKind>, cli::CellResult> cells;  // default architecture
    std::map<std::string, cli::CellResult> architectures;                // at 16x16x8, gaussian
    double worst_rep_seconds = 0.0;
    bool complete = true;

    const cli::CellResult& at(const std::string& dims, NoiseKind noise) const { return cells.at({dims, noise}); }
};

constexpr std::size_t kMua = 0, kIrrnn = 1;
const std::vector<int> kSmall{16, 16, 8}, kLarge{32, 32, 8};

double median(const cli::CellResult& c, std::size_t method, const char* field) {
    return c.summaries[method].get(field).median;
}
double iqr(const cli::CellResult& c, std::size_t method, const char* field) {
    return c.summaries[method].get(field).iqr;
}

void progress(const cli::Cell& cell, const cli::Replication& rep) {
    std::cerr << "  " << cli::dims_label(cell.dims) << " " << to_string(cell.noise) << " rep " << rep.index;
    for (const auto& o : rep.outcomes) {
        std::cerr << fmt(" %.1fs", o.seconds);
        if (!o.ok()) {
            std::cerr << " (" << o.error << ")";
        }
    }
    std::cerr << std::endl;
}

void track(DeskRuns& runs, const cli::CellResult& r) {
    runs.complete = runs.complete && r.complete();
    for (const auto& rep : r.reps) {
        runs.worst_rep_seconds = std::max(runs.worst_rep_seconds, rep.outcomes[kIrrnn].seconds);
    }
}

DeskRuns desk_runs() {
    DeskRuns runs;
    auto& plan = runs.plan;
    plan.methods = {cli::Method::mua, cli::Method::irrnn};
    plan.reps = 10;
    plan.seed = 2024;
    plan.fit = FitConfig::defaults(0);
    plan.holdout = false;
    for (NoiseKind noise : {NoiseKind::gaussian, NoiseKind::chisq3}) {
        for (const auto& dims : {kSmall, kLarge}) {
            cli::Cell cell{20, dims, noise};
            auto r = cli::run_cell(plan, cell, progress);
            track(runs, r);
            runs.cells[{cli::dims_label(dims), noise}] = std::move(r);
        }
    }
    runs.architectures["4x64"] = runs.at("16x16x8", NoiseKind::gaussian);
    for (auto [layers, width] : {std::pair{2, 64}, std::pair{6, 64}, std::pair{4, 16}}) {
        cli::BenchmarkPlan p = plan;
        p.fit.set_architecture(layers, width);
        auto r = cli::run_cell(p, {20, kSmall, NoiseKind::gaussian}, progress);
        track(runs, r);
        runs.architectures[fmt("%dx%d", layers, width)] = std::move(r);
    }
    return runs;
}

// 5. IRRNN beta-MSE at least 2x below MUA.
Outcome estimation(const DeskRuns& d) {
    constexpr double kFactor = 0.5, kBudget = 300.0;
    bool pass = d.worst_rep_seconds < kBudget;
    std::string detail;
    for (const char* dims : {"16x16x8", "32x32x8"}) {
        const auto& c = d.at(dims, NoiseKind::gaussian);
        const double nn = median(c, kIrrnn, "mse_beta"), base = median(c, kMua, "mse_beta");
        pass = pass && c.complete() && nn <= kFactor * base;
        detail += fmt("%s irrnn %.4f (%.4f) mua %.4f (%.4f) ratio %.2f; ", dims, nn, iqr(c, kIrrnn, "mse_beta"), base,
                      iqr(c, kMua, "mse_beta"), nn / base);
    }
    return {pass, detail + fmt("slowest fit %.0f s (budget %.0f s)", d.worst_rep_seconds, kBudget)};
}

// 6. IRRNN error does not grow with resolution.
Outcome resolution(const DeskRuns& d) {
    const auto& lo = d.at("16x16x8", NoiseKind::gaussian);
    const auto& hi = d.at("32x32x8", NoiseKind::gaussian);
    const double a = median(lo, kIrrnn, "mse_beta"), spread = iqr(lo, kIrrnn, "mse_beta");
    const double b = median(hi, kIrrnn, "mse_beta");
    return {lo.complete() && hi.complete() && b <= a + spread,
            fmt("32x32x8 median %.4f vs 16x16x8 median %.4f + IQR %.4f", b, a, spread)};
}

// 7. Selection: low false positive rate, AUC not below MUA.
Outcome selection(const DeskRuns& d) {
    constexpr double kMaxFpr = 0.10, kAucSlack = 0.02;
    bool pass = true;
    std::string detail;
    for (const char* dims : {"16x16x8", "32x32x8"}) {
        const auto& c = d.at(dims, NoiseKind::gaussian);
        const double fpr = median(c, kIrrnn, "fpr");
        const double auc = median(c, kIrrnn, "auc"), base = median(c, kMua, "auc");
        pass = pass && c.complete() && fpr <= kMaxFpr && auc >= base - kAucSlack;
        detail += fmt("%s fpr %.3f auc %.3f (mua %.3f); ", dims, fpr, auc, base);
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

// 8. Skewed noise changes the IRRNN error by at most 25%.
Outcome noise_robustness(const DeskRuns& d) {
    constexpr double kRel = 0.25;
    bool pass = true;
    std::string detail;
    for (const char* dims : {"16x16x8", "32x32x8"}) {
        const auto& g = d.at(dims, NoiseKind::gaussian);
        const auto& c = d.at(dims, NoiseKind::chisq3);
        const double a = median(g, kIrrnn, "mse_beta"), b = median(c, kIrrnn, "mse_beta");
        const double change = std::abs(b - a) / a;
        pass = pass && g.complete() && c.complete() && change <= kRel;
        detail += fmt("%s gaussian %.4f chisq3 %.4f change %.1f%%; ", dims, a, b, 100.0 * change);
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

// 9. Architecture sensitivity.
Outcome architecture(const DeskRuns& d) {
    constexpr double kMaxSpread = 1.3;
    double lo = INFINITY, hi = 0.0;
    bool pass = true;
    std::string detail;
    for (const char* name : {"2x64", "4x64", "6x64"}) {
        const auto& c = d.architectures.at(name);
        const double m = median(c, kIrrnn, "mse_beta");
        lo = std::min(lo, m);
        hi = std::max(hi, m);
        pass = pass && c.complete();
        detail += fmt("%s %.4f, ", name, m);
    }
    const auto& narrow = d.architectures.at("4x16");
    const double n16 = median(narrow, kIrrnn, "mse_beta"), base = median(narrow, kMua, "mse_beta");
    pass = pass && narrow.complete() && hi / lo <= kMaxSpread && n16 < base;
    return {pass, detail + fmt("max/min %.2f (tol %.1f); 4x16 %.4f vs mua %.4f", hi / lo, kMaxSpread, n16, base)};
}

// 10. Byte-identical artifacts and exact round-trips.
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        // run.log records wall-clock timings, which never repeat.
        if (e.is_regular_file() && e.path().filename() != "run.log") {
            out[fs::relative(e.path(), dir).string()] = slurp(e.path());
        }
    }
    return out;
}

int run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    return cli::run(args, out, err);
}

bool same_fit(const FitResult& a, const FitResult& b) {
    return a.beta_tilde == b.beta_tilde && a.beta_hat == b.beta_hat && a.alpha_hat == b.alpha_hat &&
           a.sigma2_tilde == b.sigma2_tilde && a.sigma2_bar == b.sigma2_bar && a.sigma2_hat == b.sigma2_hat &&
           a.net_beta == b.net_beta && a.net_alpha == b.net_alpha && a.net_sigma == b.net_sigma &&
           a.tuning.lambda == b.tuning.lambda && a.tuning.eta == b.tuning.eta && a.grid_dims == b.grid_dims;
}

Outcome determinism() {
    test::TempDir t("acceptance_det");
    const auto p = [&](const std::string& name) { return (t / name).string(); };
    const std::vector<std::string> quick{"--layers", "2", "--width", "16", "--epochs", "20"};
    auto cat = [](std::vector<std::string> a, const std::vector<std::string>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    std::vector<std::string> mismatched;
    int failed_runs = 0;
    auto twice = [&](const std::string& label, const std::function<std::vector<std::string>(const std::string&)>& args) {
        failed_runs += run_cli(args(p(label + "_a"))) != 0;
        failed_runs += run_cli(args(p(label + "_b"))) != 0;
        if (artifacts(t / (label + "_a")) != artifacts(t / (label + "_b"))) {
            mismatched.push_back(label);
        }
    };
    twice("simulate", [&](const std::string& out) {
        return std::vector<std::string>{"simulate", "--dims", "12,12,4", "--n", "20", "--noise", "chisq3", "--seed",
                                        "31", "--out", out};
    });
    twice("fit", [&](const std::string& out) {
        return cat({"fit", "--data", p("simulate_a"), "--seed", "5", "--out", out}, quick);
    });
    twice("evaluate", [&](const std::string& out) {
        return std::vector<std::string>{"evaluate", "--fit", p("fit_a"), "--truth", p("simulate_a"), "--slices",
                                        "--out", out};
    });
    twice("benchmark", [&](const std::string& out) {
        return cat({"benchmark", "--reps", "2", "--dims", "8,8,2", "--seed", "3", "--out", out}, quick);
    });

    // Round-trips: load(save(x)) == x, and saving the loaded copy gives the same bytes.
    const auto ds = load_dataset(t / "simulate_a");
    const auto truth = load_ground_truth(t / "simulate_a");
    save_dataset(ds, t / "dataset_copy", &*truth);
    const auto ds2 = load_dataset(t / "dataset_copy");
    // simulate also writes a parameter sidecar, which save_dataset does not.
    const auto copy = artifacts(t / "dataset_copy");
    const auto truth2 = load_ground_truth(t / "dataset_copy");
    const bool dataset_ok = ds2 == ds && truth2->beta == truth->beta && truth2->alpha == truth->alpha &&
                            truth2->sigma2 == truth->sigma2 && truth2->support == truth->support &&
                            truth2->noise == truth->noise &&
                            std::all_of(copy.begin(), copy.end(), [&](const auto& kv) {
                                return slurp(t / "simulate_a" / kv.first) == kv.second;
                            });
    const auto fit = load_fit(t / "fit_a");
    save_fit(fit, t / "fit_copy");
    const bool fit_ok = same_fit(load_fit(t / "fit_copy"), fit) && artifacts(t / "fit_copy") == artifacts(t / "fit_a");

    std::string detail = mismatched.empty() ? "simulate, fit, evaluate, benchmark byte-identical"
                                            : "differing artifacts:";
    for (const auto& m : mismatched) {
        detail += " " + m;
    }
    detail += fmt("; %d failed commands; dataset round-trip %s; fit round-trip %s", failed_runs,
                  dataset_ok ? "exact" : "BROKEN", fit_ok ? "exact" : "BROKEN");
    return {mismatched.empty() && failed_runs == 0 && dataset_ok && fit_ok, detail};
}

// 11. Thresholding and tuning contracts on random fits.
Outcome contracts() {
    constexpr int kFits = 20;
    int idempotence = 0, monotone = 0, positivity = 0, count = 0;
    for (int k = 0; k < kFits; ++k) {
        SimConfig sim;
        sim.dims = {12, 12, 4};
        sim.subjects = 20;
        sim.noise = k % 2 ? NoiseKind::chisq3 : NoiseKind::gaussian;
        sim.seed = static_cast<std::uint64_t>(500 + k);
        const auto s = generate(sim);
        auto cfg = FitConfig::defaults(static_cast<std::uint64_t>(k));
        cfg.set_architecture(1 + k % 4, 16 + 8 * (k % 3));
        cfg.train.epochs = 40;
        const auto f = fit(s.data, cfg);

        idempotence += hard_threshold(f.beta_hat, f.tuning.eta) != f.beta_hat;

        // Raising every threshold can only shrink the support.
        Mask previous = (f.beta_tilde.array() != 0.0).cast<std::uint8_t>().matrix();
        for (double scale : {0.5, 1.0, 1.5, 2.0, 4.0}) {
            std::vector<double> eta = f.tuning.eta;
            for (double& e : eta) {
                e *= scale;
            }
            const Mask current = (hard_threshold(f.beta_tilde, eta).array() != 0.0).cast<std::uint8_t>().matrix();
            monotone += ((current.array() > previous.array()).any());
            previous = current;
        }

        positivity += !(f.sigma2_hat.array() > 0.0).all() || !f.sigma2_hat.allFinite();

        const auto m = mua(s.data);
        const double crit = normal_critical_value(0.05);
        for (Index j = 0; j < f.beta_tilde.rows(); ++j) {
            const Index target = (m.z.row(j).array().abs() > crit).count();
            const auto mag = f.beta_tilde.row(j).array().abs();
            const double eta = f.tuning.eta[static_cast<std::size_t>(j)];
            const Index survivors = (mag > eta).count();
            const Index tied = (mag == eta).count();
            // Exact agreement except for magnitudes tied at the threshold.
            count += survivors > target || survivors + tied < target;
        }
    }
    return {idempotence + monotone + positivity + count == 0,
            fmt("%d fits: %d idempotence, %d monotonicity, %d positivity, %d count violations", kFits, idempotence,
                monotone, positivity, count)};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        only.insert(std::atoi(argv[i]));
    }
    auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };

    std::map<int, std::function<Outcome()>> checks{
        {1, gradients}, {2, linear_model}, {3, metric_oracles}, {4, calibration}, {10, determinism}, {11, contracts}};
    std::optional<DeskRuns> desk;
    auto with_desk = [&](Outcome (*f)(const DeskRuns&)) {
        return [&, f] {
            if (!desk) {
                std::cerr << "running desk-scale benchmark cells" << std::endl;
                desk = desk_runs();
            }
            return f(*desk);
        };
    };
    checks[5] = with_desk(estimation);
    checks[6] = with_desk(resolution);
    checks[7] = with_desk(selection);
    checks[8] = with_desk(noise_robustness);
    checks[9] = with_desk(architecture);

    int failures = 0;
    for (const auto& [c, check] : checks) {
        if (!wanted(c)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = check();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failures += !r.pass;
        std::cout << fmt("criterion %2d: %s  %s  [%.1f s]", c, r.pass ? "PASS" : "FAIL", r.detail.c_str(),
                         seconds_since(t0))
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
