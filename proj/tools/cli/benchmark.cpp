#include "cli/benchmark.hpp"

#include "irrnn/baselines.hpp"
#include "irrnn/error.hpp"
#include "irrnn/rng.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace irrnn::cli {

namespace {

constexpr std::uint64_t kHoldoutStream = 2;

MetricsReport nan_report() {
    MetricsReport r;
    for (auto f : MetricsReport::kFields) {
        r.set(f, std::numeric_limits<double>::quiet_NaN());
    }
    return r;
}

AggregateReport nan_aggregate() {
    AggregateReport a;
    for (auto& s : a.fields) {
        s.median = std::numeric_limits<double>::quiet_NaN();
        s.iqr = std::numeric_limits<double>::quiet_NaN();
        s.count = 0;
    }
    return a;
}

MethodOutcome run_method(Method m, const BenchmarkPlan& plan, const Simulation& sim, const Dataset* holdout,
                         std::uint64_t seed) {
    MethodOutcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
        Estimate est;
        switch (m) {
            case Method::mua:
                est = mua_estimate(sim.data, plan.fit.alpha_level);
                break;
            case Method::smua:
                est = smoothed_mua_estimate(sim.data, plan.smooth_sigma, plan.fit.alpha_level);
                break;
            case Method::irrnn: {
                FitConfig cfg = plan.fit;
                cfg.set_seed(seed);
                est = estimate_from_fit(fit(sim.data, cfg));
                break;
            }
        }
        out.metrics = evaluate(est, sim.truth);
        if (holdout != nullptr) {
            out.metrics.recon_mse = recon_mse(est.beta, *holdout);
        }
    } catch (const std::exception& e) {
        out.metrics = nan_report();
        out.error = e.what();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::mua:
            return "mua";
        case Method::smua:
            return "smua";
        case Method::irrnn:
            return "irrnn";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "mua") {
        return Method::mua;
    }
    if (name == "smua") {
        return Method::smua;
    }
    if (name == "irrnn") {
        return Method::irrnn;
    }
    throw InvalidArgument("unknown method '" + std::string(name) + "' (expected mua, smua or irrnn)");
}

std::string dims_label(const std::vector<int>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) {
            s += 'x';
        }
        s += std::to_string(dims[i]);
    }
    return s;
}

void BenchmarkPlan::validate() const {
    if (reps < 1) {
        throw InvalidArgument("benchmark needs --reps >= 1");
    }
    if (jobs < 1) {
        throw InvalidArgument("--jobs must be >= 1");
    }
    if (methods.empty()) {
        throw InvalidArgument("no methods selected");
    }
    if (cells.empty()) {
        throw InvalidArgument("no benchmark cells");
    }
    if (!(smooth_sigma >= 0.0) || !std::isfinite(smooth_sigma)) {
        throw InvalidArgument("--smooth-sigma must be finite and non-negative");
    }
    for (const auto& c : cells) {
        SimConfig sc;
        sc.dims = c.dims;
        sc.subjects = c.subjects;
        sc.covariates = covariates;
        sc.noise = c.noise;
        sc.variance_ratio = variance_ratio;
        sc.validate();
    }
    fit.validate(covariates);
    (void)normal_critical_value(fit.alpha_level);
}

bool CellResult::complete() const {
    for (int s : succeeded) {
        if (s != static_cast<int>(reps.size())) {
            return false;
        }
    }
    return true;
}

std::uint64_t replication_seed(std::uint64_t master, int rep) {
    return derive_seed(master, static_cast<std::uint64_t>(rep));
}

std::uint64_t fit_seed(std::uint64_t sim_seed) {
    return derive_seed(sim_seed, 1);
}

Replication run_replication(const BenchmarkPlan& plan, const Cell& cell, int rep) {
    Replication r;
    r.index = rep;
    r.sim_seed = replication_seed(plan.seed, rep);
    r.fit_seed = fit_seed(r.sim_seed);

    SimConfig sc;
    sc.dims = cell.dims;
    sc.subjects = cell.subjects;
    sc.covariates = plan.covariates;
    sc.noise = cell.noise;
    sc.variance_ratio = plan.variance_ratio;
    sc.seed = r.sim_seed;

    Simulation sim;
    Simulation test;
    try {
        sim = generate(sc);
        if (plan.holdout) {
            test = generate_subjects(sc, sim.truth, cell.subjects, derive_seed(r.sim_seed, kHoldoutStream));
        }
    } catch (const std::exception& e) {
        for (std::size_t k = 0; k < plan.methods.size(); ++k) {
            r.outcomes.push_back({nan_report(), 0.0, std::string("simulation: ") + e.what()});
        }
        return r;
    }
    for (Method m : plan.methods) {
        r.outcomes.push_back(run_method(m, plan, sim, plan.holdout ? &test.data : nullptr, r.fit_seed));
    }
    return r;
}

CellResult run_cell(const BenchmarkPlan& plan, const Cell& cell, const Progress& progress) {
    CellResult result;
    result.cell = cell;
    result.reps.resize(static_cast<std::size_t>(plan.reps));

    std::atomic<int> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (int rep = next++; rep < plan.reps; rep = next++) {
            Replication r = run_replication(plan, cell, rep);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(cell, r);
            }
            result.reps[static_cast<std::size_t>(rep)] = std::move(r);
        }
    };
    const int jobs = std::min(plan.jobs, plan.reps);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < jobs; ++t) {
            pool.emplace_back(worker);
        }
    }

    for (std::size_t k = 0; k < plan.methods.size(); ++k) {
        std::vector<MetricsReport> ok;
        for (const auto& r : result.reps) {
            if (r.outcomes[k].ok()) {
                ok.push_back(r.outcomes[k].metrics);
            }
        }
        result.succeeded.push_back(static_cast<int>(ok.size()));
        result.summaries.push_back(ok.empty() ? nan_aggregate() : aggregate(ok));
    }
    return result;
}

std::vector<CellResult> run_benchmark(const BenchmarkPlan& plan, const Progress& progress) {
    plan.validate();
    std::vector<CellResult> out;
    for (const auto& cell : plan.cells) {
        out.push_back(run_cell(plan, cell, progress));
    }
    return out;
}

}  // namespace irrnn::cli
