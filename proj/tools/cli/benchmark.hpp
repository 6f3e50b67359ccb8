#pragma once

#include "irrnn/estimator.hpp"
#include "irrnn/metrics.hpp"
#include "irrnn/simgen.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace irrnn::cli {

enum class Method { mua, smua, irrnn };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// "16x16x8"
std::string dims_label(const std::vector<int>& dims);

struct Cell {
    int subjects = 20;
    std::vector<int> dims{16, 16, 8};
    NoiseKind noise = NoiseKind::gaussian;
};

struct BenchmarkPlan {
    std::vector<Cell> cells;
    std::vector<Method> methods{Method::mua, Method::smua, Method::irrnn};
    int reps = 10;
    std::uint64_t seed = 0;
    int covariates = 3;
    std::array<double, 3> variance_ratio{0.2, 0.5, 1.0};
    /// Per-replication seeds are overwritten; everything else is used as is.
    FitConfig fit;
    double smooth_sigma = 1.0;
    int jobs = 1;
    /// Draw a held-out set from the same truth for recon_mse.
    bool holdout = true;

    void validate() const;
};

struct MethodOutcome {
    MetricsReport metrics;
    double seconds = 0.0;
    std::string error;

    bool ok() const { return error.empty(); }
};

struct Replication {
    int index = 0;
    std::uint64_t sim_seed = 0;
    std::uint64_t fit_seed = 0;
    std::vector<MethodOutcome> outcomes;  // parallel to plan.methods
};

struct CellResult {
    Cell cell;
    std::vector<Replication> reps;           // ordered by index
    std::vector<AggregateReport> summaries;  // parallel to plan.methods, successful reps only
    std::vector<int> succeeded;              // per method

    bool complete() const;
};

/// Simulation seed of replication `rep`: derive_seed(master, rep). The fit
/// seed is derived once more from the simulation seed.
std::uint64_t replication_seed(std::uint64_t master, int rep);
std::uint64_t fit_seed(std::uint64_t sim_seed);

/// Failures of single methods are recorded in the outcome, never thrown.
Replication run_replication(const BenchmarkPlan& plan, const Cell& cell, int rep);

using Progress = std::function<void(const Cell&, const Replication&)>;

CellResult run_cell(const BenchmarkPlan& plan, const Cell& cell, const Progress& progress = {});
std::vector<CellResult> run_benchmark(const BenchmarkPlan& plan, const Progress& progress = {});

}  // namespace irrnn::cli
