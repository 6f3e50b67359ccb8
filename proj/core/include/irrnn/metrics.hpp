#pragma once

#include "irrnn/estimator.hpp"
#include "irrnn/grid.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace irrnn {

/// Accuracy of one fitted replication. Metrics a method cannot produce
/// (e.g. alpha for MUA, recon_mse without a held-out set) are NaN.
struct MetricsReport {
    double mse_beta = 0.0;
    double mse_alpha = 0.0;
    double mse_sigma2 = 0.0;
    double auc = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
    double sign_error = 0.0;
    double recon_mse = 0.0;

    static constexpr std::array<std::string_view, 8> kFields{"mse_beta", "mse_alpha", "mse_sigma2", "auc",
                                                            "fpr",      "tpr",       "sign_error", "recon_mse"};
    double get(std::string_view field) const;
    void set(std::string_view field, double value);
};

/// Mean squared difference over all entries. Throws InvalidArgument on shape mismatch.
double mse_field(const Matrix& estimate, const Matrix& truth);

/// Mann-Whitney AUC with ties counted as 1/2. Throws UndefinedMetricError
/// unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct SelectionRates {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Rates of beta_hat != 0 pooled over all (j, v).
SelectionRates selection_rates(const Matrix& beta_hat, const Mask& support);
SelectionRates selection_rates(const Mask& selected, const Mask& support);

/// V^-1 sum_v #{j : sign(beta_hat_j(v)) != sign(beta_j(v))}.
double sign_error(const Matrix& beta_hat, const Matrix& beta);

/// Type-7 (linear interpolation) quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct Summary {
    double median = 0.0;
    double iqr = 0.0;
    std::size_t count = 0;  // finite values summarized
};

/// Median and Q3 - Q1 of the finite values; NaN summary when none are finite.
Summary summarize(std::span<const double> values);

struct AggregateReport {
    std::array<Summary, MetricsReport::kFields.size()> fields;

    const Summary& get(std::string_view field) const;
};

/// Throws InvalidArgument for an empty list.
AggregateReport aggregate(std::span<const MetricsReport> reports);

/// Held-out reconstruction error (N_test V)^-1 sum (y - x' beta_hat)^2.
/// `with_alpha` also subtracts alpha_hat, valid only for the fitted subjects.
double recon_mse(const FitResult& fit, const Dataset& test, bool with_alpha = false);

/// Same error for any main-effect estimate, e.g. an MUA fit.
double recon_mse(const Matrix& beta, const Dataset& test);

/// What a method hands to the evaluator.
struct Estimate {
    Matrix beta;     // J x V, used for the estimation error
    Matrix scores;   // J x V, ranking statistic for the AUC
    Mask selected;   // J x V, declared non-zero
    std::optional<Matrix> alpha;
    std::optional<Vector> sigma2;
};

/// beta_hat, |beta_tilde| and beta_hat != 0 of a network fit.
Estimate estimate_from_fit(const FitResult& fit);

/// Truth metrics of an estimate; recon_mse is left NaN. The sign error is
/// computed on beta restricted to the selected entries.
MetricsReport evaluate(const Estimate& estimate, const GroundTruth& truth);

}  // namespace irrnn
