#include "irrnn/metrics.hpp"

#include "irrnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace irrnn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t field_index(std::string_view field) {
    const auto& f = MetricsReport::kFields;
    auto it = std::find(f.begin(), f.end(), field);
    if (it == f.end()) {
        throw InvalidArgument("unknown metric '" + std::string(field) + "'");
    }
    return static_cast<std::size_t>(it - f.begin());
}

template <typename Report>
auto field_ptr(Report& r, std::size_t i) {
    std::array p{&r.mse_beta, &r.mse_alpha, &r.mse_sigma2, &r.auc, &r.fpr, &r.tpr, &r.sign_error, &r.recon_mse};
    return p[i];
}

int sign(double x) {
    return (x > 0.0) - (x < 0.0);
}

}  // namespace

double MetricsReport::get(std::string_view field) const {
    return *field_ptr(*this, field_index(field));
}

void MetricsReport::set(std::string_view field, double value) {
    *field_ptr(*this, field_index(field)) = value;
}

double mse_field(const Matrix& estimate, const Matrix& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
        throw InvalidArgument("mse_field: shape mismatch");
    }
    if (truth.size() == 0) {
        throw InvalidArgument("mse_field: empty field");
    }
    return (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw InvalidArgument("roc_auc: scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of mid-ranks of the positives.
    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && scores[order[end]] == scores[order[start]]) {
            ++end;
        }
        const double mid_rank = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t k = start; k < end; ++k) {
            if (labels[order[k]] != 0) {
                positive_rank_sum += mid_rank;
                ++positives;
            }
        }
        start = end;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw UndefinedMetricError("AUC needs at least one positive and one negative label");
    }
    const double np = static_cast<double>(positives);
    const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(negatives));
}

SelectionRates selection_rates(const Mask& selected, const Mask& support) {
    if (selected.rows() != support.rows() || selected.cols() != support.cols()) {
        throw InvalidArgument("selection_rates: shape mismatch");
    }
    std::size_t tp = 0, fp = 0, pos = 0, neg = 0;
    for (Index k = 0; k < support.size(); ++k) {
        const bool s = support.data()[k] != 0;
        const bool hit = selected.data()[k] != 0;
        pos += s;
        neg += !s;
        tp += s && hit;
        fp += !s && hit;
    }
    if (pos == 0 || neg == 0) {
        throw UndefinedMetricError("selection rates need both support and non-support entries");
    }
    return {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)};
}

SelectionRates selection_rates(const Matrix& beta_hat, const Mask& support) {
    return selection_rates(Mask((beta_hat.array() != 0.0).cast<std::uint8_t>()), support);
}

double sign_error(const Matrix& beta_hat, const Matrix& beta) {
    if (beta_hat.rows() != beta.rows() || beta_hat.cols() != beta.cols() || beta.cols() == 0) {
        throw InvalidArgument("sign_error: shape mismatch");
    }
    std::size_t disagreements = 0;
    for (Index k = 0; k < beta.size(); ++k) {
        disagreements += sign(beta_hat.data()[k]) != sign(beta.data()[k]);
    }
    return static_cast<double>(disagreements) / static_cast<double>(beta.cols());
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw InvalidArgument("quantile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values) {
    std::vector<double> finite;
    for (double v : values) {
        if (std::isfinite(v)) {
            finite.push_back(v);
        }
    }
    if (finite.empty()) {
        return {kNaN, kNaN, 0};
    }
    Summary s;
    s.count = finite.size();
    s.median = quantile(finite, 0.5);
    s.iqr = quantile(finite, 0.75) - quantile(finite, 0.25);
    return s;
}

const Summary& AggregateReport::get(std::string_view field) const {
    return fields[field_index(field)];
}

AggregateReport aggregate(std::span<const MetricsReport> reports) {
    if (reports.empty()) {
        throw InvalidArgument("aggregate needs at least one report");
    }
    AggregateReport out;
    std::vector<double> column(reports.size());
    for (std::size_t f = 0; f < MetricsReport::kFields.size(); ++f) {
        for (std::size_t r = 0; r < reports.size(); ++r) {
            column[r] = reports[r].get(MetricsReport::kFields[f]);
        }
        out.fields[f] = summarize(column);
    }
    return out;
}

double recon_mse(const Matrix& beta, const Dataset& test) {
    if (beta.rows() != test.covariates() || beta.cols() != test.voxels()) {
        throw InvalidArgument("recon_mse: beta shape does not match the test set");
    }
    return (test.Y - test.X * beta).squaredNorm() / static_cast<double>(test.Y.size());
}

double recon_mse(const FitResult& fit, const Dataset& test, bool with_alpha) {
    if (fit.grid_dims != test.grid.dims()) {
        throw InvalidArgument("recon_mse: test grid does not match the fitted grid");
    }
    if (test.covariates() != fit.beta_hat.rows()) {
        throw InvalidArgument("recon_mse: covariate count mismatch");
    }
    Matrix resid = test.Y - test.X * fit.beta_hat;
    if (with_alpha) {
        if (fit.alpha_hat.rows() != test.subjects()) {
            throw InvalidArgument("recon_mse: --with-alpha needs the fitted subjects");
        }
        resid -= fit.alpha_hat;
    }
    return resid.squaredNorm() / static_cast<double>(resid.size());
}

Estimate estimate_from_fit(const FitResult& fit) {
    Estimate e;
    e.beta = fit.beta_hat;
    e.scores = fit.beta_tilde.cwiseAbs();
    e.selected = (fit.beta_hat.array() != 0.0).cast<std::uint8_t>().matrix();
    e.alpha = fit.alpha_hat;
    e.sigma2 = fit.sigma2_hat;
    return e;
}

MetricsReport evaluate(const Estimate& est, const GroundTruth& truth) {
    MetricsReport r;
    r.mse_beta = mse_field(est.beta, truth.beta);
    r.mse_alpha = est.alpha ? mse_field(*est.alpha, truth.alpha) : kNaN;
    r.mse_sigma2 = est.sigma2 ? mse_field(*est.sigma2, truth.sigma2) : kNaN;

    if (est.scores.rows() != truth.support.rows() || est.scores.cols() != truth.support.cols()) {
        throw InvalidArgument("evaluate: score shape mismatch");
    }
    r.auc = roc_auc(std::span<const double>(est.scores.data(), static_cast<std::size_t>(est.scores.size())),
                    std::span<const std::uint8_t>(truth.support.data(), static_cast<std::size_t>(truth.support.size())));
    const auto rates = selection_rates(est.selected, truth.support);
    r.fpr = rates.fpr;
    r.tpr = rates.tpr;
    const Matrix selected_beta = est.beta.cwiseProduct(est.selected.cast<double>());
    r.sign_error = sign_error(selected_beta, truth.beta);
    r.recon_mse = kNaN;
    return r;
}

}  // namespace irrnn
