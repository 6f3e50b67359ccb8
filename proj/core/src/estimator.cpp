#include "irrnn/estimator.hpp"

#include "array_io.hpp"
#include "irrnn/error.hpp"
#include "irrnn/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace irrnn {

namespace fs = std::filesystem;

namespace {

// Stream indices for the per-step shuffling seeds and network seeds.
enum : std::uint64_t { kStreamBeta = 1, kStreamAlpha = 2, kStreamSigma = 3 };

NetConfig resolved(NetConfig c, int input_dim, Index output_dim) {
    c.input_dim = input_dim;
    c.output_dim = static_cast<int>(output_dim);
    return c;
}

TrainSpec step_spec(const TrainSpec& base, std::uint64_t stream) {
    TrainSpec s = base;
    s.seed = derive_seed(base.seed, stream);
    return s;
}

Matrix coordinate_inputs(const Dataset& ds) {
    return ds.grid.coords().transpose();
}

Vector inverse_variance(const Vector& sigma2) {
    return sigma2.cwiseMax(kVarianceFloor).cwiseInverse();
}

double sign_of(double x) {
    return static_cast<double>((x > 0.0) - (x < 0.0));
}

template <typename F>
auto labeled(const char* label, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const TrainingDivergedError& e) {
        throw TrainingDivergedError(e.step(), e.reason(), label);
    } catch (const RankDeficiencyError& e) {
        throw RankDeficiencyError(std::string(label) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(label) + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(label) + ": " + e.what());
    }
}

}  // namespace

FitConfig FitConfig::defaults(std::uint64_t seed) {
    FitConfig cfg;
    cfg.set_seed(seed);
    return cfg;
}

void FitConfig::set_architecture(int layers, int width) {
    for (NetConfig* c : {&net_beta, &net_alpha, &net_sigma}) {
        c->hidden_layers = layers;
        c->hidden_width = width;
    }
}

void FitConfig::set_seed(std::uint64_t seed) {
    net_beta.seed = derive_seed(seed, 10 + kStreamBeta);
    net_alpha.seed = derive_seed(seed, 10 + kStreamAlpha);
    net_sigma.seed = derive_seed(seed, 10 + kStreamSigma);
    train.seed = derive_seed(seed, 20);
}

void FitConfig::validate(Index covariates) const {
    for (const NetConfig* c : {&net_beta, &net_alpha, &net_sigma}) {
        if (c->hidden_layers < 1 || c->hidden_width < 1) {
            throw InvalidArgument("network depth and width must be >= 1");
        }
    }
    train.validate();
    if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
        throw InvalidArgument("lambda must be finite and non-negative");
    }
    if (eta) {
        if (static_cast<Index>(eta->size()) != covariates) {
            throw InvalidArgument("eta needs one threshold per covariate (" + std::to_string(covariates) + ")");
        }
        for (double e : *eta) {
            if (!(e >= 0.0) || !std::isfinite(e)) {
                throw InvalidArgument("eta values must be finite and non-negative");
            }
        }
    }
    if (!(alpha_level > 0.0 && alpha_level < 1.0)) {
        throw InvalidArgument("alpha_level must lie in (0, 1)");
    }
}

double main_effect_objective(const Dataset& ds, const Vector& sigma2_tilde, double lambda, const Matrix& beta) {
    const Vector w = inverse_variance(sigma2_tilde);
    const Matrix resid = ds.Y - ds.X * beta;
    const Vector data = resid.colwise().squaredNorm().transpose();
    const Vector l1 = beta.cwiseAbs().colwise().sum().transpose();
    return data.cwiseProduct(w).sum() + lambda * l1.sum();
}

MainEffectFit fit_main_effect(const Dataset& ds, const Vector& sigma2_tilde, const FitConfig& cfg) {
    ds.validate();
    if (!cfg.lambda) {
        throw InvalidArgument("fit_main_effect needs lambda");
    }
    if (sigma2_tilde.size() != ds.voxels()) {
        throw InvalidArgument("sigma2_tilde must have one entry per voxel");
    }
    const double lambda = *cfg.lambda;
    const Vector w = inverse_variance(sigma2_tilde);
    const Matrix& X = ds.X;
    const Matrix Xt = X.transpose();
    // The per-voxel objective is divided by N during training. This keeps the
    // output-layer curvature O(1) across sample sizes; the minimizer is unchanged.
    const double scale = 1.0 / static_cast<double>(ds.subjects());

    Matrix y_batch;
    BatchLoss loss = [&](std::span<const Index> voxels, const Matrix& out, Matrix& grad) {
        const auto B = static_cast<Index>(voxels.size());
        y_batch.resize(ds.subjects(), B);
        for (Index k = 0; k < B; ++k) {
            y_batch.col(k) = ds.Y.col(voxels[static_cast<std::size_t>(k)]);
        }
        const Matrix resid = y_batch - X * out;
        grad.noalias() = Xt * resid;
        double value = 0.0;
        for (Index k = 0; k < B; ++k) {
            const double wv = w(voxels[static_cast<std::size_t>(k)]);
            value += wv * resid.col(k).squaredNorm() + lambda * out.col(k).lpNorm<1>();
            for (Index j = 0; j < out.rows(); ++j) {
                grad(j, k) = scale * (-2.0 * wv * grad(j, k) + lambda * sign_of(out(j, k)));
            }
        }
        return scale * value;
    };

    const Matrix inputs = coordinate_inputs(ds);
    NeuralNet net(resolved(cfg.net_beta, ds.grid.dim(), ds.covariates()));
    net = train(std::move(net), step_spec(cfg.train, kStreamBeta), inputs, loss);
    Matrix beta_tilde = net.forward_batch(inputs);
    return {std::move(net), std::move(beta_tilde)};
}

Matrix hard_threshold(const Matrix& beta_tilde, std::span<const double> eta) {
    if (static_cast<Index>(eta.size()) != beta_tilde.rows()) {
        throw InvalidArgument("eta needs one threshold per row of beta");
    }
    Matrix out = beta_tilde;
    for (Index j = 0; j < out.rows(); ++j) {
        const double t = eta[static_cast<std::size_t>(j)];
        if (!(t >= 0.0)) {
            throw InvalidArgument("thresholds must be non-negative");
        }
        for (Index v = 0; v < out.cols(); ++v) {
            if (!(std::abs(out(j, v)) > t)) {
                out(j, v) = 0.0;
            }
        }
    }
    return out;
}

double normal_critical_value(double alpha_level) {
    if (!(alpha_level > 0.0 && alpha_level < 1.0)) {
        throw InvalidArgument("alpha_level must lie in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha_level / 2.0);
}

std::vector<double> select_eta(const Matrix& beta_tilde, const MuaResult& mua, double alpha_level) {
    if (mua.z.rows() != beta_tilde.rows() || mua.z.cols() != beta_tilde.cols()) {
        throw InvalidArgument("MUA result and beta_tilde disagree in shape");
    }
    const double crit = normal_critical_value(alpha_level);
    const Index V = beta_tilde.cols();
    std::vector<double> eta(static_cast<std::size_t>(beta_tilde.rows()));
    std::vector<double> magnitudes(static_cast<std::size_t>(V));
    for (Index j = 0; j < beta_tilde.rows(); ++j) {
        const Index m = (mua.z.row(j).array().abs() > crit).count();
        for (Index v = 0; v < V; ++v) {
            magnitudes[static_cast<std::size_t>(v)] = std::abs(beta_tilde(j, v));
        }
        double t;
        if (m == 0) {
            t = *std::max_element(magnitudes.begin(), magnitudes.end());
        } else if (m == V) {
            t = 0.0;
        } else {
            // (V - m)-th smallest: the m larger values are the survivors.
            auto kth = magnitudes.begin() + (V - m - 1);
            std::nth_element(magnitudes.begin(), kth, magnitudes.end());
            t = *kth;
        }
        eta[static_cast<std::size_t>(j)] = t;
    }
    return eta;
}

DeviationFit fit_individual_deviation(const Dataset& ds, const Matrix& beta_hat, const Vector& sigma2_tilde,
                                      const FitConfig& cfg) {
    ds.validate();
    if (beta_hat.rows() != ds.covariates() || beta_hat.cols() != ds.voxels()) {
        throw InvalidArgument("beta_hat must be J x V");
    }
    if (sigma2_tilde.size() != ds.voxels()) {
        throw InvalidArgument("sigma2_tilde must have one entry per voxel");
    }
    const Vector w = inverse_variance(sigma2_tilde);
    const Matrix target = ds.Y - ds.X * beta_hat;

    // Same 1/N training normalization as the main-effect loss.
    const double scale = 1.0 / static_cast<double>(ds.subjects());
    BatchLoss loss = [&](std::span<const Index> voxels, const Matrix& out, Matrix& grad) {
        double value = 0.0;
        for (Index k = 0; k < static_cast<Index>(voxels.size()); ++k) {
            const Index v = voxels[static_cast<std::size_t>(k)];
            const double wv = w(v);
            grad.col(k) = out.col(k) - target.col(v);
            value += wv * grad.col(k).squaredNorm();
            grad.col(k) *= 2.0 * wv * scale;
        }
        return scale * value;
    };

    const Matrix inputs = coordinate_inputs(ds);
    NeuralNet net(resolved(cfg.net_alpha, ds.grid.dim(), ds.subjects()));
    net = train(std::move(net), step_spec(cfg.train, kStreamAlpha), inputs, loss);
    Matrix alpha_hat = net.forward_batch(inputs);
    return {std::move(net), std::move(alpha_hat)};
}

Vector residual_variance(const Dataset& ds, const Matrix& beta_hat, const Matrix& alpha_hat) {
    const Matrix resid = ds.Y - ds.X * beta_hat - alpha_hat;
    return resid.colwise().squaredNorm().transpose() / static_cast<double>(ds.subjects());
}

VarianceFit fit_noise_variance(const Dataset& ds, const Matrix& beta_hat, const Matrix& alpha_hat,
                               const FitConfig& cfg) {
    ds.validate();
    if (beta_hat.rows() != ds.covariates() || beta_hat.cols() != ds.voxels() ||
        alpha_hat.rows() != ds.subjects() || alpha_hat.cols() != ds.voxels()) {
        throw InvalidArgument("beta_hat must be J x V and alpha_hat N x V");
    }
    Vector sigma2_bar = residual_variance(ds, beta_hat, alpha_hat);

    BatchLoss loss = [&](std::span<const Index> voxels, const Matrix& out, Matrix& grad) {
        double value = 0.0;
        for (Index k = 0; k < static_cast<Index>(voxels.size()); ++k) {
            const double fitted = std::exp(out(0, k));
            const double diff = sigma2_bar(voxels[static_cast<std::size_t>(k)]) - fitted;
            value += diff * diff;
            grad(0, k) = -2.0 * diff * fitted;
        }
        return value;
    };

    const Matrix inputs = coordinate_inputs(ds);
    NeuralNet net(resolved(cfg.net_sigma, ds.grid.dim(), 1));
    // Start from the log of the average residual variance; the loss gradient
    // vanishes as exp(f) -> 0, so descending from exp(0) = 1 is slow.
    net.biases().back()(0) = std::log(std::max(sigma2_bar.mean(), kVarianceFloor));
    net = train(std::move(net), step_spec(cfg.train, kStreamSigma), inputs, loss);
    Vector sigma2_hat = net.forward_batch(inputs).row(0).transpose().array().exp();
    return {std::move(net), std::move(sigma2_bar), std::move(sigma2_hat)};
}

FitResult fit(const Dataset& ds, const FitConfig& cfg) {
    ds.validate();
    cfg.validate(ds.covariates());

    FitResult r;
    r.grid_dims = ds.grid.dims();
    FitConfig run = cfg;

    labeled("step 1 (main effect)", [&] {
        r.sigma2_tilde = initial_variance(ds);
        r.tuning.lambda_selected = !run.lambda.has_value();
        if (!run.lambda) {
            run.lambda = select_lambda(ds, run.lambda_selection);
        }
        r.tuning.lambda = *run.lambda;

        auto main = fit_main_effect(ds, r.sigma2_tilde, run);
        r.net_beta = std::move(main.net);
        r.beta_tilde = std::move(main.beta_tilde);

        r.tuning.eta_selected = !run.eta.has_value();
        r.tuning.eta = run.eta ? *run.eta : select_eta(r.beta_tilde, mua(ds), run.alpha_level);
        r.beta_hat = hard_threshold(r.beta_tilde, r.tuning.eta);
    });

    labeled("step 2 (individual deviation)", [&] {
        auto dev = fit_individual_deviation(ds, r.beta_hat, r.sigma2_tilde, run);
        r.net_alpha = std::move(dev.net);
        r.alpha_hat = std::move(dev.alpha_hat);
    });

    labeled("step 3 (noise variance)", [&] {
        auto var = fit_noise_variance(ds, r.beta_hat, r.alpha_hat, run);
        r.net_sigma = std::move(var.net);
        r.sigma2_bar = std::move(var.sigma2_bar);
        r.sigma2_hat = std::move(var.sigma2_hat);
    });
    return r;
}

void save_fit(const FitResult& fit, const fs::path& dir) {
    nlohmann::json m = detail::encoding_fields();
    m["format"] = "irrnn-fit";
    m["version"] = 1;
    m["dims"] = fit.grid_dims;
    m["N"] = fit.alpha_hat.rows();
    m["J"] = fit.beta_hat.rows();
    m["V"] = fit.beta_hat.cols();
    m["lambda"] = fit.tuning.lambda;
    m["eta"] = fit.tuning.eta;
    m["lambda_selected"] = fit.tuning.lambda_selected;
    m["eta_selected"] = fit.tuning.eta_selected;
    m["arrays"] = {{"beta_tilde", "beta_tilde.f64"},     {"beta_hat", "beta_hat.f64"},
                   {"alpha_hat", "alpha_hat.f64"},       {"sigma2_tilde", "sigma2_tilde.f64"},
                   {"sigma2_bar", "sigma2_bar.f64"},     {"sigma2_hat", "sigma2_hat.f64"}};
    m["nets"] = {{"beta", "net_beta"}, {"alpha", "net_alpha"}, {"sigma", "net_sigma"}};
    detail::write_manifest(dir, m);
    detail::write_matrix(dir / "beta_tilde.f64", fit.beta_tilde);
    detail::write_matrix(dir / "beta_hat.f64", fit.beta_hat);
    detail::write_matrix(dir / "alpha_hat.f64", fit.alpha_hat);
    auto write_vec = [&](const char* name, const Vector& v) {
        detail::write_f64(dir / name, v.data(), static_cast<std::size_t>(v.size()));
    };
    write_vec("sigma2_tilde.f64", fit.sigma2_tilde);
    write_vec("sigma2_bar.f64", fit.sigma2_bar);
    write_vec("sigma2_hat.f64", fit.sigma2_hat);
    save_net(fit.net_beta, dir / "net_beta");
    save_net(fit.net_alpha, dir / "net_alpha");
    save_net(fit.net_sigma, dir / "net_sigma");
}

FitResult load_fit(const fs::path& dir) {
    auto m = detail::read_manifest(dir);
    if (detail::require_string(m, "format") != "irrnn-fit") {
        throw FormatError("format", "not an irrnn fit");
    }
    detail::require_encoding(m);
    const Index N = detail::require_int(m, "N", 1);
    const Index J = detail::require_int(m, "J", 1);
    const Index V = detail::require_int(m, "V", 1);

    FitResult r;
    r.grid_dims = detail::require_int_list(m, "dims");
    Index product = 1;
    for (int d : r.grid_dims) {
        product *= d;
    }
    if (product != V) {
        throw FormatError("V", "does not match product of dims");
    }
    if (!m.contains("lambda") || !m["lambda"].is_number()) {
        throw FormatError("lambda", "missing or not a number");
    }
    r.tuning.lambda = m["lambda"].get<double>();
    if (!m.contains("eta") || !m["eta"].is_array() || static_cast<Index>(m["eta"].size()) != J) {
        throw FormatError("eta", "missing or wrong length");
    }
    for (const auto& e : m["eta"]) {
        if (!e.is_number()) {
            throw FormatError("eta", "non-numeric threshold");
        }
        r.tuning.eta.push_back(e.get<double>());
    }
    r.tuning.lambda_selected = m.value("lambda_selected", false);
    r.tuning.eta_selected = m.value("eta_selected", false);

    r.beta_tilde = detail::read_matrix(dir / "beta_tilde.f64", J, V, "beta_tilde");
    r.beta_hat = detail::read_matrix(dir / "beta_hat.f64", J, V, "beta_hat");
    r.alpha_hat = detail::read_matrix(dir / "alpha_hat.f64", N, V, "alpha_hat");
    auto read_vec = [&](const char* file, const char* field) {
        auto flat = detail::read_f64(dir / file, static_cast<std::size_t>(V), field);
        return Vector(Eigen::Map<Vector>(flat.data(), V));
    };
    r.sigma2_tilde = read_vec("sigma2_tilde.f64", "sigma2_tilde");
    r.sigma2_bar = read_vec("sigma2_bar.f64", "sigma2_bar");
    r.sigma2_hat = read_vec("sigma2_hat.f64", "sigma2_hat");
    if (!(r.sigma2_hat.array() > 0.0).all()) {
        throw FormatError("sigma2_hat", "must be strictly positive");
    }
    r.net_beta = load_net(dir / "net_beta");
    r.net_alpha = load_net(dir / "net_alpha");
    r.net_sigma = load_net(dir / "net_sigma");
    return r;
}

}  // namespace irrnn
