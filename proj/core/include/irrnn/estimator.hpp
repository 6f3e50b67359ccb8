#pragma once

#include "irrnn/grid.hpp"
#include "irrnn/linmod.hpp"
#include "irrnn/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace irrnn {

/// Settings for the three-step fit. Network input/output dimensions are
/// filled in from the data; only depth, width, activation and seed are read.
struct FitConfig {
    NetConfig net_beta;
    NetConfig net_alpha;
    NetConfig net_sigma;
    TrainSpec train;
    /// L1 weight of the main-effect loss. Selected by voxel-wise Lasso CV when unset.
    std::optional<double> lambda;
    /// Per-covariate thresholds. Matched to the MUA significance counts when unset.
    std::optional<std::vector<double>> eta;
    double alpha_level = 0.05;
    LambdaSelection lambda_selection;

    /// Default architecture (4 x 64 relu) with all seeds derived from `seed`.
    static FitConfig defaults(std::uint64_t seed = 0);
    /// Same depth/width for all three networks.
    void set_architecture(int layers, int width);
    void set_seed(std::uint64_t seed);
    void validate(Index covariates) const;
};

struct Tuning {
    double lambda = 0.0;
    std::vector<double> eta;
    bool lambda_selected = false;  // true when chosen by CV rather than given
    bool eta_selected = false;
};

struct FitResult {
    Matrix beta_tilde;    // J x V, network output before thresholding
    Matrix beta_hat;      // J x V
    Matrix alpha_hat;     // N x V
    Vector sigma2_tilde;  // V, initial residual variance
    Vector sigma2_bar;    // V, residual variance after steps 1-2
    Vector sigma2_hat;    // V, exp of the variance network
    NeuralNet net_beta;
    NeuralNet net_alpha;
    NeuralNet net_sigma;
    Tuning tuning;
    std::vector<int> grid_dims;
};

struct MainEffectFit {
    NeuralNet net;
    Matrix beta_tilde;
};

struct DeviationFit {
    NeuralNet net;
    Matrix alpha_hat;
};

struct VarianceFit {
    NeuralNet net;
    Vector sigma2_bar;
    Vector sigma2_hat;
};

/// sum_v ||y(s_v) - X b(s_v)||^2 / sigma2_tilde_v + lambda ||b(s_v)||_1 for
/// main-effect values `beta` (J x V).
double main_effect_objective(const Dataset& ds, const Vector& sigma2_tilde, double lambda, const Matrix& beta);

/// Step 1 network fit. Requires cfg.lambda. sigma2_tilde is floored at kVarianceFloor.
MainEffectFit fit_main_effect(const Dataset& ds, const Vector& sigma2_tilde, const FitConfig& cfg);

/// beta_hat = beta_tilde * 1{|beta_tilde| > eta_j}, strict inequality.
Matrix hard_threshold(const Matrix& beta_tilde, std::span<const double> eta);

/// eta_j such that exactly as many voxels pass |beta_tilde_j| > eta_j as
/// MUA declares significant (|z| > z_{1 - alpha/2}), up to ties.
std::vector<double> select_eta(const Matrix& beta_tilde, const MuaResult& mua, double alpha_level);

/// Two-sided standard normal critical value z_{1 - alpha/2}.
double normal_critical_value(double alpha_level);

DeviationFit fit_individual_deviation(const Dataset& ds, const Matrix& beta_hat, const Vector& sigma2_tilde,
                                      const FitConfig& cfg);

/// sigma2_bar_v = N^-1 ||y - X beta_hat - alpha_hat||^2 at each voxel.
Vector residual_variance(const Dataset& ds, const Matrix& beta_hat, const Matrix& alpha_hat);

VarianceFit fit_noise_variance(const Dataset& ds, const Matrix& beta_hat, const Matrix& alpha_hat,
                               const FitConfig& cfg);

/// Runs the main-effect, deviation and variance steps once each.
FitResult fit(const Dataset& ds, const FitConfig& cfg);

void save_fit(const FitResult& fit, const std::filesystem::path& dir);
FitResult load_fit(const std::filesystem::path& dir);

}  // namespace irrnn
