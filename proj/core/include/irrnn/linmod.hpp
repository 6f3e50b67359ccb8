#pragma once

#include "irrnn/grid.hpp"

#include <span>
#include <vector>

namespace irrnn {

/// Floor applied to residual variances before they are used as divisors.
inline constexpr double kVarianceFloor = 1e-8;

struct OlsFit {
    Vector coef;
    double residual_ss = 0.0;
};

/// Least squares for one voxel. Throws RankDeficiencyError when X'X is
/// singular or its condition number exceeds 1e12, InvalidArgument when N <= J.
OlsFit ols_voxel(const Matrix& X, const Vector& y);

/// Mass univariate analysis: one OLS regression per voxel.
struct MuaResult {
    Matrix beta_ols;      // J x V
    Matrix se;            // J x V
    Matrix z;             // J x V
    Vector sigma2_tilde;  // V, N^-1 residual SS, floored at kVarianceFloor
    /// 1 where se == 0; z there holds +-infinity (0 when the coefficient is 0).
    Mask degenerate;      // J x V
};

/// sigma~^2_v = N^-1 || (I - X (X'X)^-1 X') y(s_v) ||^2, floored at kVarianceFloor.
Vector initial_variance(const Dataset& ds);

/// Requires N > J + 1. Standard errors use the unbiased N - J divisor.
MuaResult mua(const Dataset& ds);

/// Minimizes (2N)^-1 ||y - X b||^2 + lambda ||b||_1 by cyclic coordinate
/// descent; stops when no coordinate moves more than 1e-8 or after 10000 sweeps.
Vector lasso_voxel(const Matrix& X, const Vector& y, double lambda);

/// Value of the Lasso objective above.
double lasso_objective(const Matrix& X, const Vector& y, const Vector& coef, double lambda);

struct LambdaSelection {
    int folds = 5;
    /// Used when no explicit grid is passed: per-voxel log-spaced grid from
    /// min_ratio * lambda_max(v) to lambda_max(v), lambda_max = max_j |X_j'y| / N.
    int grid_size = 50;
    double min_ratio = 1e-4;
};

/// Per voxel, the lambda with the smallest k-fold CV prediction error
/// (ties to the smaller lambda); returns the lower median over voxels.
/// Fold k holds subjects i with i % folds == k.
double select_lambda(const Dataset& ds, int folds, std::span<const double> lambda_grid);
double select_lambda(const Dataset& ds, const LambdaSelection& options = {});

/// The per-voxel choices behind select_lambda (useful for diagnostics).
std::vector<double> voxel_lambdas(const Dataset& ds, int folds, std::span<const double> lambda_grid);
std::vector<double> voxel_lambdas(const Dataset& ds, const LambdaSelection& options);

/// Element (n - 1) / 2 of the sorted values: the lower median for even n.
double lower_median(std::vector<double> values);

}  // namespace irrnn
