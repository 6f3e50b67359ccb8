#include "irrnn/linmod.hpp"

#include "irrnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irrnn {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kLassoTolerance = 1e-8;
constexpr int kLassoMaxSweeps = 10000;

// Shared factorization of one design matrix, reused across all voxels.
struct Design {
    Matrix gram;
    Matrix gram_inverse;
    Eigen::ColPivHouseholderQR<Matrix> qr;

    explicit Design(const Matrix& X) {
        if (X.rows() <= X.cols()) {
            throw InvalidArgument("OLS needs N > J (N = " + std::to_string(X.rows()) +
                                  ", J = " + std::to_string(X.cols()) + ")");
        }
        gram = X.transpose() * X;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo > kMaxCondition) {
            throw RankDeficiencyError("X'X is singular or ill-conditioned (condition number " +
                                      std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) +
                                      ")");
        }
        gram_inverse = gram.ldlt().solve(Matrix::Identity(X.cols(), X.cols()));
        qr.compute(X);
    }
};

double soft_threshold(double x, double t) {
    if (x > t) {
        return x - t;
    }
    if (x < -t) {
        return x + t;
    }
    return 0.0;
}

// Coordinate descent on the Gram form 1/2 b'Gb - c'b + lambda |b|_1.
// Updates `coef` in place (warm start).
void lasso_gram(const Matrix& gram, const Vector& c, double lambda, Vector& coef) {
    const Index J = gram.rows();
    for (int sweep = 0; sweep < kLassoMaxSweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < J; ++j) {
            const double gjj = gram(j, j);
            const double old = coef(j);
            if (gjj <= 0.0) {
                coef(j) = 0.0;
            } else {
                const double partial = c(j) - gram.row(j).dot(coef) + gjj * old;
                coef(j) = soft_threshold(partial, lambda) / gjj;
            }
            max_change = std::max(max_change, std::abs(coef(j) - old));
        }
        if (max_change < kLassoTolerance) {
            return;
        }
    }
}

std::vector<double> default_grid(double lambda_max, const LambdaSelection& o) {
    std::vector<double> grid(static_cast<std::size_t>(o.grid_size));
    if (o.grid_size == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double lo = std::log(o.min_ratio * lambda_max);
    const double hi = std::log(lambda_max);
    for (int k = 0; k < o.grid_size; ++k) {
        grid[static_cast<std::size_t>(k)] = std::exp(lo + (hi - lo) * k / (o.grid_size - 1));
    }
    return grid;
}

struct Fold {
    Matrix X_train, X_test;
    Matrix gram;  // X_train'X_train / n_train
    std::vector<Index> train, test;
};

std::vector<Fold> make_folds(const Matrix& X, int folds) {
    std::vector<Fold> out(static_cast<std::size_t>(folds));
    for (Index i = 0; i < X.rows(); ++i) {
        auto& f = out[static_cast<std::size_t>(i % folds)];
        f.test.push_back(i);
        for (int k = 0; k < folds; ++k) {
            if (k != i % folds) {
                out[static_cast<std::size_t>(k)].train.push_back(i);
            }
        }
    }
    for (auto& f : out) {
        f.X_train = X(f.train, Eigen::all);
        f.X_test = X(f.test, Eigen::all);
        f.gram = f.X_train.transpose() * f.X_train / static_cast<double>(f.train.size());
    }
    return out;
}

// CV-optimal lambda for one voxel. `grid` must be sorted ascending.
double cv_lambda(const std::vector<Fold>& folds, const Vector& y, std::span<const double> grid) {
    std::vector<double> error(grid.size(), 0.0);
    for (const auto& f : folds) {
        const Vector y_train = y(f.train);
        const Vector y_test = y(f.test);
        const Vector c = f.X_train.transpose() * y_train / static_cast<double>(f.train.size());
        Vector coef = Vector::Zero(f.X_train.cols());
        // Largest lambda first so each solve warm-starts from a sparser one.
        for (std::size_t k = grid.size(); k-- > 0;) {
            lasso_gram(f.gram, c, grid[k], coef);
            error[k] += (y_test - f.X_test * coef).squaredNorm();
        }
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (error[k] < error[best]) {
            best = k;
        }
    }
    return grid[best];
}

void check_folds(const Dataset& ds, int folds) {
    if (folds < 2) {
        throw InvalidArgument("need at least 2 CV folds");
    }
    if (ds.subjects() < folds) {
        throw InvalidArgument("need N >= folds for cross-validation");
    }
}

}  // namespace

OlsFit ols_voxel(const Matrix& X, const Vector& y) {
    if (y.size() != X.rows()) {
        throw InvalidArgument("y length does not match rows of X");
    }
    Design d(X);
    OlsFit fit;
    fit.coef = d.qr.solve(y);
    fit.residual_ss = (y - X * fit.coef).squaredNorm();
    return fit;
}

Vector initial_variance(const Dataset& ds) {
    ds.validate();
    Design d(ds.X);
    const Matrix B = d.qr.solve(ds.Y);
    const Matrix R = ds.Y - ds.X * B;
    Vector s2 = R.colwise().squaredNorm().transpose() / static_cast<double>(ds.subjects());
    return s2.cwiseMax(kVarianceFloor);
}

MuaResult mua(const Dataset& ds) {
    ds.validate();
    const Index N = ds.subjects();
    const Index J = ds.covariates();
    if (N <= J + 1) {
        throw InvalidArgument("MUA needs N > J + 1");
    }
    Design d(ds.X);
    MuaResult r;
    r.beta_ols = d.qr.solve(ds.Y);
    const Matrix resid = ds.Y - ds.X * r.beta_ols;
    const Vector rss = resid.colwise().squaredNorm().transpose();
    r.sigma2_tilde = (rss / static_cast<double>(N)).cwiseMax(kVarianceFloor);

    const Vector unbiased = rss / static_cast<double>(N - J);
    const Vector diag = d.gram_inverse.diagonal();
    r.se.resize(J, ds.voxels());
    r.z.resize(J, ds.voxels());
    r.degenerate = Mask::Zero(J, ds.voxels());
    for (Index v = 0; v < ds.voxels(); ++v) {
        for (Index j = 0; j < J; ++j) {
            const double se = std::sqrt(unbiased(v) * diag(j));
            r.se(j, v) = se;
            const double b = r.beta_ols(j, v);
            if (se > 0.0) {
                r.z(j, v) = b / se;
            } else {
                r.degenerate(j, v) = 1;
                r.z(j, v) = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
            }
        }
    }
    return r;
}

Vector lasso_voxel(const Matrix& X, const Vector& y, double lambda) {
    if (y.size() != X.rows()) {
        throw InvalidArgument("y length does not match rows of X");
    }
    if (!(lambda >= 0.0)) {
        throw InvalidArgument("lambda must be non-negative");
    }
    const double n = static_cast<double>(X.rows());
    Vector coef = Vector::Zero(X.cols());
    // Zero satisfies the optimality conditions exactly from lambda_max on.
    if (lambda >= (X.transpose() * y).cwiseAbs().maxCoeff() / n) {
        return coef;
    }
    const Vector col_sq = X.colwise().squaredNorm().transpose() / n;
    Vector resid = y;
    for (int sweep = 0; sweep < kLassoMaxSweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < X.cols(); ++j) {
            const double old = coef(j);
            double updated = 0.0;
            if (col_sq(j) > 0.0) {
                const double rho = X.col(j).dot(resid) / n + col_sq(j) * old;
                updated = soft_threshold(rho, lambda) / col_sq(j);
            }
            if (updated != old) {
                resid -= (updated - old) * X.col(j);
                coef(j) = updated;
            }
            max_change = std::max(max_change, std::abs(updated - old));
        }
        if (max_change < kLassoTolerance) {
            break;
        }
    }
    return coef;
}

double lasso_objective(const Matrix& X, const Vector& y, const Vector& coef, double lambda) {
    return (y - X * coef).squaredNorm() / (2.0 * static_cast<double>(X.rows())) + lambda * coef.lpNorm<1>();
}

std::vector<double> voxel_lambdas(const Dataset& ds, int folds, std::span<const double> lambda_grid) {
    ds.validate();
    if (lambda_grid.empty()) {
        throw InvalidArgument("lambda grid is empty");
    }
    check_folds(ds, folds);
    std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
    for (double l : grid) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw InvalidArgument("lambda grid values must be finite and non-negative");
        }
    }
    std::sort(grid.begin(), grid.end());
    const auto fold_data = make_folds(ds.X, folds);
    std::vector<double> out(static_cast<std::size_t>(ds.voxels()));
    for (Index v = 0; v < ds.voxels(); ++v) {
        out[static_cast<std::size_t>(v)] = cv_lambda(fold_data, ds.Y.col(v), grid);
    }
    return out;
}

std::vector<double> voxel_lambdas(const Dataset& ds, const LambdaSelection& options) {
    ds.validate();
    check_folds(ds, options.folds);
    if (options.grid_size < 1 || !(options.min_ratio > 0.0 && options.min_ratio <= 1.0)) {
        throw InvalidArgument("default lambda grid needs grid_size >= 1 and min_ratio in (0, 1]");
    }
    const auto fold_data = make_folds(ds.X, options.folds);
    const double n = static_cast<double>(ds.subjects());
    std::vector<double> out(static_cast<std::size_t>(ds.voxels()));
    for (Index v = 0; v < ds.voxels(); ++v) {
        const Vector y = ds.Y.col(v);
        const double lambda_max = (ds.X.transpose() * y).cwiseAbs().maxCoeff() / n;
        if (!(lambda_max > 0.0)) {
            out[static_cast<std::size_t>(v)] = 0.0;
            continue;
        }
        const auto grid = default_grid(lambda_max, options);
        out[static_cast<std::size_t>(v)] = cv_lambda(fold_data, y, grid);
    }
    return out;
}

double select_lambda(const Dataset& ds, int folds, std::span<const double> lambda_grid) {
    return lower_median(voxel_lambdas(ds, folds, lambda_grid));
}

double select_lambda(const Dataset& ds, const LambdaSelection& options) {
    return lower_median(voxel_lambdas(ds, options));
}

double lower_median(std::vector<double> values) {
    if (values.empty()) {
        throw InvalidArgument("median of an empty set");
    }
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

}  // namespace irrnn
