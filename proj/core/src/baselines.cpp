#include "irrnn/baselines.hpp"

#include "irrnn/error.hpp"
#include "irrnn/estimator.hpp"
#include "irrnn/linmod.hpp"

#include <cmath>

namespace irrnn {

Matrix gaussian_smooth(const Matrix& images, const VoxelGrid& grid, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("smoothing sigma must be finite and non-negative");
    }
    if (images.cols() != grid.size()) {
        throw InvalidArgument("image width does not match the grid");
    }
    if (sigma == 0.0) {
        return images;
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    for (int k = -radius; k <= radius; ++k) {
        kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
    }

    const auto& dims = grid.dims();
    Matrix current = images;
    Matrix next(images.rows(), images.cols());
    // Stride of each axis in the row-major voxel order.
    std::vector<Index> stride(dims.size(), 1);
    for (std::size_t a = dims.size() - 1; a-- > 0;) {
        stride[a] = stride[a + 1] * dims[a + 1];
    }
    for (std::size_t a = 0; a < dims.size(); ++a) {
        const int n = dims[a];
        for (Index v = 0; v < grid.size(); ++v) {
            const int pos = static_cast<int>((v / stride[a]) % n);
            double weight = 0.0;
            next.col(v).setZero();
            for (int k = -radius; k <= radius; ++k) {
                const int p = pos + k;
                if (p < 0 || p >= n) {
                    continue;
                }
                const double w = kernel[static_cast<std::size_t>(k + radius)];
                next.col(v) += w * current.col(v + static_cast<Index>(k) * stride[a]);
                weight += w;
            }
            next.col(v) /= weight;
        }
        std::swap(current, next);
    }
    return current;
}

Estimate mua_estimate(const Dataset& ds, double alpha_level) {
    const MuaResult r = mua(ds);
    const double crit = normal_critical_value(alpha_level);
    Estimate e;
    e.beta = r.beta_ols;
    e.scores = r.z.cwiseAbs();
    e.selected = (e.scores.array() > crit).cast<std::uint8_t>().matrix();
    e.sigma2 = r.sigma2_tilde;
    return e;
}

Estimate smoothed_mua_estimate(const Dataset& ds, double sigma, double alpha_level) {
    Dataset smoothed = ds;
    smoothed.Y = gaussian_smooth(ds.Y, ds.grid, sigma);
    return mua_estimate(smoothed, alpha_level);
}

}  // namespace irrnn
