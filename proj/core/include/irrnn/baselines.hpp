#pragma once

#include "irrnn/grid.hpp"
#include "irrnn/metrics.hpp"

namespace irrnn {

/// Separable Gaussian smoothing of every row of `images` (N x V) on `grid`.
/// Kernel width `sigma` is in voxels, truncated at 3 sigma and renormalized
/// where it runs past the grid boundary. sigma == 0 returns the input.
Matrix gaussian_smooth(const Matrix& images, const VoxelGrid& grid, double sigma);

/// Voxel-wise OLS: beta is the OLS estimate, scores are |z|, selected is
/// |z| > z_{1 - alpha/2}, sigma2 is the N^-1 residual variance.
Estimate mua_estimate(const Dataset& ds, double alpha_level = 0.05);

/// mua_estimate on Y pre-smoothed with gaussian_smooth.
Estimate smoothed_mua_estimate(const Dataset& ds, double sigma = 1.0, double alpha_level = 0.05);

}  // namespace irrnn
