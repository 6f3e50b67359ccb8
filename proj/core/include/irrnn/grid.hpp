#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace irrnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Rectangular voxel lattice with coordinates normalized to [-1, 1] per axis.
///
/// Voxels are enumerated row-major (last axis fastest). Every J x V and
/// N x V array in the library uses this voxel order.
class VoxelGrid {
  public:
    VoxelGrid() = default;

    const std::vector<int>& dims() const noexcept { return dims_; }
    int dim() const noexcept { return static_cast<int>(dims_.size()); }
    Index size() const noexcept { return coords_.rows(); }

    /// V x D, one row per voxel.
    const Matrix& coords() const noexcept { return coords_; }

    /// Lattice index of voxel `v` along each axis.
    std::vector<int> lattice_index(Index v) const;
    Index linear_index(std::span<const int> lattice) const;

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

  private:
    friend VoxelGrid make_grid(std::vector<int> dims);

    std::vector<int> dims_;
    Matrix coords_;
};

/// Build the grid for `dims` (1 to 3 axes, each >= 1). Throws InvalidArgument.
VoxelGrid make_grid(std::vector<int> dims);

/// N subjects, J covariates, V voxels. X is N x J, Y is N x V.
struct Dataset {
    VoxelGrid grid;
    Matrix X;
    Matrix Y;

    Index subjects() const noexcept { return X.rows(); }
    Index covariates() const noexcept { return X.cols(); }
    Index voxels() const noexcept { return grid.size(); }

    /// Throws InvalidArgument when shapes disagree, N < 2, or an entry is non-finite.
    void validate() const;

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.grid == b.grid && a.X.rows() == b.X.rows() && a.X.cols() == b.X.cols() &&
               a.Y.rows() == b.Y.rows() && a.Y.cols() == b.Y.cols() && a.X == b.X && a.Y == b.Y;
    }
};

/// Known generating fields of a simulated dataset.
struct GroundTruth {
    Matrix beta;    // J x V
    Matrix alpha;   // N x V
    Vector sigma2;  // V
    Mask support;   // J x V, 1 where beta != 0
    Matrix noise;   // N x V, realized epsilon (may be empty when not recorded)

    /// Throws InvalidArgument on shape mismatch, non-positive sigma2, or a
    /// support mask that disagrees with beta.
    void validate(Index subjects, Index voxels) const;
};

/// Writes `manifest`, X.f64, Y.f64 and (when given) truth_*.f64 / truth_support.u8.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const GroundTruth* truth = nullptr);

/// Throws FormatError naming the offending field on any inconsistency.
Dataset load_dataset(const std::filesystem::path& dir);

/// Empty when the directory carries no truth arrays.
std::optional<GroundTruth> load_ground_truth(const std::filesystem::path& dir);

}  // namespace irrnn
