#pragma once

#include "irrnn/grid.hpp"
#include "irrnn/rng.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace irrnn {

enum class NoiseKind { gaussian, chisq3 };

std::string_view to_string(NoiseKind k);
NoiseKind parse_noise(std::string_view name);

struct SimConfig {
    std::vector<int> dims{16, 16, 8};
    int subjects = 20;
    int covariates = 3;
    NoiseKind noise = NoiseKind::gaussian;
    /// Target variance proportions of X beta, alpha and epsilon.
    std::array<double, 3> variance_ratio{0.2, 0.5, 1.0};
    std::uint64_t seed = 0;

    void validate() const;
};

struct MainEffectField {
    Vector values;  // V
    Mask support;   // V x 1
};

/// amplitude * (1 - (distance / radius)^2) inside the sphere, 0 outside.
double sphere_profile(double distance, double radius, double amplitude);

/// One main-effect map over the four blocks spanned by the first two axes:
/// empty, two tapered spheres, two constant boxes, one sphere plus one box.
MainEffectField gen_main_effect(const VoxelGrid& grid, Rng& rng);

/// Cone-shaped deviation: a random center value decaying linearly with
/// distance to a random center voxel, reaching zero at half the grid diagonal.
Vector gen_individual_deviation(const VoxelGrid& grid, Rng& rng);

/// a + b sin(w <u, s> + phase) with a > b > 0 over normalized coordinates.
Vector gen_noise_variance(const VoxelGrid& grid, Rng& rng);

/// One standardized noise draw: N(0,1) or (chi2_3 - 3) / sqrt(6).
double draw_noise(NoiseKind kind, Rng& rng);

struct Simulation {
    Dataset data;
    GroundTruth truth;
};

/// Full dataset with ground truth, rescaled so the empirical variances of
/// X beta, alpha and epsilon follow cfg.variance_ratio (epsilon normalized
/// to the last entry). Deterministic in cfg.seed.
Simulation generate(const SimConfig& cfg);

/// Fresh subjects sharing beta and sigma2 with an earlier simulation: new X,
/// new deviations (rescaled to the same variance target) and new noise.
Simulation generate_subjects(const SimConfig& cfg, const GroundTruth& shared, int subjects, std::uint64_t seed);

/// Population variance over all entries.
double empirical_variance(const Matrix& m);

/// Realized (var(X beta), var(alpha), var(epsilon)) of a simulation.
std::array<double, 3> component_variances(const Dataset& ds, const GroundTruth& truth);

}  // namespace irrnn
