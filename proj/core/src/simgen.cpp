#include "irrnn/simgen.hpp"

#include "irrnn/error.hpp"

#include <cmath>
#include <numbers>

namespace irrnn {

std::string_view to_string(NoiseKind k) {
    return k == NoiseKind::gaussian ? "gaussian" : "chisq3";
}

NoiseKind parse_noise(std::string_view name) {
    if (name == "gaussian") {
        return NoiseKind::gaussian;
    }
    if (name == "chisq3") {
        return NoiseKind::chisq3;
    }
    throw InvalidArgument("unknown noise kind '" + std::string(name) + "' (expected gaussian or chisq3)");
}

void SimConfig::validate() const {
    if (dims.size() < 2 || dims.size() > 3) {
        throw InvalidArgument("simulation grid needs 2 or 3 axes");
    }
    for (int d : dims) {
        if (d < 1) {
            throw InvalidArgument("grid dimensions must be >= 1");
        }
    }
    if (subjects < 2) {
        throw InvalidArgument("need N >= 2 subjects");
    }
    if (covariates < 1) {
        throw InvalidArgument("need J >= 1 covariates");
    }
    for (double r : variance_ratio) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw InvalidArgument("variance ratio entries must be positive");
        }
    }
}

namespace {

// Axis-aligned region of the lattice in voxel units; voxel k spans [k, k+1).
struct Block {
    std::vector<double> lo;
    std::vector<double> hi;

    bool contains(const std::vector<double>& p) const {
        for (std::size_t a = 0; a < lo.size(); ++a) {
            if (p[a] < lo[a] || p[a] >= hi[a]) {
                return false;
            }
        }
        return true;
    }
};

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double signed_amplitude(Rng& rng) {
    const double magnitude = uniform(rng, 0.5, 1.5);
    return std::bernoulli_distribution(0.5)(rng) ? magnitude : -magnitude;
}

// Width of the block in the plane of the first two axes.
double plane_width(const Block& b) {
    return std::min(b.hi[0] - b.lo[0], b.hi[1] - b.lo[1]);
}

std::vector<double> voxel_center(const VoxelGrid& grid, Index v) {
    auto lattice = grid.lattice_index(v);
    std::vector<double> p(lattice.size());
    for (std::size_t a = 0; a < lattice.size(); ++a) {
        p[a] = lattice[a] + 0.5;
    }
    return p;
}

void add_sphere(const VoxelGrid& grid, const Block& block, Rng& rng, Vector& field) {
    std::vector<double> center(block.lo.size());
    for (std::size_t a = 0; a < center.size(); ++a) {
        center[a] = uniform(rng, block.lo[a], block.hi[a]);
    }
    const double radius = uniform(rng, 0.15, 0.40) * plane_width(block);
    const double amplitude = signed_amplitude(rng);
    for (Index v = 0; v < grid.size(); ++v) {
        const auto p = voxel_center(grid, v);
        if (!block.contains(p)) {
            continue;
        }
        double r2 = 0.0;
        for (std::size_t a = 0; a < p.size(); ++a) {
            r2 += (p[a] - center[a]) * (p[a] - center[a]);
        }
        field(v) += sphere_profile(std::sqrt(r2), radius, amplitude);
    }
}

void add_box(const VoxelGrid& grid, const Block& block, Rng& rng, Vector& field) {
    const std::size_t axes = block.lo.size();
    std::vector<double> lo(axes);
    std::vector<double> hi(axes);
    for (std::size_t a = 0; a < axes; ++a) {
        const double extent = block.hi[a] - block.lo[a];
        const double side = uniform(rng, 0.20, 0.50) * (a < 2 ? plane_width(block) : extent);
        lo[a] = uniform(rng, block.lo[a], block.hi[a] - side);
        hi[a] = lo[a] + side;
    }
    const double amplitude = signed_amplitude(rng);
    const Block box{lo, hi};
    for (Index v = 0; v < grid.size(); ++v) {
        const auto p = voxel_center(grid, v);
        if (block.contains(p) && box.contains(p)) {
            field(v) += amplitude;
        }
    }
}

}  // namespace

double sphere_profile(double distance, double radius, double amplitude) {
    if (!(radius > 0.0) || distance >= radius) {
        return 0.0;
    }
    const double t = distance / radius;
    return amplitude * (1.0 - t * t);
}

MainEffectField gen_main_effect(const VoxelGrid& grid, Rng& rng) {
    if (grid.dim() < 2) {
        throw InvalidArgument("main effect generator needs at least two axes");
    }
    const auto& dims = grid.dims();
    const double mid0 = dims[0] / 2;
    const double mid1 = dims[1] / 2;
    auto make_block = [&](double lo0, double hi0, double lo1, double hi1) {
        Block b;
        b.lo = {lo0, lo1};
        b.hi = {hi0, hi1};
        for (std::size_t a = 2; a < dims.size(); ++a) {
            b.lo.push_back(0.0);
            b.hi.push_back(dims[a]);
        }
        return b;
    };
    // "Top" is the lower half of axis 0, "left" the lower half of axis 1.
    // The top-left block carries no signal.
    const Block top_right = make_block(0, mid0, mid1, dims[1]);
    const Block bottom_left = make_block(mid0, dims[0], 0, mid1);
    const Block bottom_right = make_block(mid0, dims[0], mid1, dims[1]);

    Vector field = Vector::Zero(grid.size());
    add_sphere(grid, top_right, rng, field);
    add_sphere(grid, top_right, rng, field);
    add_box(grid, bottom_left, rng, field);
    add_box(grid, bottom_left, rng, field);
    add_sphere(grid, bottom_right, rng, field);
    add_box(grid, bottom_right, rng, field);

    MainEffectField out;
    out.values = std::move(field);
    out.support = (out.values.array() != 0.0).cast<std::uint8_t>().matrix();
    return out;
}

Vector gen_individual_deviation(const VoxelGrid& grid, Rng& rng) {
    const Index center = std::uniform_int_distribution<Index>(0, grid.size() - 1)(rng);
    const double value = signed_amplitude(rng);
    double diag2 = 0.0;
    for (int d : grid.dims()) {
        diag2 += static_cast<double>(d - 1) * (d - 1);
    }
    const double reach = 0.5 * std::sqrt(diag2);
    const auto c = grid.lattice_index(center);

    Vector out(grid.size());
    for (Index v = 0; v < grid.size(); ++v) {
        const auto p = grid.lattice_index(v);
        double r2 = 0.0;
        for (std::size_t a = 0; a < p.size(); ++a) {
            r2 += static_cast<double>(p[a] - c[a]) * (p[a] - c[a]);
        }
        if (reach > 0.0) {
            out(v) = value * std::max(0.0, 1.0 - std::sqrt(r2) / reach);
        } else {
            out(v) = v == center ? value : 0.0;
        }
    }
    return out;
}

Vector gen_noise_variance(const VoxelGrid& grid, Rng& rng) {
    const int D = grid.dim();
    Vector direction(D);
    std::normal_distribution<double> normal;
    do {
        for (int a = 0; a < D; ++a) {
            direction(a) = normal(rng);
        }
    } while (direction.norm() < 1e-12);
    direction.normalize();
    const double freq = uniform(rng, std::numbers::pi, 3.0 * std::numbers::pi);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double level = uniform(rng, 0.75, 1.25);
    const double swing = uniform(rng, 0.25, 0.5 * level);

    Vector out(grid.size());
    const Vector projection = grid.coords() * direction;
    for (Index v = 0; v < grid.size(); ++v) {
        out(v) = level + swing * std::sin(freq * projection(v) + phase);
    }
    return out;
}

double draw_noise(NoiseKind kind, Rng& rng) {
    std::normal_distribution<double> normal;
    if (kind == NoiseKind::gaussian) {
        return normal(rng);
    }
    double q = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double z = normal(rng);
        q += z * z;
    }
    return (q - 3.0) / std::sqrt(6.0);
}

double empirical_variance(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    const double mean = m.mean();
    return (m.array() - mean).square().mean();
}

Simulation generate(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const VoxelGrid grid = make_grid(cfg.dims);
    const Index V = grid.size();
    const Index N = cfg.subjects;
    const Index J = cfg.covariates;

    Matrix X(N, J);
    std::normal_distribution<double> normal;
    for (Index i = 0; i < N; ++i) {
        for (Index j = 0; j < J; ++j) {
            X(i, j) = normal(rng);
        }
    }

    Matrix beta(J, V);
    for (Index j = 0; j < J; ++j) {
        beta.row(j) = gen_main_effect(grid, rng).values.transpose();
    }
    Matrix alpha(N, V);
    for (Index i = 0; i < N; ++i) {
        alpha.row(i) = gen_individual_deviation(grid, rng).transpose();
    }
    Vector sigma2 = gen_noise_variance(grid, rng);

    Matrix noise(N, V);
    for (Index i = 0; i < N; ++i) {
        for (Index v = 0; v < V; ++v) {
            noise(i, v) = draw_noise(cfg.noise, rng) * std::sqrt(sigma2(v));
        }
    }

    const auto& ratio = cfg.variance_ratio;
    const double noise_var = empirical_variance(noise);
    if (noise_var > 0.0) {
        const double c = std::sqrt(ratio[2] / noise_var);
        noise *= c;
        sigma2 *= c * c;
    }
    const double main_var = empirical_variance(X * beta);
    if (main_var > 0.0) {
        beta *= std::sqrt(ratio[0] / main_var);
    }
    const double dev_var = empirical_variance(alpha);
    if (dev_var > 0.0) {
        alpha *= std::sqrt(ratio[1] / dev_var);
    }

    Simulation sim;
    sim.data.grid = grid;
    sim.data.X = X;
    sim.data.Y = X * beta + alpha + noise;
    sim.truth.support = (beta.array() != 0.0).cast<std::uint8_t>().matrix();
    sim.truth.beta = std::move(beta);
    sim.truth.alpha = std::move(alpha);
    sim.truth.sigma2 = std::move(sigma2);
    sim.truth.noise = std::move(noise);
    return sim;
}

Simulation generate_subjects(const SimConfig& cfg, const GroundTruth& shared, int subjects, std::uint64_t seed) {
    cfg.validate();
    if (subjects < 1) {
        throw InvalidArgument("need at least one subject");
    }
    const VoxelGrid grid = make_grid(cfg.dims);
    const Index V = grid.size();
    const Index J = cfg.covariates;
    if (shared.beta.rows() != J || shared.beta.cols() != V || shared.sigma2.size() != V) {
        throw InvalidArgument("shared truth does not match the simulation config");
    }
    Rng rng(seed);
    const Index N = subjects;
    Matrix X(N, J);
    std::normal_distribution<double> normal;
    for (Index i = 0; i < N; ++i) {
        for (Index j = 0; j < J; ++j) {
            X(i, j) = normal(rng);
        }
    }
    Matrix alpha(N, V);
    for (Index i = 0; i < N; ++i) {
        alpha.row(i) = gen_individual_deviation(grid, rng).transpose();
    }
    Matrix noise(N, V);
    for (Index i = 0; i < N; ++i) {
        for (Index v = 0; v < V; ++v) {
            noise(i, v) = draw_noise(cfg.noise, rng) * std::sqrt(shared.sigma2(v));
        }
    }
    const double dev_var = empirical_variance(alpha);
    if (dev_var > 0.0) {
        alpha *= std::sqrt(cfg.variance_ratio[1] / dev_var);
    }

    Simulation sim;
    sim.data.grid = grid;
    sim.data.X = X;
    sim.data.Y = X * shared.beta + alpha + noise;
    sim.truth.beta = shared.beta;
    sim.truth.support = shared.support;
    sim.truth.sigma2 = shared.sigma2;
    sim.truth.alpha = std::move(alpha);
    sim.truth.noise = std::move(noise);
    return sim;
}

std::array<double, 3> component_variances(const Dataset& ds, const GroundTruth& truth) {
    return {empirical_variance(ds.X * truth.beta), empirical_variance(truth.alpha),
            empirical_variance(truth.noise)};
}

}  // namespace irrnn
