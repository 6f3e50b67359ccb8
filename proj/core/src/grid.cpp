#include "irrnn/grid.hpp"

#include "array_io.hpp"
#include "irrnn/error.hpp"

#include <cmath>

namespace irrnn {

namespace fs = std::filesystem;

VoxelGrid make_grid(std::vector<int> dims) {
    if (dims.empty() || dims.size() > 3) {
        throw InvalidArgument("grid needs 1 to 3 axes, got " + std::to_string(dims.size()));
    }
    Index total = 1;
    for (int d : dims) {
        if (d < 1) {
            throw InvalidArgument("grid dimension must be >= 1, got " + std::to_string(d));
        }
        total *= d;
    }

    VoxelGrid g;
    g.dims_ = std::move(dims);
    const int axes = g.dim();
    g.coords_.resize(total, axes);
    for (Index v = 0; v < total; ++v) {
        Index rem = v;
        for (int a = axes - 1; a >= 0; --a) {
            const int n = g.dims_[static_cast<std::size_t>(a)];
            const Index k = rem % n;
            rem /= n;
            // Integer endpoints map exactly to -1 and +1.
            g.coords_(v, a) = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n - 1);
        }
    }
    return g;
}

std::vector<int> VoxelGrid::lattice_index(Index v) const {
    std::vector<int> out(dims_.size());
    for (int a = dim() - 1; a >= 0; --a) {
        const int n = dims_[static_cast<std::size_t>(a)];
        out[static_cast<std::size_t>(a)] = static_cast<int>(v % n);
        v /= n;
    }
    return out;
}

Index VoxelGrid::linear_index(std::span<const int> lattice) const {
    Index v = 0;
    for (std::size_t a = 0; a < dims_.size(); ++a) {
        v = v * dims_[a] + lattice[a];
    }
    return v;
}

void Dataset::validate() const {
    if (X.rows() < 2) {
        throw InvalidArgument("dataset needs N >= 2 subjects");
    }
    if (Y.rows() != X.rows()) {
        throw InvalidArgument("X has " + std::to_string(X.rows()) + " rows but Y has " + std::to_string(Y.rows()));
    }
    if (Y.cols() != grid.size()) {
        throw InvalidArgument("Y has " + std::to_string(Y.cols()) + " columns but grid has " +
                              std::to_string(grid.size()) + " voxels");
    }
    if (!X.allFinite() || !Y.allFinite()) {
        throw InvalidArgument("dataset contains non-finite entries");
    }
}

void GroundTruth::validate(Index subjects, Index voxels) const {
    if (beta.cols() != voxels || support.rows() != beta.rows() || support.cols() != voxels) {
        throw InvalidArgument("beta/support shape mismatch");
    }
    if (alpha.rows() != subjects || alpha.cols() != voxels) {
        throw InvalidArgument("alpha shape mismatch");
    }
    if (sigma2.size() != voxels || !(sigma2.array() > 0.0).all()) {
        throw InvalidArgument("sigma2 must be a positive V-vector");
    }
    for (Index j = 0; j < beta.rows(); ++j) {
        for (Index v = 0; v < voxels; ++v) {
            if ((support(j, v) != 0) != (std::abs(beta(j, v)) > 0.0)) {
                throw InvalidArgument("support mask disagrees with beta");
            }
        }
    }
}

void save_dataset(const Dataset& ds, const fs::path& dir, const GroundTruth* truth) {
    ds.validate();
    nlohmann::json m = detail::encoding_fields();
    m["format"] = "irrnn-dataset";
    m["version"] = 1;
    m["dims"] = ds.grid.dims();
    m["coordinates"] = "row-major lattice, each axis mapped to [-1, 1]";
    m["N"] = ds.subjects();
    m["J"] = ds.covariates();
    m["V"] = ds.voxels();
    nlohmann::json arrays = {{"X", "X.f64"}, {"Y", "Y.f64"}};
    if (truth != nullptr) {
        truth->validate(ds.subjects(), ds.voxels());
        arrays["truth_beta"] = "truth_beta.f64";
        arrays["truth_alpha"] = "truth_alpha.f64";
        arrays["truth_sigma2"] = "truth_sigma2.f64";
        arrays["truth_support"] = "truth_support.u8";
        if (truth->noise.size() > 0) {
            arrays["truth_noise"] = "truth_noise.f64";
        }
    }
    m["arrays"] = arrays;

    detail::write_manifest(dir, m);
    detail::write_matrix(dir / "X.f64", ds.X);
    detail::write_matrix(dir / "Y.f64", ds.Y);
    if (truth != nullptr) {
        detail::write_matrix(dir / "truth_beta.f64", truth->beta);
        detail::write_matrix(dir / "truth_alpha.f64", truth->alpha);
        detail::write_f64(dir / "truth_sigma2.f64", truth->sigma2.data(), static_cast<std::size_t>(truth->sigma2.size()));
        detail::write_mask(dir / "truth_support.u8", truth->support);
        if (truth->noise.size() > 0) {
            detail::write_matrix(dir / "truth_noise.f64", truth->noise);
        }
    }
}

namespace {

struct DatasetHeader {
    nlohmann::json manifest;
    std::vector<int> dims;
    Index n, j, v;
};

DatasetHeader read_header(const fs::path& dir) {
    DatasetHeader h;
    h.manifest = detail::read_manifest(dir);
    if (detail::require_string(h.manifest, "format") != "irrnn-dataset") {
        throw FormatError("format", "not an irrnn dataset");
    }
    detail::require_encoding(h.manifest);
    h.dims = detail::require_int_list(h.manifest, "dims");
    h.n = detail::require_int(h.manifest, "N", 2);
    h.j = detail::require_int(h.manifest, "J", 1);
    h.v = detail::require_int(h.manifest, "V", 1);
    Index product = 1;
    for (int d : h.dims) {
        if (d < 1) {
            throw FormatError("dims", "non-positive dimension");
        }
        product *= d;
    }
    if (h.dims.empty() || h.dims.size() > 3 || product != h.v) {
        throw FormatError("V", "does not match product of dims");
    }
    if (!h.manifest.contains("arrays") || !h.manifest["arrays"].is_object()) {
        throw FormatError("arrays", "missing array table");
    }
    return h;
}

fs::path array_path(const fs::path& dir, const nlohmann::json& arrays, const std::string& key) {
    auto it = arrays.find(key);
    if (it == arrays.end() || !it->is_string()) {
        throw FormatError(key, "array entry missing from manifest");
    }
    auto name = it->get<std::string>();
    if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos) {
        throw FormatError(key, "array file name must be a plain file name");
    }
    return dir / name;
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
    auto h = read_header(dir);
    const auto& arrays = h.manifest["arrays"];
    Dataset ds;
    ds.grid = make_grid(h.dims);
    ds.X = detail::read_matrix(array_path(dir, arrays, "X"), h.n, h.j, "X");
    ds.Y = detail::read_matrix(array_path(dir, arrays, "Y"), h.n, h.v, "Y");
    return ds;
}

std::optional<GroundTruth> load_ground_truth(const fs::path& dir) {
    auto h = read_header(dir);
    const auto& arrays = h.manifest["arrays"];
    if (!arrays.contains("truth_beta")) {
        return std::nullopt;
    }
    GroundTruth t;
    t.beta = detail::read_matrix(array_path(dir, arrays, "truth_beta"), h.j, h.v, "truth_beta");
    t.alpha = detail::read_matrix(array_path(dir, arrays, "truth_alpha"), h.n, h.v, "truth_alpha");
    auto s2 = detail::read_f64(array_path(dir, arrays, "truth_sigma2"), static_cast<std::size_t>(h.v), "truth_sigma2");
    t.sigma2 = Eigen::Map<Vector>(s2.data(), h.v);
    t.support = detail::read_mask(array_path(dir, arrays, "truth_support"), h.j, h.v, "truth_support");
    if (arrays.contains("truth_noise")) {
        t.noise = detail::read_matrix(array_path(dir, arrays, "truth_noise"), h.n, h.v, "truth_noise");
    }
    try {
        t.validate(h.n, h.v);
    } catch (const InvalidArgument& e) {
        throw FormatError("truth", e.what());
    }
    return t;
}

}  // namespace irrnn
