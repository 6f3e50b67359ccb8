#pragma once

#include "irrnn/grid.hpp"
#include "irrnn/rng.hpp"

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

namespace irrnn::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("irrnn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = n(rng);
        }
    }
    return m;
}

inline Dataset random_dataset(std::vector<int> dims, Index subjects, Index covariates, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.grid = make_grid(std::move(dims));
    ds.X = random_matrix(subjects, covariates, rng);
    ds.Y = random_matrix(subjects, ds.grid.size(), rng);
    return ds;
}

}  // namespace irrnn::test
