#pragma once

#include "cli/benchmark.hpp"

#include "irrnn/grid.hpp"
#include "irrnn/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace irrnn::cli {

/// 12 significant digits; "nan" / "inf" for non-finite values.
std::string format_number(double x);

struct CsvRow {
    std::string method;
    int subjects = 0;
    std::string dims;
    std::string noise;
    std::string metric;
    double median = 0.0;
    double iqr = 0.0;
};

/// Columns: method,N,dims,noise,metric,median,iqr
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(std::istream& in);

std::vector<CsvRow> summary_rows(const std::vector<CellResult>& results, const std::vector<Method>& methods);

/// One row per (cell, method, replication) with the raw metrics and status.
/// Timings are left out so the file is reproducible.
void write_replications_csv(std::ostream& out, const std::vector<CellResult>& results,
                            const std::vector<Method>& methods);

/// Aligned text table, one block per cell and one row per method. With
/// `hundredths` the values are printed in 0.01 units.
std::string format_table(const std::vector<CellResult>& results, const std::vector<Method>& methods,
                         bool hundredths = false);

/// Two-column metric/value table for a single evaluation.
std::string format_report(const MetricsReport& report);

/// 8-bit binary PGM of a 2-D slice of `values` (length V). The slice is taken
/// at index `slice` of the last axis for 3-D grids; 1-D and 2-D grids are
/// written whole. Returns the (min, max) used for normalization.
std::pair<double, double> write_slice_pgm(const std::filesystem::path& file, const Vector& values,
                                          const VoxelGrid& grid, int slice);

}  // namespace irrnn::cli
