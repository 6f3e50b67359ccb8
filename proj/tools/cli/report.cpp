#include "cli/report.hpp"

#include "irrnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace irrnn::cli {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) {
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::string scaled(double x, bool hundredths) {
    if (!std::isfinite(x)) {
        return format_number(x);
    }
    char buf[32];
    if (hundredths) {
        std::snprintf(buf, sizeof buf, "%.0f", 100.0 * x);
    } else {
        std::snprintf(buf, sizeof buf, "%.4g", x);
    }
    return buf;
}

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
    out << "method,N,dims,noise,metric,median,iqr\n";
    for (const auto& r : rows) {
        out << r.method << ',' << r.subjects << ',' << r.dims << ',' << r.noise << ',' << r.metric << ','
            << format_number(r.median) << ',' << format_number(r.iqr) << '\n';
    }
}

std::vector<CsvRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "method,N,dims,noise,metric,median,iqr") {
        throw FormatError("csv", "missing or unexpected header");
    }
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto f = split(line, ',');
        if (f.size() != 7) {
            throw FormatError("csv", "expected 7 fields in '" + line + "'");
        }
        try {
            rows.push_back({f[0], std::stoi(f[1]), f[2], f[3], f[4], std::stod(f[5]), std::stod(f[6])});
        } catch (const std::logic_error&) {
            throw FormatError("csv", "bad number in '" + line + "'");
        }
    }
    return rows;
}

std::vector<CsvRow> summary_rows(const std::vector<CellResult>& results, const std::vector<Method>& methods) {
    std::vector<CsvRow> rows;
    for (const auto& cell : results) {
        for (std::size_t k = 0; k < methods.size(); ++k) {
            for (auto field : MetricsReport::kFields) {
                const Summary& s = cell.summaries[k].get(field);
                rows.push_back({std::string(to_string(methods[k])), cell.cell.subjects, dims_label(cell.cell.dims),
                                std::string(to_string(cell.cell.noise)), std::string(field), s.median, s.iqr});
            }
        }
    }
    return rows;
}

void write_replications_csv(std::ostream& out, const std::vector<CellResult>& results,
                            const std::vector<Method>& methods) {
    out << "method,N,dims,noise,rep,sim_seed,status";
    for (auto f : MetricsReport::kFields) {
        out << ',' << f;
    }
    out << '\n';
    for (const auto& cell : results) {
        for (const auto& rep : cell.reps) {
            for (std::size_t k = 0; k < methods.size(); ++k) {
                const auto& o = rep.outcomes[k];
                out << to_string(methods[k]) << ',' << cell.cell.subjects << ',' << dims_label(cell.cell.dims) << ','
                    << to_string(cell.cell.noise) << ',' << rep.index << ',' << rep.sim_seed << ','
                    << (o.ok() ? "ok" : "failed");
                for (auto f : MetricsReport::kFields) {
                    out << ',' << format_number(o.metrics.get(f));
                }
                out << '\n';
            }
        }
    }
}

std::string format_table(const std::vector<CellResult>& results, const std::vector<Method>& methods,
                         bool hundredths) {
    std::ostringstream out;
    constexpr int kMethodWidth = 8;
    constexpr int kColumnWidth = 20;
    for (const auto& cell : results) {
        out << "N=" << cell.cell.subjects << "  dims=" << dims_label(cell.cell.dims)
            << "  noise=" << to_string(cell.cell.noise);
        if (!cell.complete()) {
            out << "  [incomplete]";
        }
        out << '\n';
        out << std::left << std::setw(kMethodWidth) << "method";
        for (auto f : MetricsReport::kFields) {
            out << std::right << std::setw(kColumnWidth) << f;
        }
        out << std::right << std::setw(8) << "reps" << '\n';
        for (std::size_t k = 0; k < methods.size(); ++k) {
            out << std::left << std::setw(kMethodWidth) << to_string(methods[k]);
            for (auto f : MetricsReport::kFields) {
                const Summary& s = cell.summaries[k].get(f);
                const std::string v = scaled(s.median, hundredths) + " (" + scaled(s.iqr, hundredths) + ")";
                out << std::right << std::setw(kColumnWidth) << v;
            }
            out << std::right << std::setw(8)
                << (std::to_string(cell.succeeded[k]) + "/" + std::to_string(cell.reps.size())) << '\n';
        }
        out << '\n';
    }
    return out.str();
}

std::string format_report(const MetricsReport& report) {
    std::ostringstream out;
    for (auto f : MetricsReport::kFields) {
        out << std::left << std::setw(12) << f << ' ' << format_number(report.get(f)) << '\n';
    }
    return out.str();
}

std::pair<double, double> write_slice_pgm(const std::filesystem::path& file, const Vector& values,
                                          const VoxelGrid& grid, int slice) {
    if (values.size() != grid.size()) {
        throw InvalidArgument("slice values do not match the grid");
    }
    const auto& dims = grid.dims();
    int rows = 1;
    int cols = dims[0];
    int depth = 1;
    if (dims.size() >= 2) {
        rows = dims[0];
        cols = dims[1];
    }
    if (dims.size() == 3) {
        depth = dims[2];
    }
    if (slice < 0 || slice >= depth) {
        throw InvalidArgument("slice index out of range");
    }
    std::vector<double> plane(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const Index v = (static_cast<Index>(r) * cols + c) * depth + slice;
            plane[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] =
                values(v);
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(plane.begin(), plane.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::string pixels(plane.size(), '\0');
    for (std::size_t i = 0; i < plane.size(); ++i) {
        const double t = hi > lo ? (plane[i] - lo) / (hi - lo) : 0.0;
        pixels[i] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t)));
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    out << "P5\n" << cols << ' ' << rows << "\n255\n";
    out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    if (!out) {
        throw IoError("short write to " + file.string());
    }
    return {lo, hi};
}

}  // namespace irrnn::cli
