#include "array_io.hpp"

#include "irrnn/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace irrnn::detail {

namespace fs = std::filesystem;

namespace {

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        std::memcpy(&value, bytes, sizeof(T));
        return value;
    }
}

std::vector<char> slurp(const fs::path& file, const std::string& field) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw FormatError(field, "cannot open " + file.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& file, const void* data, std::size_t bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) {
        throw IoError("short write to " + file.string());
    }
}

}  // namespace

void write_manifest(const fs::path& dir, const nlohmann::json& manifest) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    std::ofstream out(dir / kManifestName, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + (dir / kManifestName).string());
    }
    out << manifest.dump(2) << '\n';
}

nlohmann::json read_manifest(const fs::path& dir) {
    std::ifstream in(dir / kManifestName);
    if (!in) {
        throw FormatError("manifest", "cannot open " + (dir / kManifestName).string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        auto m = nlohmann::json::parse(buf.str());
        if (!m.is_object()) {
            throw FormatError("manifest", "top level is not an object");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest", std::string("parse error: ") + e.what());
    }
}

std::int64_t require_int(const nlohmann::json& m, const std::string& key, std::int64_t min_value) {
    auto it = m.find(key);
    if (it == m.end() || !it->is_number_integer()) {
        throw FormatError(key, "missing or not an integer");
    }
    auto v = it->get<std::int64_t>();
    if (v < min_value) {
        throw FormatError(key, "value " + std::to_string(v) + " below " + std::to_string(min_value));
    }
    return v;
}

std::string require_string(const nlohmann::json& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end() || !it->is_string()) {
        throw FormatError(key, "missing or not a string");
    }
    return it->get<std::string>();
}

std::vector<int> require_int_list(const nlohmann::json& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end() || !it->is_array()) {
        throw FormatError(key, "missing or not an array");
    }
    std::vector<int> out;
    for (const auto& e : *it) {
        if (!e.is_number_integer()) {
            throw FormatError(key, "non-integer element");
        }
        out.push_back(e.get<int>());
    }
    return out;
}

nlohmann::json encoding_fields() {
    return {{"byte_order", "little"}, {"float_type", "f64"}, {"mask_type", "u8"}};
}

void require_encoding(const nlohmann::json& m) {
    if (require_string(m, "byte_order") != "little") {
        throw FormatError("byte_order", "only little-endian payloads are supported");
    }
    if (require_string(m, "float_type") != "f64") {
        throw FormatError("float_type", "expected f64");
    }
}

void write_f64(const fs::path& file, const double* data, std::size_t count) {
    std::vector<double> buf(count);
    for (std::size_t i = 0; i < count; ++i) {
        buf[i] = to_little(data[i]);
    }
    dump(file, buf.data(), count * sizeof(double));
}

std::vector<double> read_f64(const fs::path& file, std::size_t expected, const std::string& field) {
    auto bytes = slurp(file, field);
    if (bytes.size() != expected * sizeof(double)) {
        throw FormatError(field, "payload has " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                                     std::to_string(expected * sizeof(double)));
    }
    std::vector<double> out(expected);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    for (std::size_t i = 0; i < expected; ++i) {
        out[i] = to_little(out[i]);
        if (!std::isfinite(out[i])) {
            throw FormatError(field, "non-finite value at element " + std::to_string(i));
        }
    }
    return out;
}

void write_u8(const fs::path& file, const std::uint8_t* data, std::size_t count) {
    dump(file, data, count);
}

std::vector<std::uint8_t> read_u8(const fs::path& file, std::size_t expected, const std::string& field) {
    auto bytes = slurp(file, field);
    if (bytes.size() != expected) {
        throw FormatError(field, "payload has " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                                     std::to_string(expected));
    }
    std::vector<std::uint8_t> out(expected);
    std::memcpy(out.data(), bytes.data(), expected);
    for (std::size_t i = 0; i < expected; ++i) {
        if (out[i] > 1) {
            throw FormatError(field, "mask element " + std::to_string(i) + " is not 0/1");
        }
    }
    return out;
}

void write_matrix(const fs::path& file, const Matrix& m) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    write_f64(file, rm.data(), static_cast<std::size_t>(rm.size()));
}

Matrix read_matrix(const fs::path& file, Index rows, Index cols, const std::string& field) {
    auto flat = read_f64(file, static_cast<std::size_t>(rows * cols), field);
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), rows,
                                                                                                cols);
}

void write_mask(const fs::path& file, const Mask& m) {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    write_u8(file, rm.data(), static_cast<std::size_t>(rm.size()));
}

Mask read_mask(const fs::path& file, Index rows, Index cols, const std::string& field) {
    auto flat = read_u8(file, static_cast<std::size_t>(rows * cols), field);
    return Eigen::Map<Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(),
                                                                                                     rows, cols);
}

}  // namespace irrnn::detail
