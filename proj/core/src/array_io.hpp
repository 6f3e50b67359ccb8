#pragma once

// Manifest + flat little-endian array helpers shared by the dataset, network
// and fit-result serializers. Internal to the core library.

#include "irrnn/grid.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace irrnn::detail {

inline constexpr const char* kManifestName = "manifest";

void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest);
nlohmann::json read_manifest(const std::filesystem::path& dir);

// Typed manifest lookups that raise FormatError("<key>", ...) on absence or bad type.
std::int64_t require_int(const nlohmann::json& m, const std::string& key, std::int64_t min_value);
std::string require_string(const nlohmann::json& m, const std::string& key);
std::vector<int> require_int_list(const nlohmann::json& m, const std::string& key);
void require_encoding(const nlohmann::json& m);  // byte_order + element types
nlohmann::json encoding_fields();

void write_f64(const std::filesystem::path& file, const double* data, std::size_t count);
std::vector<double> read_f64(const std::filesystem::path& file, std::size_t expected,
                             const std::string& field);

void write_u8(const std::filesystem::path& file, const std::uint8_t* data, std::size_t count);
std::vector<std::uint8_t> read_u8(const std::filesystem::path& file, std::size_t expected,
                                  const std::string& field);

// Matrices are stored row-major on disk regardless of in-memory layout.
void write_matrix(const std::filesystem::path& file, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& file, Index rows, Index cols,
                   const std::string& field);
void write_mask(const std::filesystem::path& file, const Mask& m);
Mask read_mask(const std::filesystem::path& file, Index rows, Index cols, const std::string& field);

}  // namespace irrnn::detail
