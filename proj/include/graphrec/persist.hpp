#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "graphrec/sparse.hpp"

namespace graphrec {

enum class DType { f32, f64 };

// Array file layout (all little-endian):
//   bytes 0..7   magic "GRARRAY1"
//   uint32       element width in bytes (4 or 8)
//   uint32       reserved (0)
//   uint64       rows
//   uint64       cols
//   rows*cols    row-major reals
void write_array(const std::filesystem::path& path, const Matrix& m, DType dtype = DType::f32);
Matrix read_array(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

/// FNV-1a over the canonical JSON dump; stable across runs.
std::string content_hash(const nlohmann::json& doc);

}  // namespace graphrec
