#include "graphrec/persist.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "graphrec/error.hpp"
#include "graphrec/rng.hpp"

namespace graphrec {

static_assert(std::endian::native == std::endian::little, "array files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'R', 'A', 'R', 'R', 'A', 'Y', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_array(const std::filesystem::path& path, const Matrix& m, DType dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, dtype == DType::f32 ? 4 : 8);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  if (dtype == DType::f64) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  } else {
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    for (Eigen::Index k = 0; k < m.size(); ++k) buf[static_cast<std::size_t>(k)] = static_cast<float>(m.data()[k]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

Matrix read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing array file " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not an array file: " + path.string());
  auto width = get<std::uint32_t>(in);
  get<std::uint32_t>(in);
  auto rows = get<std::uint64_t>(in);
  auto cols = get<std::uint64_t>(in);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (width == 8) {
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  } else if (width == 4) {
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = buf[static_cast<std::size_t>(k)];
  } else {
    throw DataError("unsupported element width in " + path.string());
  }
  if (!in) throw DataError("truncated array file " + path.string());
  return m;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing file " + path.string());
  return nlohmann::json::parse(in);
}

std::string content_hash(const nlohmann::json& doc) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a(doc.dump());
  return s.str();
}

}  // namespace graphrec
