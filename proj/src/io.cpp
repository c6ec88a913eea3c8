#include "dotmarg/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "dotmarg/errors.hpp"

namespace dotmarg::io {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ConfigError("unexpected end of binary file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  return in;
}

constexpr char kRecordMagic[4] = {'D', 'M', 'P', 'R'};

template <typename T>
void write_raw(const fs::path& path, std::span<const T> values, const std::vector<std::size_t>& shape,
               const char* type, const json& meta) {
  std::size_t expected = 1;
  for (auto s : shape) expected *= s;
  if (expected != values.size()) throw ContractError("raw array shape does not match its length");
  {
    auto out = open_out(path);
    for (const auto& v : values) put(out, v);
  }
  json sidecar = json::object();
  sidecar["file"] = path.filename().string();
  sidecar["shape"] = shape;
  sidecar["value_type"] = type;
  sidecar["byte_order"] = "little";
  for (auto it = meta.begin(); it != meta.end(); ++it) sidecar[it.key()] = it.value();
  write_json(sidecar_path(path), sidecar);
}

template <typename T>
std::vector<T> read_raw(const fs::path& path) {
  auto in = open_in(path);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % sizeof(T) != 0) throw ConfigError("raw file '" + path.string() + "' has a truncated element");
  std::vector<T> values(bytes / sizeof(T));
  for (auto& v : values) v = get<T>(in);
  return values;
}

}  // namespace

void write_records(const fs::path& path, const PhotonRecordSet& set) {
  auto out = open_out(path);
  out.write(kRecordMagic, 4);
  put<std::uint32_t>(out, 1);
  put<std::int32_t>(out, set.source_index);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, set.launched_count);
  put<std::uint64_t>(out, set.escape_count);
  put<std::uint64_t>(out, set.expired_count);
  put<std::uint64_t>(out, set.records.size());
  for (const auto& rec : set.records) {
    put<std::uint64_t>(out, rec.launch_counter);
    put<std::int32_t>(out, rec.detector_index);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.pathlengths.size()));
    put<double>(out, rec.time_of_flight);
    for (const auto& s : rec.pathlengths) {
      put<std::uint32_t>(out, s.voxel);
      put<double>(out, s.length);
    }
  }
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

PhotonRecordSet read_records(const fs::path& path) {
  auto in = open_in(path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kRecordMagic, 4) != 0) {
    throw ConfigError("'" + path.string() + "' is not a photon record file");
  }
  if (get<std::uint32_t>(in) != 1) throw ConfigError("unsupported photon record file version");
  PhotonRecordSet set;
  set.source_index = get<std::int32_t>(in);
  get<std::uint32_t>(in);
  set.launched_count = get<std::uint64_t>(in);
  set.escape_count = get<std::uint64_t>(in);
  set.expired_count = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  set.records.resize(count);
  for (auto& rec : set.records) {
    rec.launch_counter = get<std::uint64_t>(in);
    rec.detector_index = get<std::int32_t>(in);
    rec.pathlengths.resize(get<std::uint32_t>(in));
    rec.time_of_flight = get<double>(in);
    for (auto& s : rec.pathlengths) {
      s.voxel = get<std::uint32_t>(in);
      s.length = get<double>(in);
    }
  }
  return set;
}

fs::path sidecar_path(const fs::path& raw_path) {
  fs::path p = raw_path;
  p.replace_extension(".json");
  return p;
}

void write_raw_f64(const fs::path& path, std::span<const double> values, const std::vector<std::size_t>& shape,
                   const json& meta) {
  write_raw<double>(path, values, shape, "float64", meta);
}

void write_raw_u8(const fs::path& path, std::span<const std::uint8_t> values, const std::vector<std::size_t>& shape,
                  const json& meta) {
  write_raw<std::uint8_t>(path, values, shape, "uint8", meta);
}

std::vector<double> read_raw_f64(const fs::path& path) { return read_raw<double>(path); }
std::vector<std::uint8_t> read_raw_u8(const fs::path& path) { return read_raw<std::uint8_t>(path); }

json read_sidecar(const fs::path& raw_path) { return read_json(sidecar_path(raw_path)); }

void write_matrix(const fs::path& path, const Eigen::MatrixXd& matrix, const json& meta) {
  json m = meta;
  m["order"] = "column-major";
  write_raw_f64(path, std::span<const double>(matrix.data(), static_cast<std::size_t>(matrix.size())),
                {static_cast<std::size_t>(matrix.rows()), static_cast<std::size_t>(matrix.cols())}, m);
}

Eigen::MatrixXd read_matrix(const fs::path& path) {
  const auto meta = read_sidecar(path);
  const auto shape = meta.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw ConfigError("'" + path.string() + "' is not a matrix");
  const auto values = read_raw_f64(path);
  if (values.size() != shape[0] * shape[1]) throw ConfigError("matrix file length does not match its sidecar");
  return Eigen::Map<const Eigen::MatrixXd>(values.data(), static_cast<Eigen::Index>(shape[0]),
                                           static_cast<Eigen::Index>(shape[1]));
}

std::vector<double> unmask(std::span<const double> values, std::span<const std::size_t> voxels,
                           std::size_t voxel_count) {
  if (values.size() != voxels.size()) throw ContractError("masked values do not match the voxel list");
  std::vector<double> out(voxel_count, 0.0);
  for (std::size_t i = 0; i < voxels.size(); ++i) out.at(voxels[i]) = values[i];
  return out;
}

void write_volume(const fs::path& path, const VoxelPhantom& phantom, std::span<const double> volume, const json& meta) {
  json m = meta;
  m["voxel_size_mm"] = phantom.voxel_size;
  m["axis_order"] = "x-fastest";
  const auto& d = phantom.dims;
  write_raw_f64(path, volume,
                {static_cast<std::size_t>(d.nz), static_cast<std::size_t>(d.ny), static_cast<std::size_t>(d.nx)}, m);
}

std::uint32_t file_crc32(const fs::path& path) {
  auto in = open_in(path);
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const auto got = in.gcount();
    if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buffer.data()), static_cast<uInt>(got));
  }
  return static_cast<std::uint32_t>(crc);
}

void write_json(const fs::path& path, const json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
}

}  // namespace dotmarg::io
