#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dotmarg/phantom.hpp"
#include "dotmarg/transport.hpp"

namespace dotmarg::io {

using json = nlohmann::ordered_json;

// Photon record file, all fields little-endian:
//   char[4] "DMPR", u32 version (1), i32 source_index, u32 reserved,
//   u64 launched, u64 escaped, u64 expired, u64 record_count,
//   then per record: u64 launch_counter, i32 detector, u32 segment_count,
//   f64 time_of_flight, segment_count x (u32 voxel, f64 length_mm).
void write_records(const std::filesystem::path& path, const PhotonRecordSet& set);
PhotonRecordSet read_records(const std::filesystem::path& path);

// Raw little-endian array plus "<stem>.json" sidecar. `meta` is merged into the
// sidecar next to shape and value type.
void write_raw_f64(const std::filesystem::path& path, std::span<const double> values, const std::vector<std::size_t>& shape,
                   const json& meta = json::object());
void write_raw_u8(const std::filesystem::path& path, std::span<const std::uint8_t> values,
                  const std::vector<std::size_t>& shape, const json& meta = json::object());
std::vector<double> read_raw_f64(const std::filesystem::path& path);
std::vector<std::uint8_t> read_raw_u8(const std::filesystem::path& path);
json read_sidecar(const std::filesystem::path& raw_path);
std::filesystem::path sidecar_path(const std::filesystem::path& raw_path);

// Column-major matrix export with row/column maps in the sidecar.
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix, const json& meta = json::object());
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

// Scatters a masked vector back onto the full grid (zeros elsewhere).
std::vector<double> unmask(std::span<const double> values, std::span<const std::size_t> voxels, std::size_t voxel_count);

void write_volume(const std::filesystem::path& path, const VoxelPhantom& phantom, std::span<const double> volume,
                  const json& meta = json::object());

std::uint32_t file_crc32(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const json& value);
json read_json(const std::filesystem::path& path);

}  // namespace dotmarg::io
