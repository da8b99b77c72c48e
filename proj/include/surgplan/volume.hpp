#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace surgplan {

enum class ScalarKind { UInt8, Int16, UInt16, Float32 };
enum class Encoding { Raw, Gzip };
enum class Endian { Little, Big };

std::string_view scalar_kind_name(ScalarKind kind) noexcept;
std::size_t scalar_size(ScalarKind kind) noexcept;

struct VolumeHeader {
  std::array<std::size_t, 3> sizes{1, 1, 1};
  ScalarKind kind = ScalarKind::UInt8;
  Encoding encoding = Encoding::Raw;
  Endian endian = Endian::Little;
  // Column c is the world step (mm) for one increment of index axis c.
  Eigen::Matrix3d directions = Eigen::Matrix3d::Identity();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  std::optional<std::array<double, 2>> value_range_hint;
  // Value of the "space" field, empty when the file only gave "space dimension".
  std::string space;
  // Header lines this parser does not interpret, kept verbatim for round trips.
  std::vector<std::string> extra_lines;

  std::size_t voxel_count() const noexcept { return sizes[0] * sizes[1] * sizes[2]; }

  bool operator==(const VolumeHeader&) const = default;
};

// Validates the invariants: sizes >= 1 and an invertible direction matrix.
void validate_header(const VolumeHeader& header);

using VoxelData = std::variant<std::vector<std::uint8_t>, std::vector<std::int16_t>,
                               std::vector<std::uint16_t>, std::vector<float>>;

enum class MapDirection { IndexToWorld, WorldToIndex };

// Affine index<->world mapping. Voxel centers sit at integer indices.
class IndexWorldMap {
 public:
  IndexWorldMap() = default;
  IndexWorldMap(const Eigen::Matrix3d& directions, const Eigen::Vector3d& origin);

  const Eigen::Matrix4d& forward() const noexcept { return forward_; }
  const Eigen::Matrix4d& inverse() const noexcept { return inverse_; }

  Eigen::Vector3d map(const Eigen::Vector3d& p, MapDirection direction) const;
  Eigen::Vector3d to_world(const Eigen::Vector3d& index) const {
    return map(index, MapDirection::IndexToWorld);
  }
  Eigen::Vector3d to_index(const Eigen::Vector3d& world) const {
    return map(world, MapDirection::WorldToIndex);
  }
  // Linear parts only (for direction vectors).
  Eigen::Matrix3d linear_to_index() const { return inverse_.topLeftCorner<3, 3>(); }
  Eigen::Matrix3d linear_to_world() const { return forward_.topLeftCorner<3, 3>(); }

 private:
  Eigen::Matrix4d forward_ = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d inverse_ = Eigen::Matrix4d::Identity();
};

inline Eigen::Vector3d map_point(const IndexWorldMap& m, const Eigen::Vector3d& p,
                                 MapDirection direction) {
  return m.map(p, direction);
}

enum class SampleMode { Nearest, Trilinear };

// Immutable scalar volume stored x-fastest: linear = i + nx * (j + ny * k).
class Volume {
 public:
  Volume(VolumeHeader header, VoxelData voxels);

  const VolumeHeader& header() const noexcept { return header_; }
  const VoxelData& voxels() const noexcept { return voxels_; }
  const IndexWorldMap& index_world_map() const noexcept { return map_; }
  std::size_t nx() const noexcept { return header_.sizes[0]; }
  std::size_t ny() const noexcept { return header_.sizes[1]; }
  std::size_t nz() const noexcept { return header_.sizes[2]; }
  std::size_t voxel_count() const noexcept { return header_.voxel_count(); }

  std::size_t linear_index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + nx() * (j + ny() * k);
  }

  // Throws OutOfBounds.
  double voxel_at(std::int64_t i, std::int64_t j, std::int64_t k) const;
  // Unchecked access by linear index.
  double value(std::size_t linear) const noexcept;

  // Smallest and largest stored scalar.
  std::array<double, 2> value_range() const noexcept { return range_; }
  // Smallest column norm of the direction matrix (mm).
  double min_pitch() const noexcept;

  // Returns std::nullopt when the continuous index is outside [0, n-1] on any axis.
  std::optional<double> try_sample(const Eigen::Vector3d& world, SampleMode mode) const;
  std::optional<double> try_sample_index(const Eigen::Vector3d& index, SampleMode mode) const;

  bool operator==(const Volume& other) const {
    return header_ == other.header_ && voxels_ == other.voxels_;
  }

 private:
  VolumeHeader header_;
  VoxelData voxels_;
  IndexWorldMap map_;
  std::array<double, 2> range_{0.0, 0.0};
};

double sample(const Volume& v, const Eigen::Vector3d& world_point, SampleMode mode,
              double background);

inline double voxel_at(const Volume& v, std::int64_t i, std::int64_t j, std::int64_t k) {
  return v.voxel_at(i, j, k);
}

// Bin b covers [lo + b*w, lo + (b+1)*w), w = (hi - lo) / bins. Throws BadRange.
std::vector<std::size_t> histogram(const Volume& v, std::size_t bins, double lo, double hi);

Volume parse_nrrd(std::span<const std::uint8_t> bytes);
Volume parse_nrrd(std::string_view bytes);
// Honors header().encoding and header().endian so that parse(write(v)) == v.
std::vector<std::uint8_t> write_nrrd(const Volume& v);

Volume read_nrrd_file(const std::string& path);
void write_nrrd_file(const Volume& v, const std::string& path);

// Builds a volume from doubles, casting to the header's scalar kind.
Volume make_volume(VolumeHeader header, std::span<const double> values);

namespace detail {
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> raw);
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> compressed,
                                          std::size_t expected_size);
}  // namespace detail

}  // namespace surgplan
