#include "surgplan/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <zlib.h>

#include "surgplan/error.hpp"

namespace surgplan {

std::string_view scalar_kind_name(ScalarKind kind) noexcept {
  switch (kind) {
    case ScalarKind::UInt8: return "uint8";
    case ScalarKind::Int16: return "int16";
    case ScalarKind::UInt16: return "uint16";
    case ScalarKind::Float32: return "float";
  }
  return "uint8";
}

std::size_t scalar_size(ScalarKind kind) noexcept {
  switch (kind) {
    case ScalarKind::UInt8: return 1;
    case ScalarKind::Int16:
    case ScalarKind::UInt16: return 2;
    case ScalarKind::Float32: return 4;
  }
  return 1;
}

void validate_header(const VolumeHeader& header) {
  for (std::size_t n : header.sizes) {
    if (n < 1) throw Error(ErrorCode::MalformedHeader, "sizes must be >= 1");
  }
  if (!header.directions.allFinite() || !header.origin.allFinite()) {
    throw Error(ErrorCode::MalformedHeader, "non-finite geometry");
  }
  const double det = header.directions.determinant();
  const double scale = header.directions.colwise().norm().prod();
  if (!(scale > 0.0) || std::abs(det) <= 1e-12 * scale) {
    throw Error(ErrorCode::MalformedHeader, "space directions are not invertible");
  }
}

// ---------------------------------------------------------------------------
// IndexWorldMap

IndexWorldMap::IndexWorldMap(const Eigen::Matrix3d& directions, const Eigen::Vector3d& origin) {
  forward_.setIdentity();
  forward_.topLeftCorner<3, 3>() = directions;
  forward_.topRightCorner<3, 1>() = origin;
  const Eigen::Matrix3d inv = directions.inverse();
  inverse_.setIdentity();
  inverse_.topLeftCorner<3, 3>() = inv;
  inverse_.topRightCorner<3, 1>() = -inv * origin;
}

Eigen::Vector3d IndexWorldMap::map(const Eigen::Vector3d& p, MapDirection direction) const {
  const Eigen::Matrix4d& m = direction == MapDirection::IndexToWorld ? forward_ : inverse_;
  return m.topLeftCorner<3, 3>() * p + m.topRightCorner<3, 1>();
}

// ---------------------------------------------------------------------------
// Volume

namespace {

template <typename T>
ScalarKind kind_of();
template <>
ScalarKind kind_of<std::uint8_t>() { return ScalarKind::UInt8; }
template <>
ScalarKind kind_of<std::int16_t>() { return ScalarKind::Int16; }
template <>
ScalarKind kind_of<std::uint16_t>() { return ScalarKind::UInt16; }
template <>
ScalarKind kind_of<float>() { return ScalarKind::Float32; }

constexpr double kIndexSlack = 1e-9;

// Clamps a continuous index into [0, n-1]; nullopt when outside beyond slack.
inline bool inside_axis(double x, std::size_t n) {
  return x >= -kIndexSlack && x <= static_cast<double>(n - 1) + kIndexSlack;
}

}  // namespace

Volume::Volume(VolumeHeader header, VoxelData voxels)
    : header_(std::move(header)), voxels_(std::move(voxels)) {
  validate_header(header_);
  std::visit(
      [&](const auto& data) {
        using T = typename std::decay_t<decltype(data)>::value_type;
        if (kind_of<T>() != header_.kind) {
          throw Error(ErrorCode::UnsupportedType, "voxel storage does not match header type");
        }
        if (data.size() != header_.voxel_count()) {
          throw Error(ErrorCode::SizeMismatch, "voxel count " + std::to_string(data.size()) +
                                                   " != " +
                                                   std::to_string(header_.voxel_count()));
        }
        if constexpr (std::is_floating_point_v<T>) {
          for (T x : data) {
            if (!std::isfinite(x)) throw Error(ErrorCode::MalformedHeader, "non-finite voxel");
          }
        }
        const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
        range_ = {static_cast<double>(*mn), static_cast<double>(*mx)};
      },
      voxels_);
  map_ = IndexWorldMap(header_.directions, header_.origin);
}

double Volume::voxel_at(std::int64_t i, std::int64_t j, std::int64_t k) const {
  if (i < 0 || j < 0 || k < 0 || static_cast<std::size_t>(i) >= nx() ||
      static_cast<std::size_t>(j) >= ny() || static_cast<std::size_t>(k) >= nz()) {
    throw Error(ErrorCode::OutOfBounds, "voxel (" + std::to_string(i) + "," + std::to_string(j) +
                                            "," + std::to_string(k) + ")");
  }
  return value(linear_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                            static_cast<std::size_t>(k)));
}

double Volume::value(std::size_t linear) const noexcept {
  return std::visit([linear](const auto& data) { return static_cast<double>(data[linear]); },
                    voxels_);
}

double Volume::min_pitch() const noexcept {
  return header_.directions.colwise().norm().minCoeff();
}

std::optional<double> Volume::try_sample(const Eigen::Vector3d& world, SampleMode mode) const {
  return try_sample_index(map_.to_index(world), mode);
}

std::optional<double> Volume::try_sample_index(const Eigen::Vector3d& idx,
                                               SampleMode mode) const {
  const std::array<std::size_t, 3>& n = header_.sizes;
  for (int a = 0; a < 3; ++a) {
    if (!inside_axis(idx[a], n[a])) return std::nullopt;
  }
  std::array<double, 3> x{};
  for (int a = 0; a < 3; ++a) {
    x[a] = std::clamp(idx[a], 0.0, static_cast<double>(n[a] - 1));
  }
  if (mode == SampleMode::Nearest) {
    return value(linear_index(static_cast<std::size_t>(std::lround(x[0])),
                              static_cast<std::size_t>(std::lround(x[1])),
                              static_cast<std::size_t>(std::lround(x[2]))));
  }
  std::array<std::size_t, 3> lo{}, hi{};
  std::array<double, 3> f{};
  for (int a = 0; a < 3; ++a) {
    const double fl = std::floor(x[a]);
    lo[a] = static_cast<std::size_t>(fl);
    hi[a] = std::min(lo[a] + 1, n[a] - 1);
    f[a] = x[a] - fl;
  }
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) {
    return value(linear_index(i, j, k));
  };
  const double c00 = at(lo[0], lo[1], lo[2]) * (1 - f[0]) + at(hi[0], lo[1], lo[2]) * f[0];
  const double c10 = at(lo[0], hi[1], lo[2]) * (1 - f[0]) + at(hi[0], hi[1], lo[2]) * f[0];
  const double c01 = at(lo[0], lo[1], hi[2]) * (1 - f[0]) + at(hi[0], lo[1], hi[2]) * f[0];
  const double c11 = at(lo[0], hi[1], hi[2]) * (1 - f[0]) + at(hi[0], hi[1], hi[2]) * f[0];
  const double c0 = c00 * (1 - f[1]) + c10 * f[1];
  const double c1 = c01 * (1 - f[1]) + c11 * f[1];
  return c0 * (1 - f[2]) + c1 * f[2];
}

double sample(const Volume& v, const Eigen::Vector3d& world_point, SampleMode mode,
              double background) {
  return v.try_sample(world_point, mode).value_or(background);
}

std::vector<std::size_t> histogram(const Volume& v, std::size_t bins, double lo, double hi) {
  if (!(hi > lo)) throw Error(ErrorCode::BadRange, "histogram range requires hi > lo");
  if (bins < 1) throw Error(ErrorCode::BadParameter, "histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  const double scale = static_cast<double>(bins) / (hi - lo);
  std::visit(
      [&](const auto& data) {
        for (const auto raw : data) {
          const double x = static_cast<double>(raw);
          if (x < lo || x >= hi) continue;
          auto b = static_cast<std::size_t>((x - lo) * scale);
          counts[std::min(b, bins - 1)]++;
        }
      },
      v.voxels());
  return counts;
}

Volume make_volume(VolumeHeader header, std::span<const double> values) {
  auto cast_all = [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [](double x) { return static_cast<T>(x); });
    return VoxelData(std::move(out));
  };
  VoxelData data;
  switch (header.kind) {
    case ScalarKind::UInt8: data = cast_all(std::uint8_t{}); break;
    case ScalarKind::Int16: data = cast_all(std::int16_t{}); break;
    case ScalarKind::UInt16: data = cast_all(std::uint16_t{}); break;
    case ScalarKind::Float32: data = cast_all(float{}); break;
  }
  return Volume(std::move(header), std::move(data));
}

// ---------------------------------------------------------------------------
// gzip

namespace detail {

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> raw) {
  z_stream zs{};
  // windowBits 15 + 16 selects the gzip wrapper.
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) !=
      Z_OK) {
    throw Error(ErrorCode::IoError, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(raw.size())) + 32);
  zs.next_in = const_cast<Bytef*>(raw.data());
  zs.avail_in = static_cast<uInt>(raw.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::IoError, "gzip compression failed");
  out.resize(zs.total_out);
  return out;
}

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> compressed,
                                          std::size_t expected_size) {
  std::vector<std::uint8_t> out;
  out.reserve(expected_size);
  std::size_t offset = 0;
  std::array<std::uint8_t, 1 << 16> chunk{};
  // Concatenated gzip members are legal; keep inflating until input is exhausted.
  while (offset < compressed.size()) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw Error(ErrorCode::IoError, "inflateInit2 failed");
    zs.next_in = const_cast<Bytef*>(compressed.data() + offset);
    zs.avail_in = static_cast<uInt>(compressed.size() - offset);
    int rc = Z_OK;
    do {
      zs.next_out = chunk.data();
      zs.avail_out = static_cast<uInt>(chunk.size());
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw Error(ErrorCode::SizeMismatch, "corrupt or truncated gzip payload");
      }
      out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
      if (out.size() > expected_size) {
        inflateEnd(&zs);
        throw Error(ErrorCode::SizeMismatch, "gzip payload larger than expected");
      }
    } while (rc != Z_STREAM_END);
    offset += zs.total_in;
    inflateEnd(&zs);
  }
  if (out.size() != expected_size) {
    throw Error(ErrorCode::SizeMismatch, "decompressed " + std::to_string(out.size()) +
                                             " bytes, expected " + std::to_string(expected_size));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// NRRD

namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double to_double(const std::string& s, std::string_view field) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, "bad number '" + s + "' in " + std::string(field));
  }
}

// Parses "(x,y,z)" groups.
std::vector<Eigen::Vector3d> parse_vectors(const std::string& value, std::string_view field) {
  std::vector<Eigen::Vector3d> out;
  std::size_t pos = 0;
  while (true) {
    pos = value.find_first_not_of(" \t", pos);
    if (pos == std::string::npos) break;
    if (value[pos] != '(') {
      throw Error(ErrorCode::MalformedHeader,
                  "expected '(' in " + std::string(field) + ": " + value);
    }
    const auto close = value.find(')', pos);
    if (close == std::string::npos) {
      throw Error(ErrorCode::MalformedHeader, "unterminated vector in " + std::string(field));
    }
    std::string inner = value.substr(pos + 1, close - pos - 1);
    std::replace(inner.begin(), inner.end(), ',', ' ');
    const auto parts = split_ws(inner);
    if (parts.size() != 3) {
      throw Error(ErrorCode::MalformedHeader, std::string(field) + " vectors must have 3 entries");
    }
    out.emplace_back(to_double(parts[0], field), to_double(parts[1], field),
                     to_double(parts[2], field));
    pos = close + 1;
  }
  return out;
}

ScalarKind parse_type(const std::string& t) {
  static const std::pair<const char*, ScalarKind> names[] = {
      {"uchar", ScalarKind::UInt8},
      {"unsigned char", ScalarKind::UInt8},
      {"uint8", ScalarKind::UInt8},
      {"uint8_t", ScalarKind::UInt8},
      {"short", ScalarKind::Int16},
      {"short int", ScalarKind::Int16},
      {"signed short", ScalarKind::Int16},
      {"signed short int", ScalarKind::Int16},
      {"int16", ScalarKind::Int16},
      {"int16_t", ScalarKind::Int16},
      {"ushort", ScalarKind::UInt16},
      {"unsigned short", ScalarKind::UInt16},
      {"unsigned short int", ScalarKind::UInt16},
      {"uint16", ScalarKind::UInt16},
      {"uint16_t", ScalarKind::UInt16},
      {"float", ScalarKind::Float32},
  };
  for (const auto& [name, kind] : names) {
    if (t == name) return kind;
  }
  throw Error(ErrorCode::UnsupportedType, "type '" + t + "'");
}

template <typename T>
std::vector<T> decode_payload(std::span<const std::uint8_t> bytes, bool swap) {
  std::vector<T> out(bytes.size() / sizeof(T));
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
  if (swap && sizeof(T) > 1) {
    auto* raw = reinterpret_cast<std::uint8_t*>(out.data());
    for (std::size_t n = 0; n < out.size(); ++n) {
      std::reverse(raw + n * sizeof(T), raw + (n + 1) * sizeof(T));
    }
  }
  return out;
}

bool native_little() { return std::endian::native == std::endian::little; }

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_vector(const Eigen::Vector3d& v) {
  return "(" + fmt17(v[0]) + "," + fmt17(v[1]) + "," + fmt17(v[2]) + ")";
}

}  // namespace

Volume parse_nrrd(std::string_view bytes) {
  return parse_nrrd(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

Volume parse_nrrd(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (text.size() < 8 || text.substr(0, 7) != "NRRD000" || text[7] < '1' || text[7] > '5') {
    throw Error(ErrorCode::BadMagic, "input does not start with NRRD0001..NRRD0005");
  }

  VolumeHeader header;
  std::optional<int> dimension;
  std::optional<std::array<std::size_t, 3>> sizes;
  std::optional<ScalarKind> kind;
  std::optional<Encoding> encoding;
  std::optional<Eigen::Matrix3d> directions;
  std::optional<Eigen::Vector3d> spacings;
  std::optional<double> vmin, vmax;

  std::size_t pos = text.find('\n');
  if (pos == std::string_view::npos) throw Error(ErrorCode::MalformedHeader, "no header lines");
  ++pos;
  bool terminated = false;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = std::min(eol + 1, text.size());
    if (line.empty()) {
      terminated = true;
      break;
    }
    if (line.front() == '#') continue;

    const auto kv = line.find(":=");
    const auto colon = line.find(": ");
    if (kv != std::string_view::npos && (colon == std::string_view::npos || kv < colon)) {
      header.extra_lines.emplace_back(line);
      continue;
    }
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::MalformedHeader, "unparseable header line: " + std::string(line));
    }
    const std::string field(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 2));

    if (field == "dimension") {
      dimension = static_cast<int>(to_double(value, field));
    } else if (field == "sizes") {
      const auto parts = split_ws(value);
      if (parts.size() != 3) {
        throw Error(ErrorCode::UnsupportedDimension, "sizes has " +
                                                         std::to_string(parts.size()) + " entries");
      }
      std::array<std::size_t, 3> s{};
      for (int a = 0; a < 3; ++a) {
        const double d = to_double(parts[a], field);
        if (d < 1 || d != std::floor(d)) throw Error(ErrorCode::MalformedHeader, "bad size");
        s[a] = static_cast<std::size_t>(d);
      }
      sizes = s;
    } else if (field == "type") {
      kind = parse_type(value);
    } else if (field == "encoding") {
      if (value == "raw") {
        encoding = Encoding::Raw;
      } else if (value == "gzip" || value == "gz") {
        encoding = Encoding::Gzip;
      } else {
        throw Error(ErrorCode::UnsupportedEncoding, "encoding '" + value + "'");
      }
    } else if (field == "endian") {
      if (value == "little") {
        header.endian = Endian::Little;
      } else if (value == "big") {
        header.endian = Endian::Big;
      } else {
        throw Error(ErrorCode::MalformedHeader, "endian '" + value + "'");
      }
    } else if (field == "space directions") {
      const auto vs = parse_vectors(value, field);
      if (vs.size() != 3) throw Error(ErrorCode::UnsupportedDimension, "need 3 space directions");
      Eigen::Matrix3d d;
      for (int c = 0; c < 3; ++c) d.col(c) = vs[c];
      directions = d;
    } else if (field == "space origin") {
      const auto vs = parse_vectors(value, field);
      if (vs.size() != 1) throw Error(ErrorCode::MalformedHeader, "space origin needs one vector");
      header.origin = vs[0];
    } else if (field == "space") {
      header.space = value;
    } else if (field == "space dimension") {
      if (value != "3") throw Error(ErrorCode::UnsupportedDimension, "space dimension " + value);
    } else if (field == "spacings") {
      const auto parts = split_ws(value);
      if (parts.size() != 3) throw Error(ErrorCode::MalformedHeader, "spacings needs 3 entries");
      spacings = Eigen::Vector3d(to_double(parts[0], field), to_double(parts[1], field),
                                 to_double(parts[2], field));
    } else if (field == "min") {
      vmin = to_double(value, field);
    } else if (field == "max") {
      vmax = to_double(value, field);
    } else if (field == "data file" || field == "datafile") {
      throw Error(ErrorCode::UnsupportedEncoding, "detached data files are not supported");
    } else if (field == "line skip" || field == "lineskip" || field == "byte skip" ||
               field == "byteskip") {
      if (value != "0") throw Error(ErrorCode::UnsupportedEncoding, field + " " + value);
    } else {
      header.extra_lines.emplace_back(line);
    }
  }
  if (!terminated) throw Error(ErrorCode::MalformedHeader, "header is not terminated by a blank line");

  if (!dimension) throw Error(ErrorCode::MissingField, "dimension");
  if (*dimension != 3) {
    throw Error(ErrorCode::UnsupportedDimension, "dimension " + std::to_string(*dimension));
  }
  if (!sizes) throw Error(ErrorCode::MissingField, "sizes");
  if (!kind) throw Error(ErrorCode::MissingField, "type");
  if (!encoding) throw Error(ErrorCode::MissingField, "encoding");

  header.sizes = *sizes;
  header.kind = *kind;
  header.encoding = *encoding;
  if (directions) {
    header.directions = *directions;
  } else if (spacings) {
    header.directions = spacings->asDiagonal();
  }
  if (vmin && vmax) header.value_range_hint = std::array<double, 2>{*vmin, *vmax};
  validate_header(header);

  const std::size_t expected = header.voxel_count() * scalar_size(header.kind);
  const auto payload = bytes.subspan(pos);
  std::vector<std::uint8_t> inflated;
  std::span<const std::uint8_t> raw = payload;
  if (header.encoding == Encoding::Gzip) {
    inflated = detail::gzip_decompress(payload, expected);
    raw = inflated;
  } else if (payload.size() != expected) {
    throw Error(ErrorCode::SizeMismatch, "payload has " + std::to_string(payload.size()) +
                                             " bytes, expected " + std::to_string(expected));
  }

  const bool swap = (header.endian == Endian::Little) != native_little();
  VoxelData data;
  switch (header.kind) {
    case ScalarKind::UInt8: data = decode_payload<std::uint8_t>(raw, false); break;
    case ScalarKind::Int16: data = decode_payload<std::int16_t>(raw, swap); break;
    case ScalarKind::UInt16: data = decode_payload<std::uint16_t>(raw, swap); break;
    case ScalarKind::Float32: data = decode_payload<float>(raw, swap); break;
  }
  return Volume(std::move(header), std::move(data));
}

std::vector<std::uint8_t> write_nrrd(const Volume& v) {
  const VolumeHeader& h = v.header();
  std::string head = "NRRD0004\n";
  head += "type: " + std::string(scalar_kind_name(h.kind)) + "\n";
  head += "dimension: 3\n";
  if (h.space.empty()) {
    head += "space dimension: 3\n";
  } else {
    head += "space: " + h.space + "\n";
  }
  head += "sizes: " + std::to_string(h.sizes[0]) + " " + std::to_string(h.sizes[1]) + " " +
          std::to_string(h.sizes[2]) + "\n";
  head += "space directions: " + fmt_vector(h.directions.col(0)) + " " +
          fmt_vector(h.directions.col(1)) + " " + fmt_vector(h.directions.col(2)) + "\n";
  head += std::string("endian: ") + (h.endian == Endian::Little ? "little" : "big") + "\n";
  head += std::string("encoding: ") + (h.encoding == Encoding::Raw ? "raw" : "gzip") + "\n";
  head += "space origin: " + fmt_vector(h.origin) + "\n";
  if (h.value_range_hint) {
    head += "min: " + fmt17((*h.value_range_hint)[0]) + "\n";
    head += "max: " + fmt17((*h.value_range_hint)[1]) + "\n";
  }
  for (const auto& line : h.extra_lines) head += line + "\n";
  head += "\n";

  std::vector<std::uint8_t> payload = std::visit(
      [&](const auto& data) {
        using T = typename std::decay_t<decltype(data)>::value_type;
        std::vector<std::uint8_t> raw(data.size() * sizeof(T));
        std::memcpy(raw.data(), data.data(), raw.size());
        const bool swap = (h.endian == Endian::Little) != native_little();
        if (swap && sizeof(T) > 1) {
          for (std::size_t n = 0; n < data.size(); ++n) {
            std::reverse(raw.begin() + n * sizeof(T), raw.begin() + (n + 1) * sizeof(T));
          }
        }
        return raw;
      },
      v.voxels());
  if (h.encoding == Encoding::Gzip) payload = detail::gzip_compress(payload);

  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Volume read_nrrd_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_nrrd(bytes);
}

void write_nrrd_file(const Volume& v, const std::string& path) {
  const auto bytes = write_nrrd(v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace surgplan
