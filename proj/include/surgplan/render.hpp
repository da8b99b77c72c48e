#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "surgplan/image.hpp"
#include "surgplan/volume.hpp"

namespace surgplan {

// Visible scalar range [lo, hi]; hi > lo.
class ValueWindow {
 public:
  ValueWindow(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  bool contains(double v) const noexcept { return v >= lo_ && v <= hi_; }

  bool operator==(const ValueWindow&) const = default;

 private:
  double lo_;
  double hi_;
};

// clamp((v - lo) / (hi - lo), 0, 1)
double apply_window(double v, const ValueWindow& w) noexcept;

using Rgba = std::array<double, 4>;

// Piecewise-linear scalar -> RGBA map over normalized positions, clamped at the ends.
class TransferFunction {
 public:
  struct ControlPoint {
    double position;
    Rgba color;
    bool operator==(const ControlPoint&) const = default;
  };

  explicit TransferFunction(std::vector<ControlPoint> points);

  // Grayscale ramp with opacity ramp 0 -> 1.
  static TransferFunction grayscale();

  Rgba evaluate(double x) const noexcept;
  const std::vector<ControlPoint>& points() const noexcept { return points_; }

 private:
  std::vector<ControlPoint> points_;
};

std::array<std::uint8_t, 4> to_rgba8(const Rgba& c) noexcept;

enum class Projection { Orthographic, Perspective };

struct Camera {
  Projection projection = Projection::Orthographic;
  Eigen::Vector3d eye{0, 0, -1};
  Eigen::Vector3d look_at{0, 0, 0};
  Eigen::Vector3d up{0, -1, 0};
  std::size_t width = 1;
  std::size_t height = 1;
  double ortho_width = 1.0;  // mm, orthographic only
  double fov_y = 0.8;        // rad, perspective only

  void validate() const;

  struct Ray {
    Eigen::Vector3d origin;
    Eigen::Vector3d direction;  // unit
  };
  // Ray through the center of pixel (x, y); y grows downwards.
  Ray ray(std::size_t x, std::size_t y) const;
};

struct Aabb {
  Eigen::Vector3d min;
  Eigen::Vector3d max;
};

struct SectionPlane {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;  // unit
};

struct ClipSet {
  std::optional<Aabb> cut_out_box;
  std::optional<SectionPlane> section_plane;

  void validate() const;
  bool empty() const noexcept { return !cut_out_box && !section_plane; }
  // True when the sample is removed: strictly inside the box, or behind the plane.
  bool discards(const Eigen::Vector3d& world) const noexcept;
};

enum class SlicePlane { Axial, Coronal, Sagittal };

std::optional<SlicePlane> parse_slice_plane(std::string_view name);
std::string_view slice_plane_name(SlicePlane plane);

Image extract_slice(const Volume& v, SlicePlane plane, std::int64_t index, const ValueWindow& w);

struct ObliqueSliceOptions {
  SampleMode mode = SampleMode::Trilinear;
  // Falls back to the window's lower bound.
  std::optional<double> background;
};

Image extract_oblique_slice(const Volume& v, const Eigen::Vector3d& point,
                            const Eigen::Vector3d& normal, double extent, std::size_t resolution,
                            const ValueWindow& w, const ObliqueSliceOptions& options = {});

// In-plane axes used by extract_oblique_slice for a given normal.
std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_axes(const Eigen::Vector3d& unit_normal);

struct MipOptions {
  SampleMode mode = SampleMode::Trilinear;
  // Step in mm; defaults to the volume's smallest voxel pitch.
  std::optional<double> step;
  // Worker threads over image rows; 0 picks the hardware concurrency.
  unsigned workers = 0;
};

// Per-pixel maximum of surviving samples before the transfer function.
// Pixels whose ray kept no sample hold std::nullopt.
struct MaxImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::optional<double>> values;

  bool operator==(const MaxImage&) const = default;
};

MaxImage mip_max(const Volume& v, const Camera& cam, const ValueWindow& w, const ClipSet& clips,
                 const MipOptions& options = {});

Image render_mip(const Volume& v, const Camera& cam, const ValueWindow& w,
                 const TransferFunction& tf, const ClipSet& clips,
                 const MipOptions& options = {});

// Maps a MaxImage through window and transfer function into RGBA8.
Image shade_mip(const MaxImage& max, const ValueWindow& w, const TransferFunction& tf);

// Orthographic camera looking along +z (axial), +y (coronal) or +x (sagittal)
// that covers the volume's world bounds with one pixel per voxel pitch.
Camera default_camera(const Volume& v, SlicePlane view);

}  // namespace surgplan
