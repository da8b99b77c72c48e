#include "surgplan/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "surgplan/error.hpp"

namespace surgplan {

ValueWindow::ValueWindow(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw Error(ErrorCode::BadWindow, "window requires finite hi > lo");
  }
}

double apply_window(double v, const ValueWindow& w) noexcept {
  return std::clamp((v - w.lo()) / (w.hi() - w.lo()), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

TransferFunction::TransferFunction(std::vector<ControlPoint> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw Error(ErrorCode::BadTransferFunction, "transfer function needs at least 2 points");
  }
  for (std::size_t n = 0; n < points_.size(); ++n) {
    if (!std::isfinite(points_[n].position)) {
      throw Error(ErrorCode::BadTransferFunction, "non-finite control point position");
    }
    if (n > 0 && !(points_[n].position > points_[n - 1].position)) {
      throw Error(ErrorCode::BadTransferFunction, "positions must be strictly increasing");
    }
    for (double c : points_[n].color) {
      if (!(c >= 0.0 && c <= 1.0)) {
        throw Error(ErrorCode::BadTransferFunction, "channels must lie in [0,1]");
      }
    }
  }
}

TransferFunction TransferFunction::grayscale() {
  return TransferFunction({{0.0, {0, 0, 0, 0}}, {1.0, {1, 1, 1, 1}}});
}

Rgba TransferFunction::evaluate(double x) const noexcept {
  if (x <= points_.front().position) return points_.front().color;
  if (x >= points_.back().position) return points_.back().color;
  // First point strictly greater than x; its predecessor is <= x.
  const auto upper = std::upper_bound(points_.begin(), points_.end(), x,
                                      [](double v, const ControlPoint& p) { return v < p.position; });
  const ControlPoint& a = *(upper - 1);
  const ControlPoint& b = *upper;
  const double t = (x - a.position) / (b.position - a.position);
  Rgba out{};
  for (int c = 0; c < 4; ++c) out[c] = a.color[c] + t * (b.color[c] - a.color[c]);
  return out;
}

std::array<std::uint8_t, 4> to_rgba8(const Rgba& c) noexcept {
  std::array<std::uint8_t, 4> out{};
  for (int n = 0; n < 4; ++n) {
    out[n] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c[n], 0.0, 1.0)));
  }
  return out;
}

// ---------------------------------------------------------------------------

void Camera::validate() const {
  if (!eye.allFinite() || !look_at.allFinite() || !up.allFinite()) {
    throw Error(ErrorCode::BadCamera, "non-finite camera vectors");
  }
  const Eigen::Vector3d f = look_at - eye;
  if (f.norm() <= 0.0) throw Error(ErrorCode::BadCamera, "eye equals look_at");
  if (up.norm() <= 0.0 || f.normalized().cross(up.normalized()).norm() < 1e-9) {
    throw Error(ErrorCode::BadCamera, "up is parallel to the view direction");
  }
  if (width < 1 || height < 1) throw Error(ErrorCode::BadCamera, "image must be at least 1x1");
  if (projection == Projection::Orthographic && !(ortho_width > 0.0)) {
    throw Error(ErrorCode::BadCamera, "ortho_width must be positive");
  }
  if (projection == Projection::Perspective && !(fov_y > 0.0 && fov_y < M_PI)) {
    throw Error(ErrorCode::BadCamera, "fov_y must lie in (0, pi)");
  }
}

Camera::Ray Camera::ray(std::size_t x, std::size_t y) const {
  const Eigen::Vector3d f = (look_at - eye).normalized();
  const Eigen::Vector3d r = f.cross(up).normalized();
  const Eigen::Vector3d u = r.cross(f);
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  const double sx = (static_cast<double>(x) + 0.5) / w - 0.5;
  const double sy = 0.5 - (static_cast<double>(y) + 0.5) / h;
  if (projection == Projection::Orthographic) {
    const double ortho_height = ortho_width * h / w;
    return {eye + (sx * ortho_width) * r + (sy * ortho_height) * u, f};
  }
  const double half = std::tan(0.5 * fov_y);
  const Eigen::Vector3d d = f + (2.0 * sx * half * w / h) * r + (2.0 * sy * half) * u;
  return {eye, d.normalized()};
}

void ClipSet::validate() const {
  if (cut_out_box) {
    for (int a = 0; a < 3; ++a) {
      if (!(cut_out_box->min[a] < cut_out_box->max[a])) {
        throw Error(ErrorCode::BadClip, "cut-out box needs min < max on every axis");
      }
    }
  }
  if (section_plane && std::abs(section_plane->normal.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadClip, "section plane normal must be unit length");
  }
}

bool ClipSet::discards(const Eigen::Vector3d& p) const noexcept {
  if (cut_out_box) {
    const Aabb& b = *cut_out_box;
    if (p.x() > b.min.x() && p.x() < b.max.x() && p.y() > b.min.y() && p.y() < b.max.y() &&
        p.z() > b.min.z() && p.z() < b.max.z()) {
      return true;
    }
  }
  if (section_plane && (p - section_plane->point).dot(section_plane->normal) < 0.0) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Slices

std::optional<SlicePlane> parse_slice_plane(std::string_view name) {
  if (name == "axial") return SlicePlane::Axial;
  if (name == "coronal") return SlicePlane::Coronal;
  if (name == "sagittal") return SlicePlane::Sagittal;
  return std::nullopt;
}

std::string_view slice_plane_name(SlicePlane plane) {
  switch (plane) {
    case SlicePlane::Axial: return "axial";
    case SlicePlane::Coronal: return "coronal";
    case SlicePlane::Sagittal: return "sagittal";
  }
  return "axial";
}

namespace {

inline std::uint8_t gray_level(double v, const ValueWindow& w) {
  return static_cast<std::uint8_t>(std::lround(255.0 * apply_window(v, w)));
}

inline void put_gray(Image& img, std::size_t x, std::size_t y, std::uint8_t g) {
  std::uint8_t* p = img.pixel(x, y);
  p[0] = p[1] = p[2] = g;
  p[3] = 255;
}

}  // namespace

Image extract_slice(const Volume& v, SlicePlane plane, std::int64_t index, const ValueWindow& w) {
  const std::size_t nx = v.nx(), ny = v.ny(), nz = v.nz();
  const std::size_t extent = plane == SlicePlane::Axial ? nz : plane == SlicePlane::Coronal ? ny : nx;
  if (index < 0 || static_cast<std::size_t>(index) >= extent) {
    throw Error(ErrorCode::IndexOutOfRange, std::string(slice_plane_name(plane)) + " index " +
                                                std::to_string(index) + " outside [0," +
                                                std::to_string(extent) + ")");
  }
  const auto s = static_cast<std::size_t>(index);
  return std::visit(
      [&](const auto& data) {
        Image img;
        switch (plane) {
          case SlicePlane::Axial:
            img = Image(nx, ny);
            for (std::size_t j = 0; j < ny; ++j)
              for (std::size_t i = 0; i < nx; ++i)
                put_gray(img, i, j, gray_level(data[v.linear_index(i, j, s)], w));
            break;
          case SlicePlane::Coronal:
            img = Image(nx, nz);
            for (std::size_t k = 0; k < nz; ++k)
              for (std::size_t i = 0; i < nx; ++i)
                put_gray(img, i, k, gray_level(data[v.linear_index(i, s, k)], w));
            break;
          case SlicePlane::Sagittal:
            img = Image(ny, nz);
            for (std::size_t k = 0; k < nz; ++k)
              for (std::size_t j = 0; j < ny; ++j)
                put_gray(img, j, k, gray_level(data[v.linear_index(s, j, k)], w));
            break;
        }
        return img;
      },
      v.voxels());
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_axes(const Eigen::Vector3d& n) {
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX();
  const bool along_x = (n - x).norm() < 1e-6 || (n + x).norm() < 1e-6;
  const Eigen::Vector3d seed = along_x ? Eigen::Vector3d::UnitY() : x;
  const Eigen::Vector3d e1 = (seed - seed.dot(n) * n).normalized();
  return {e1, n.cross(e1)};
}

Image extract_oblique_slice(const Volume& v, const Eigen::Vector3d& point,
                            const Eigen::Vector3d& normal, double extent, std::size_t resolution,
                            const ValueWindow& w, const ObliqueSliceOptions& options) {
  if (!normal.allFinite() || normal.norm() < 1e-12) {
    throw Error(ErrorCode::DegenerateNormal, "section normal has zero length");
  }
  if (!(extent > 0.0)) throw Error(ErrorCode::BadParameter, "extent must be positive");
  if (resolution < 1) throw Error(ErrorCode::BadParameter, "resolution must be >= 1");
  const Eigen::Vector3d n = normal.normalized();
  const auto [e1, e2] = plane_axes(n);
  const double background = options.background.value_or(w.lo());
  const double res = static_cast<double>(resolution);
  Image img(resolution, resolution);
  for (std::size_t y = 0; y < resolution; ++y) {
    const double b = ((static_cast<double>(y) + 0.5) / res - 0.5) * extent;
    for (std::size_t x = 0; x < resolution; ++x) {
      const double a = ((static_cast<double>(x) + 0.5) / res - 0.5) * extent;
      const Eigen::Vector3d p = point + a * e1 + b * e2;
      put_gray(img, x, y, gray_level(sample(v, p, options.mode, background), w));
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// MIP

namespace {

struct RayWork {
  // Ray in continuous index space; t is measured in world mm.
  Eigen::Vector3d origin_index;
  Eigen::Vector3d dir_index;
  Eigen::Vector3d origin_world;
  Eigen::Vector3d dir_world;
};

// Slab test against the voxel-extent box [-0.5, n-0.5]^3 in index space.
bool clip_ray(const RayWork& r, const std::array<std::size_t, 3>& n, double& t0, double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = -0.5;
    const double hi = static_cast<double>(n[a]) - 0.5;
    const double o = r.origin_index[a];
    const double d = r.dir_index[a];
    if (std::abs(d) < 1e-300) {
      if (o < lo || o > hi) return false;
      continue;
    }
    double ta = (lo - o) / d;
    double tb = (hi - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0;
}

// std::lround for x >= 0 without the libm call. Signed conversions compile to
// single instructions; unsigned ones do not.
inline std::int64_t round_half_up(double x) {
  auto i = static_cast<std::int64_t>(x);
  if (x - static_cast<double>(i) >= 0.5) ++i;
  return i;
}

template <typename T>
struct Marcher {
  const T* data;
  std::array<std::size_t, 3> n;
  std::int64_t sx, sy, sz;  // linear strides
  double lo, hi;
  SampleMode mode;
  const ClipSet* clips;
  double step;

  std::optional<double> march(const RayWork& r) const {
    const bool check_clips = clips && !clips->empty();
    if (mode == SampleMode::Nearest) {
      return check_clips ? march_impl<false, true>(r) : march_impl<false, false>(r);
    }
    return check_clips ? march_impl<true, true>(r) : march_impl<true, false>(r);
  }

  template <bool kTrilinear, bool kClips>
  std::optional<double> march_impl(const RayWork& r) const {
    double t0 = 0, t1 = 0;
    if (!clip_ray(r, n, t0, t1)) return std::nullopt;
    const double xclamp = static_cast<double>(n[0] - 1);
    const double yclamp = static_cast<double>(n[1] - 1);
    const double zclamp = static_cast<double>(n[2] - 1);
    const double xmax = xclamp + 1e-9, ymax = yclamp + 1e-9, zmax = zclamp + 1e-9;
    const auto nx = static_cast<std::int64_t>(n[0]), ny = static_cast<std::int64_t>(n[1]),
               nz = static_cast<std::int64_t>(n[2]);
    const double ox = r.origin_index[0], oy = r.origin_index[1], oz = r.origin_index[2];
    const double dxi = r.dir_index[0], dyi = r.dir_index[1], dzi = r.dir_index[2];
    // Sample indices whose coordinates lie strictly inside the node box on every
    // axis; only samples outside [k_in, k_out] need the exact bounds test.
    double k_in = 0.0, k_out = std::numeric_limits<double>::infinity();
    const double o3[3] = {ox, oy, oz}, d3[3] = {dxi, dyi, dzi}, m3[3] = {xclamp, yclamp, zclamp};
    for (int a = 0; a < 3; ++a) {
      if (d3[a] == 0.0) {
        if (o3[a] < -1e-9 || o3[a] > m3[a] + 1e-9) return std::nullopt;
        continue;
      }
      double ta = (0.0 - o3[a]) / d3[a], tb = (m3[a] - o3[a]) / d3[a];
      if (ta > tb) std::swap(ta, tb);
      k_in = std::max(k_in, std::ceil((ta - t0) / step - 0.5) + 1.0);
      k_out = std::min(k_out, std::floor((tb - t0) / step - 0.5) - 1.0);
    }
    bool found = false;
    double best = -std::numeric_limits<double>::infinity();
    double kd = 0.0;
    for (;; kd += 1.0) {
      const double t = t0 + (kd + 0.5) * step;
      if (t >= t1) break;
      double x = ox + t * dxi;
      double y = oy + t * dyi;
      double z = oz + t * dzi;
      if ((kd < k_in || kd > k_out) &&
          (x < -1e-9 || y < -1e-9 || z < -1e-9 || x > xmax || y > ymax || z > zmax)) {
        continue;
      }
      if constexpr (kClips) {
        if (clips->discards(r.origin_world + t * r.dir_world)) continue;
      }
      x = std::clamp(x, 0.0, xclamp);
      y = std::clamp(y, 0.0, yclamp);
      z = std::clamp(z, 0.0, zclamp);
      double v;
      if constexpr (!kTrilinear) {
        v = static_cast<double>(data[round_half_up(x) * sx + round_half_up(y) * sy + round_half_up(z) * sz]);
      } else {
        // Coordinates are clamped non-negative, so truncation is floor.
        const auto i = static_cast<std::int64_t>(x);
        const auto j = static_cast<std::int64_t>(y);
        const auto kk = static_cast<std::int64_t>(z);
        const double ax = x - static_cast<double>(i), ay = y - static_cast<double>(j),
                     az = z - static_cast<double>(kk);
        const std::int64_t dx = i + 1 < nx ? sx : 0;
        const std::int64_t dy = j + 1 < ny ? sy : 0;
        const std::int64_t dz = kk + 1 < nz ? sz : 0;
        const T* p = data + i * sx + j * sy + kk * sz;
        const double c00 = p[0] * (1 - ax) + p[dx] * ax;
        const double c10 = p[dy] * (1 - ax) + p[dy + dx] * ax;
        const double c01 = p[dz] * (1 - ax) + p[dz + dx] * ax;
        const double c11 = p[dz + dy] * (1 - ax) + p[dz + dy + dx] * ax;
        const double c0 = c00 * (1 - ay) + c10 * ay;
        const double c1 = c01 * (1 - ay) + c11 * ay;
        v = c0 * (1 - az) + c1 * az;
      }
      if (v < lo || v > hi) continue;
      if (!found || v > best) {
        best = v;
        found = true;
        if (best >= hi) break;  // nothing in the window can exceed hi
      }
    }
    if (!found) return std::nullopt;
    return best;
  }
};

}  // namespace

MaxImage mip_max(const Volume& v, const Camera& cam, const ValueWindow& w, const ClipSet& clips,
                 const MipOptions& options) {
  cam.validate();
  clips.validate();
  const double step = options.step.value_or(v.min_pitch());
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::BadStep, "step must be > 0");

  MaxImage out;
  out.width = cam.width;
  out.height = cam.height;
  out.values.assign(cam.width * cam.height, std::nullopt);

  const IndexWorldMap& map = v.index_world_map();
  const Eigen::Matrix3d to_index = map.linear_to_index();

  std::visit(
      [&](const auto& data) {
        using T = typename std::decay_t<decltype(data)>::value_type;
        Marcher<T> marcher{data.data(),
                           v.header().sizes,
                           1,
                           static_cast<std::int64_t>(v.nx()),
                           static_cast<std::int64_t>(v.nx() * v.ny()),
                           w.lo(),
                           w.hi(),
                           options.mode,
                           &clips,
                           step};
        // Rows are interleaved across workers so uneven ray lengths balance out.
        auto render_rows = [&](std::size_t first, std::size_t stride) {
          for (std::size_t y = first; y < cam.height; y += stride) {
            for (std::size_t x = 0; x < cam.width; ++x) {
              const Camera::Ray ray = cam.ray(x, y);
              const RayWork work{map.to_index(ray.origin), to_index * ray.direction, ray.origin,
                                 ray.direction};
              out.values[y * cam.width + x] = marcher.march(work);
            }
          }
        };
        unsigned workers = options.workers ? options.workers : std::thread::hardware_concurrency();
        workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cam.height)));
        if (workers == 1) {
          render_rows(0, 1);
          return;
        }
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned n = 0; n < workers; ++n) pool.emplace_back(render_rows, n, workers);
      },
      v.voxels());
  return out;
}

Image shade_mip(const MaxImage& max, const ValueWindow& w, const TransferFunction& tf) {
  Image img(max.width, max.height);
  const auto background = [&] {
    auto c = to_rgba8(tf.evaluate(0.0));
    c[3] = 0;
    return c;
  }();
  for (std::size_t n = 0; n < max.values.size(); ++n) {
    const auto c = max.values[n] ? to_rgba8(tf.evaluate(apply_window(*max.values[n], w)))
                                 : background;
    std::copy(c.begin(), c.end(), img.rgba.begin() + static_cast<std::ptrdiff_t>(n * 4));
  }
  return img;
}

Image render_mip(const Volume& v, const Camera& cam, const ValueWindow& w,
                 const TransferFunction& tf, const ClipSet& clips, const MipOptions& options) {
  return shade_mip(mip_max(v, cam, w, clips, options), w, tf);
}

Camera default_camera(const Volume& v, SlicePlane view) {
  Eigen::Vector3d forward, up;
  switch (view) {
    case SlicePlane::Axial:
      forward = Eigen::Vector3d::UnitZ();
      up = -Eigen::Vector3d::UnitY();
      break;
    case SlicePlane::Coronal:
      forward = -Eigen::Vector3d::UnitY();
      up = -Eigen::Vector3d::UnitZ();
      break;
    case SlicePlane::Sagittal:
      forward = Eigen::Vector3d::UnitX();
      up = -Eigen::Vector3d::UnitZ();
      break;
  }
  const Eigen::Vector3d right = forward.cross(up);
  const Eigen::Vector3d true_up = right.cross(forward);

  // World bounds of the voxel-extent box.
  const IndexWorldMap& map = v.index_world_map();
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int c = 0; c < 8; ++c) {
    const Eigen::Vector3d idx((c & 1) ? v.nx() - 0.5 : -0.5, (c & 2) ? v.ny() - 0.5 : -0.5,
                              (c & 4) ? v.nz() - 0.5 : -0.5);
    const Eigen::Vector3d p = map.to_world(idx);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector3d center = 0.5 * (lo + hi);
  const Eigen::Vector3d extent = hi - lo;
  const double pitch = v.min_pitch();
  const double span_r = std::abs(right.dot(extent));
  const double span_u = std::abs(true_up.dot(extent));
  const double depth = std::abs(forward.dot(extent));

  Camera cam;
  cam.projection = Projection::Orthographic;
  cam.look_at = center;
  cam.eye = center - (depth + 10.0 * pitch) * forward;
  cam.up = up;
  cam.width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(span_r / pitch)));
  cam.height = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(span_u / pitch)));
  cam.ortho_width = static_cast<double>(cam.width) * pitch;
  return cam;
}

}  // namespace surgplan
