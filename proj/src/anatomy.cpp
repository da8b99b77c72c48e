#include "surgplan/anatomy.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "surgplan/error.hpp"
#include "surgplan/geometry.hpp"

namespace surgplan {

void SimilarityTransform::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::BadTransform, "scale must be positive");
  }
  if (std::abs(rotation.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadTransform, "rotation quaternion must be unit length");
  }
  if (!translation.allFinite()) throw Error(ErrorCode::BadTransform, "non-finite translation");
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& other) const {
  SimilarityTransform out;
  out.rotation = rotation * other.rotation;
  out.scale = scale * other.scale;
  out.translation = apply(other.translation);
  return out;
}

// ---------------------------------------------------------------------------
// OBJ

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto b = line.find_first_not_of(" \t", pos);
    if (b == std::string_view::npos) break;
    auto e = line.find_first_of(" \t", b);
    if (e == std::string_view::npos) e = line.size();
    out.push_back(line.substr(b, e - b));
    pos = e;
  }
  return out;
}

double parse_number(std::string_view tok, std::size_t line_no) {
  double x = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(x)) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
  }
  return x;
}

long parse_index(std::string_view tok, std::size_t line_no) {
  long x = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line_no) + ": bad index '" + std::string(tok) + "'");
  }
  return x;
}

// OBJ indices are 1-based; negative values count back from the newest element.
std::size_t resolve(long idx, std::size_t count, std::size_t line_no, std::string_view what) {
  long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (idx == 0 || resolved < 0 || static_cast<std::size_t>(resolved) >= count) {
    throw Error(ErrorCode::BadFaceIndex, "line " + std::to_string(line_no) + ": " +
                                             std::string(what) + " index " + std::to_string(idx) +
                                             " out of range (" + std::to_string(count) + ")");
  }
  return static_cast<std::size_t>(resolved);
}

struct MeshBuilder {
  Mesh mesh;
  std::unordered_map<std::size_t, std::uint32_t> local;
  std::vector<std::optional<Eigen::Vector3d>> normals;

  std::uint32_t vertex(std::size_t global, const std::vector<Eigen::Vector3d>& vertices) {
    const auto [it, inserted] = local.try_emplace(global, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) {
      mesh.vertices.push_back(vertices[global]);
      normals.emplace_back();
    }
    return it->second;
  }

  Mesh finish() {
    bool complete = !normals.empty();
    for (const auto& n : normals) complete = complete && n.has_value();
    if (complete) {
      for (const auto& n : normals) mesh.normals.push_back(*n);
    }
    return std::move(mesh);
  }
};

}  // namespace

std::vector<Mesh> parse_obj(std::string_view text) {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3d> normals;
  std::vector<Mesh> meshes;
  MeshBuilder current;
  current.mesh.name = "default";

  auto flush = [&](std::string next_name) {
    if (!current.mesh.triangles.empty()) meshes.push_back(current.finish());
    current = MeshBuilder{};
    current.mesh.name = std::move(next_name);
  };

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    const std::string_view kind = tok[0];

    if (kind == "v" || kind == "vn") {
      if (tok.size() < 4) {
        throw Error(ErrorCode::MalformedRecord,
                    "line " + std::to_string(line_no) + ": " + std::string(kind) + " needs 3 coordinates");
      }
      const Eigen::Vector3d p(parse_number(tok[1], line_no), parse_number(tok[2], line_no),
                              parse_number(tok[3], line_no));
      (kind == "v" ? vertices : normals).push_back(p);
    } else if (kind == "f") {
      if (tok.size() < 4) {
        throw Error(ErrorCode::MalformedRecord,
                    "line " + std::to_string(line_no) + ": face needs at least 3 vertices");
      }
      std::vector<std::uint32_t> polygon;
      for (std::size_t n = 1; n < tok.size(); ++n) {
        const std::string_view ref = tok[n];
        const auto slash1 = ref.find('/');
        const long vi = parse_index(ref.substr(0, slash1), line_no);
        const std::size_t global = resolve(vi, vertices.size(), line_no, "vertex");
        const std::uint32_t local = current.vertex(global, vertices);
        if (slash1 != std::string_view::npos) {
          const auto slash2 = ref.find('/', slash1 + 1);
          if (slash2 != std::string_view::npos && slash2 + 1 < ref.size()) {
            const long ni = parse_index(ref.substr(slash2 + 1), line_no);
            current.normals[local] = normals[resolve(ni, normals.size(), line_no, "normal")];
          }
        }
        polygon.push_back(local);
      }
      for (std::size_t n = 1; n + 1 < polygon.size(); ++n) {
        const std::array<std::uint32_t, 3> tri{polygon[0], polygon[n], polygon[n + 1]};
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
        current.mesh.triangles.push_back(tri);
      }
    } else if (kind == "o" || kind == "g") {
      std::string name;
      for (std::size_t n = 1; n < tok.size(); ++n) {
        if (!name.empty()) name += ' ';
        name += tok[n];
      }
      if (current.mesh.triangles.empty() && current.mesh.vertices.empty()) {
        current.mesh.name = name;
      } else {
        flush(name);
      }
    }
    // vt, s, l, p, mtllib, usemtl and anything else carry no geometry we keep.
  }
  flush("");
  if (meshes.empty() && !vertices.empty()) {
    Mesh cloud;
    cloud.name = "default";
    cloud.vertices = vertices;
    meshes.push_back(std::move(cloud));
  }
  return meshes;
}

std::vector<Mesh> read_obj_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_obj(ss.str());
}

// ---------------------------------------------------------------------------
// Queries

MeshStats mesh_stats(const Mesh& m, const SimilarityTransform& transform) {
  if (m.vertices.empty()) throw Error(ErrorCode::EmptyMesh, "mesh '" + m.name + "' has no vertices");
  MeshStats s;
  s.min = s.max = transform.apply(m.vertices.front());
  for (const auto& v : m.vertices) {
    const Eigen::Vector3d p = transform.apply(v);
    s.min = s.min.cwiseMin(p);
    s.max = s.max.cwiseMax(p);
  }
  s.center = 0.5 * (s.min + s.max);
  s.triangle_count = m.triangles.size();
  return s;
}

std::optional<double> ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                   const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                   const Eigen::Vector3d& c) {
  const Eigen::Vector3d e1 = b - a;
  const Eigen::Vector3d e2 = c - a;
  const Eigen::Vector3d pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-12) return std::nullopt;
  const double inv = 1.0 / det;
  const Eigen::Vector3d tvec = origin - a;
  const double u = tvec.dot(pvec) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Eigen::Vector3d qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

std::optional<PickHit> ray_pick(std::span<const Structure> structures,
                                const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                const SimilarityTransform& world_from_patient) {
  const double len = dir.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::BadParameter, "pick direction has zero length");
  const Eigen::Vector3d d = dir / len;
  std::optional<PickHit> best;
  for (const Structure& s : structures) {
    if (!s.visible || !s.mesh) continue;
    const SimilarityTransform xf = world_from_patient.compose(s.transform);
    std::vector<Eigen::Vector3d> world(s.mesh->vertices.size());
    for (std::size_t n = 0; n < world.size(); ++n) world[n] = xf.apply(s.mesh->vertices[n]);
    for (const auto& tri : s.mesh->triangles) {
      const auto t = ray_triangle(origin, d, world[tri[0]], world[tri[1]], world[tri[2]]);
      if (t && (!best || *t < best->distance)) {
        best = PickHit{s.id, origin + *t * d, *t};
      }
    }
  }
  return best;
}

double point_mesh_distance(const Mesh& m, const SimilarityTransform& transform,
                           const Eigen::Vector3d& p) {
  if (m.triangles.empty()) throw Error(ErrorCode::EmptyMesh, "mesh '" + m.name + "' has no triangles");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& tri : m.triangles) {
    const Eigen::Vector3d a = transform.apply(m.vertices[tri[0]]);
    const Eigen::Vector3d b = transform.apply(m.vertices[tri[1]]);
    const Eigen::Vector3d c = transform.apply(m.vertices[tri[2]]);
    best = std::min(best, (p - closest_point_on_triangle(p, a, b, c)).norm());
  }
  return best;
}

}  // namespace surgplan
