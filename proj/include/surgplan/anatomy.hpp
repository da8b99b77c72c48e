#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "surgplan/render.hpp"

namespace surgplan {

struct Mesh {
  std::string name;
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  // Either empty or one normal per vertex.
  std::vector<Eigen::Vector3d> normals;

  bool operator==(const Mesh&) const = default;
};

// Rigid pose plus uniform scale: p -> translation + scale * rotation * p.
struct SimilarityTransform {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  void validate() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return translation + scale * (rotation * p);
  }
  // this ∘ other
  SimilarityTransform compose(const SimilarityTransform& other) const;

  bool operator==(const SimilarityTransform& o) const {
    return rotation.coeffs() == o.rotation.coeffs() && translation == o.translation &&
           scale == o.scale;
  }
};

// Anatomy structure: a named mesh with its own pose, visibility, and color.
struct Structure {
  std::string id;
  std::string name;
  std::shared_ptr<const Mesh> mesh;
  SimilarityTransform transform;
  bool visible = true;
  Rgba color{1.0, 1.0, 1.0, 1.0};
  // Where the mesh came from, when it was loaded from a file ("" = inline).
  std::string mesh_file;
};

// Splits on o/g records, triangulates polygons as fans, resolves negative indices.
std::vector<Mesh> parse_obj(std::string_view text);
std::vector<Mesh> read_obj_file(const std::string& path);

struct MeshStats {
  Eigen::Vector3d min;
  Eigen::Vector3d max;
  Eigen::Vector3d center;
  std::size_t triangle_count = 0;
};

MeshStats mesh_stats(const Mesh& m, const SimilarityTransform& transform = {});

struct PickHit {
  std::string structure_id;
  Eigen::Vector3d point;
  double distance;
};

// `world_from_patient` places every structure's own transform in the world.
std::optional<PickHit> ray_pick(std::span<const Structure> structures,
                                const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                const SimilarityTransform& world_from_patient = {});

// Möller–Trumbore; returns the ray parameter of a hit with t > 0.
std::optional<double> ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                   const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                   const Eigen::Vector3d& c);

double point_mesh_distance(const Mesh& m, const SimilarityTransform& transform,
                           const Eigen::Vector3d& p);

}  // namespace surgplan
