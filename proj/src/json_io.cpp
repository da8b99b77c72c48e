#include "surgplan/json_io.hpp"

#include <cmath>
#include <fstream>

#include "surgplan/error.hpp"

namespace surgplan::json_io {

namespace {

[[noreturn]] void malformed(const std::string& what, const std::string& detail) {
  throw Error(ErrorCode::MalformedDocument, what + ": " + detail);
}


void expect_numbers(const json& j, std::size_t count, const std::string& what) {
  if (!j.is_array() || j.size() != count) {
    malformed(what, "expected an array of " + std::to_string(count) + " numbers");
  }
  for (const auto& x : j) {
    if (!x.is_number()) malformed(what, "expected numbers");
  }
}

}  // namespace

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json quat(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

json pose(const Pose& p) {
  return json{{"rotation", quat(p.rotation)}, {"translation", vec3(p.translation)}};
}

json similarity(const SimilarityTransform& t) {
  return json{{"rotation", quat(t.rotation)}, {"translation", vec3(t.translation)}, {"scale", t.scale}};
}

json rgba(const Rgba& c) { return json::array({c[0], c[1], c[2], c[3]}); }

Eigen::Vector3d read_vec3(const json& j, const std::string& what) {
  expect_numbers(j, 3, what);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Quaterniond read_quat(const json& j, const std::string& what) {
  expect_numbers(j, 4, what);
  return Eigen::Quaterniond(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                            j[3].get<double>());
}

Pose read_pose(const json& j, const std::string& what) {
  if (!j.is_object()) malformed(what, "expected a pose object");
  Pose p;
  if (j.contains("rotation")) p.rotation = read_quat(j.at("rotation"), what + ".rotation");
  if (j.contains("translation")) p.translation = read_vec3(j.at("translation"), what + ".translation");
  if (std::abs(p.rotation.norm() - 1.0) > 1e-9) malformed(what, "rotation quaternion is not unit");
  return p;
}

SimilarityTransform read_similarity(const json& j, const std::string& what) {
  if (!j.is_object()) malformed(what, "expected a transform object");
  SimilarityTransform t;
  if (j.contains("rotation")) t.rotation = read_quat(j.at("rotation"), what + ".rotation");
  if (j.contains("translation")) t.translation = read_vec3(j.at("translation"), what + ".translation");
  t.scale = read_number_or(j, "scale", 1.0, what);
  t.validate();
  return t;
}

Rgba read_rgba(const json& j, const std::string& what) {
  expect_numbers(j, 4, what);
  Rgba c{};
  for (int n = 0; n < 4; ++n) {
    c[n] = j[n].get<double>();
    if (!(c[n] >= 0.0 && c[n] <= 1.0)) malformed(what, "color channels must lie in [0,1]");
  }
  return c;
}

double read_number(const json& j, const std::string& key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) malformed(what, "missing '" + key + "'");
  if (!j.at(key).is_number()) malformed(what, "'" + key + "' must be a number");
  return j.at(key).get<double>();
}

double read_number_or(const json& j, const std::string& key, double fallback, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return read_number(j, key, what);
}

std::string read_string(const json& j, const std::string& key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) malformed(what, "missing '" + key + "'");
  if (!j.at(key).is_string()) malformed(what, "'" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

Interval read_interval(const json& j, const std::string& what) {
  expect_numbers(j, 2, what);
  return {j[0].get<double>(), j[1].get<double>()};
}

// ---------------------------------------------------------------------------
// Robot configuration

json robot_to_json(const RobotModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SerialRobotModel>) {
          json joints = json::array();
          for (const auto& jt : m.joints) {
            joints.push_back({{"name", jt.name},
                              {"a", jt.a},
                              {"alpha", jt.alpha},
                              {"d", jt.d},
                              {"theta_offset", jt.theta_offset},
                              {"type", jt.kind == JointKind::Revolute ? "revolute" : "prismatic"},
                              {"limits", {jt.lo, jt.hi}}});
          }
          json capsules = json::array();
          for (const auto& c : m.capsules) {
            capsules.push_back({{"name", c.name},
                                {"frame", c.frame},
                                {"p0", vec3(c.p0)},
                                {"p1", vec3(c.p1)},
                                {"radius", c.radius}});
          }
          return json{{"name", m.name},           {"kind", "serial_dh"},
                      {"joints", joints},         {"base_pose", pose(m.base_pose)},
                      {"tool_pose", pose(m.tool_pose)}, {"capsules", capsules}};
        } else {
          return json{{"name", m.name},
                      {"kind", "spherical_rcm"},
                      {"arc_radius", m.arc_radius},
                      {"azimuth_limits", {m.azimuth.lo, m.azimuth.hi}},
                      {"arc_limits", {m.arc.lo, m.arc.hi}},
                      {"insertion_limits", {m.insertion.lo, m.insertion.hi}},
                      {"instrument_offset", m.instrument_offset},
                      {"reference_direction", vec3(m.reference_direction)},
                      {"instrument_length", m.instrument_length},
                      {"instrument_radius", m.instrument_radius},
                      {"carriage_radius", m.carriage_radius},
                      {"mass",
                       {{"load_kg", m.load_mass},
                        {"load_lever_mm", m.load_lever},
                        {"counterweight_lever_mm", m.counterweight_lever}}}};
        }
      },
      model);
}

RobotModel robot_from_json(const json& j) {
  const std::string what = "robot";
  if (!j.is_object()) malformed(what, "expected an object");
  const std::string kind = read_string(j, "kind", what);
  if (kind == "serial_dh") {
    SerialRobotModel m;
    m.name = read_string(j, "name", what);
    if (!j.contains("joints") || !j.at("joints").is_array()) malformed(what, "missing joints array");
    for (const auto& jj : j.at("joints")) {
      const std::string w = what + ".joints[" + std::to_string(m.joints.size()) + "]";
      DHJoint jt;
      jt.name = jj.contains("name") ? read_string(jj, "name", w) : "joint" + std::to_string(m.joints.size() + 1);
      jt.a = read_number_or(jj, "a", 0.0, w);
      jt.alpha = read_number_or(jj, "alpha", 0.0, w);
      jt.d = read_number_or(jj, "d", 0.0, w);
      jt.theta_offset = read_number_or(jj, "theta_offset", 0.0, w);
      const std::string type = jj.contains("type") ? read_string(jj, "type", w) : "revolute";
      if (type == "revolute") {
        jt.kind = JointKind::Revolute;
      } else if (type == "prismatic") {
        jt.kind = JointKind::Prismatic;
      } else {
        malformed(w, "type must be revolute or prismatic");
      }
      if (jj.contains("limits")) {
        const Interval iv = read_interval(jj.at("limits"), w + ".limits");
        jt.lo = iv.lo;
        jt.hi = iv.hi;
      }
      m.joints.push_back(jt);
    }
    if (j.contains("base_pose")) m.base_pose = read_pose(j.at("base_pose"), what + ".base_pose");
    if (j.contains("tool_pose")) m.tool_pose = read_pose(j.at("tool_pose"), what + ".tool_pose");
    if (j.contains("capsules")) {
      for (const auto& cj : j.at("capsules")) {
        const std::string w = what + ".capsules[" + std::to_string(m.capsules.size()) + "]";
        LinkCapsule c;
        c.name = read_string(cj, "name", w);
        const double frame = read_number(cj, "frame", w);
        if (frame < 0 || frame != std::floor(frame)) malformed(w, "frame must be a non-negative integer");
        c.frame = static_cast<std::size_t>(frame);
        c.p0 = read_vec3(cj.at("p0"), w + ".p0");
        c.p1 = read_vec3(cj.at("p1"), w + ".p1");
        c.radius = read_number(cj, "radius", w);
        m.capsules.push_back(c);
      }
    }
    m.validate();
    return m;
  }
  if (kind == "spherical_rcm") {
    SphericalRcmModel m;
    m.name = read_string(j, "name", what);
    m.arc_radius = read_number_or(j, "arc_radius", m.arc_radius, what);
    if (j.contains("azimuth_limits")) m.azimuth = read_interval(j.at("azimuth_limits"), what + ".azimuth_limits");
    if (j.contains("arc_limits")) m.arc = read_interval(j.at("arc_limits"), what + ".arc_limits");
    if (j.contains("insertion_limits")) {
      m.insertion = read_interval(j.at("insertion_limits"), what + ".insertion_limits");
    }
    m.instrument_offset = read_number_or(j, "instrument_offset", m.instrument_offset, what);
    if (j.contains("reference_direction")) {
      m.reference_direction = read_vec3(j.at("reference_direction"), what + ".reference_direction");
    }
    m.instrument_length = read_number_or(j, "instrument_length", m.instrument_length, what);
    m.instrument_radius = read_number_or(j, "instrument_radius", m.instrument_radius, what);
    m.carriage_radius = read_number_or(j, "carriage_radius", m.carriage_radius, what);
    if (j.contains("mass")) {
      const json& mj = j.at("mass");
      m.load_mass = read_number_or(mj, "load_kg", m.load_mass, what + ".mass");
      m.load_lever = read_number_or(mj, "load_lever_mm", m.load_lever, what + ".mass");
      m.counterweight_lever = read_number_or(mj, "counterweight_lever_mm", m.counterweight_lever, what + ".mass");
    }
    m.validate();
    return m;
  }
  throw Error(ErrorCode::BadRobotConfig, "unknown robot kind '" + kind + "'");
}

RobotModel read_robot_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, path + ": " + e.what());
  }
  return robot_from_json(j);
}

// ---------------------------------------------------------------------------
// Meshes

json mesh_to_json(const Mesh& m) {
  json vertices = json::array();
  for (const auto& v : m.vertices) vertices.push_back(vec3(v));
  json triangles = json::array();
  for (const auto& t : m.triangles) triangles.push_back({t[0], t[1], t[2]});
  json out{{"name", m.name}, {"vertices", vertices}, {"triangles", triangles}};
  if (!m.normals.empty()) {
    json normals = json::array();
    for (const auto& n : m.normals) normals.push_back(vec3(n));
    out["normals"] = normals;
  }
  return out;
}

Mesh mesh_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) malformed(what, "expected a mesh object");
  Mesh m;
  if (j.contains("name")) m.name = read_string(j, "name", what);
  if (!j.contains("vertices") || !j.at("vertices").is_array()) malformed(what, "missing vertices");
  if (!j.contains("triangles") || !j.at("triangles").is_array()) malformed(what, "missing triangles");
  for (const auto& v : j.at("vertices")) m.vertices.push_back(read_vec3(v, what + ".vertices"));
  for (const auto& t : j.at("triangles")) {
    expect_numbers(t, 3, what + ".triangles");
    std::array<std::uint32_t, 3> tri{};
    for (int n = 0; n < 3; ++n) {
      const double x = t[n].get<double>();
      if (x < 0 || x != std::floor(x) || x >= static_cast<double>(m.vertices.size())) {
        throw Error(ErrorCode::BadFaceIndex, what + ": triangle index out of range");
      }
      tri[n] = static_cast<std::uint32_t>(x);
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) malformed(what, "degenerate triangle");
    m.triangles.push_back(tri);
  }
  if (j.contains("normals")) {
    for (const auto& n : j.at("normals")) m.normals.push_back(read_vec3(n, what + ".normals"));
    if (m.normals.size() != m.vertices.size()) malformed(what, "normals must match vertices");
  }
  return m;
}

}  // namespace surgplan::json_io
