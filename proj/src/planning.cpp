#include "surgplan/planning.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <tuple>

#include "surgplan/error.hpp"
#include "surgplan/geometry.hpp"
#include "surgplan/json_io.hpp"

namespace surgplan {

namespace {

constexpr double kDeg = M_PI / 180.0;

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// ---------------------------------------------------------------------------
// Presets

PatientPreset PatientPreset::reverse_trendelenburg(double angle_deg) {
  return {PresetKind::ReverseTrendelenburg, angle_deg};
}

PatientPreset PatientPreset::left_lateral_semiprone(double anterior_tilt_deg) {
  return {PresetKind::LeftLateralSemiprone, anterior_tilt_deg};
}

void PatientPreset::validate() const {
  if (!std::isfinite(angle_deg) || angle_deg < -90.0 || angle_deg > 90.0) {
    throw Error(ErrorCode::BadAngle, "preset angle " + std::to_string(angle_deg) + " outside [-90, 90]");
  }
}

Eigen::Quaterniond PatientPreset::rotation() const {
  switch (kind) {
    case PresetKind::Supine:
      return Eigen::Quaterniond::Identity();
    case PresetKind::ReverseTrendelenburg:
      // Head (+y) rises towards +z.
      return Eigen::Quaterniond(Eigen::AngleAxisd(angle_deg * kDeg, Eigen::Vector3d::UnitX()));
    case PresetKind::LeftLateralSemiprone:
      // Roll onto the left side (90°), then further towards prone by the anterior tilt.
      return Eigen::Quaterniond(
          Eigen::AngleAxisd(-(90.0 + angle_deg) * kDeg, Eigen::Vector3d::UnitY()));
  }
  return Eigen::Quaterniond::Identity();
}

std::string_view preset_name(PresetKind kind) {
  switch (kind) {
    case PresetKind::Supine: return "supine";
    case PresetKind::ReverseTrendelenburg: return "reverse_trendelenburg";
    case PresetKind::LeftLateralSemiprone: return "left_lateral_semiprone";
  }
  return "supine";
}

std::optional<PresetKind> parse_preset_kind(std::string_view name) {
  if (name == "supine") return PresetKind::Supine;
  if (name == "reverse_trendelenburg") return PresetKind::ReverseTrendelenburg;
  if (name == "left_lateral_semiprone") return PresetKind::LeftLateralSemiprone;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scene

const RobotPlacement& Scene::robot(const std::string& id) const {
  for (const auto& r : robots) {
    if (r.id == id) return r;
  }
  throw Error(ErrorCode::UnknownId, "robot '" + id + "'");
}

RobotPlacement& Scene::robot(const std::string& id) {
  return const_cast<RobotPlacement&>(std::as_const(*this).robot(id));
}

const RobotModel& Scene::model_of(const RobotPlacement& placement) const {
  const auto it = robot_models.find(placement.model_id);
  if (it == robot_models.end()) {
    throw Error(ErrorCode::UnresolvableReference, "robot model '" + placement.model_id + "'");
  }
  return it->second;
}

const Structure* Scene::structure(const std::string& id) const {
  for (const auto& s : structures) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

SimilarityTransform Scene::patient_to_world() const {
  SimilarityTransform t;
  t.rotation = preset.rotation();
  t.translation = patient_pivot - t.rotation * patient_pivot;
  return t;
}

Eigen::Vector3d Scene::trocar_world(const std::string& id) const {
  const auto it = trocars.find(id);
  if (it == trocars.end()) throw Error(ErrorCode::UnknownId, "trocar '" + id + "'");
  return it->second;
}

Eigen::Vector3d Scene::target_world(const std::string& id) const {
  const auto it = targets.find(id);
  if (it == targets.end()) throw Error(ErrorCode::UnknownId, "target '" + id + "'");
  return patient_to_world().apply(it->second);
}

namespace {

bool same_structure(const Structure& a, const Structure& b) {
  const bool meshes_equal = (a.mesh == b.mesh) || (a.mesh && b.mesh && *a.mesh == *b.mesh);
  return a.id == b.id && a.name == b.name && meshes_equal && a.transform == b.transform &&
         a.visible == b.visible && a.color == b.color && a.mesh_file == b.mesh_file;
}

bool same_box(const std::optional<Aabb>& a, const std::optional<Aabb>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || (a->min == b->min && a->max == b->max);
}

}  // namespace

bool operator==(const Scene& a, const Scene& b) {
  if (a.structures.size() != b.structures.size()) return false;
  for (std::size_t n = 0; n < a.structures.size(); ++n) {
    if (!same_structure(a.structures[n], b.structures[n])) return false;
  }
  return a.schema_version == b.schema_version && a.volume_ref == b.volume_ref &&
         a.robot_models == b.robot_models && a.robots == b.robots && a.trocars == b.trocars &&
         a.targets == b.targets && a.strokes == b.strokes && a.open_stroke == b.open_stroke &&
         a.next_stroke_number == b.next_stroke_number && a.preset == b.preset &&
         a.patient_pivot == b.patient_pivot && same_box(a.table, b.table) &&
         a.settings == b.settings;
}

void add_structure(Scene& scene, Structure structure) {
  if (scene.structure(structure.id)) {
    throw Error(ErrorCode::BadParameter, "duplicate structure id '" + structure.id + "'");
  }
  if (!structure.mesh) throw Error(ErrorCode::EmptyMesh, "structure '" + structure.id + "' has no mesh");
  structure.transform.validate();
  const std::string key = structure.name.empty() ? structure.id : structure.name;
  if (!scene.targets.contains(key)) {
    scene.targets[key] = mesh_stats(*structure.mesh, structure.transform).center;
  }
  scene.structures.push_back(std::move(structure));
}

// ---------------------------------------------------------------------------
// Collisions

std::vector<NamedCapsule> robot_capsules(const RobotModel& model, const Pose& base,
                                         std::span<const double> q) {
  std::vector<NamedCapsule> out;
  std::visit(overloaded{
                 [&](const SerialRobotModel& m) {
                   SerialRobotModel placed = m;
                   placed.base_pose = Pose::from_isometry(base.isometry() * m.base_pose.isometry());
                   const FkResult fk = fk_dh(placed, q);
                   for (const auto& c : m.capsules) {
                     const auto& f = fk.frames.at(c.frame);
                     out.push_back({c.name, {{f * c.p0, f * c.p1}, c.radius}});
                   }
                 },
                 [&](const SphericalRcmModel& m) {
                   const SphericalFk fk = spherical_fk(m, q, base.translation, false);
                   out.push_back({"instrument", fk.capsules[0]});
                   out.push_back({"arc_carriage", fk.capsules[1]});
                 },
             },
             model);
  return out;
}

namespace {

void canonicalize(CollisionPair& p) {
  if (std::tie(p.robot_b, p.link_b) < std::tie(p.robot_a, p.link_a)) {
    std::swap(p.robot_a, p.robot_b);
    std::swap(p.link_a, p.link_b);
  }
}

}  // namespace

std::vector<CollisionPair> check_collisions(const Scene& scene,
                                            std::span<const RobotConfiguration> configs) {
  struct Placed {
    std::string id;
    std::vector<NamedCapsule> capsules;
  };
  std::vector<Placed> placed;
  for (const auto& r : scene.robots) {
    Pose base = r.base;
    JointState q = r.state;
    for (const auto& c : configs) {
      if (c.robot_id == r.id) {
        base = c.base;
        q = c.q;
      }
    }
    const RobotModel& model = scene.model_of(r);
    if (q.size() != robot_dof(model)) {
      throw Error(ErrorCode::LengthMismatch, "robot '" + r.id + "' expects " +
                                                 std::to_string(robot_dof(model)) + " joint values");
    }
    placed.push_back({r.id, robot_capsules(model, base, q)});
  }
  for (const auto& c : configs) {
    scene.robot(c.robot_id);  // unknown ids are an error
  }

  const double threshold = scene.settings.collision_report_threshold;
  std::vector<CollisionPair> out;
  for (std::size_t a = 0; a < placed.size(); ++a) {
    for (std::size_t b = a + 1; b < placed.size(); ++b) {
      for (const auto& ca : placed[a].capsules) {
        for (const auto& cb : placed[b].capsules) {
          // Evaluate in canonical order so the value does not depend on robot order.
          const bool swap = std::tie(placed[b].id, cb.link) < std::tie(placed[a].id, ca.link);
          const double clearance = swap ? capsule_clearance(cb.capsule, ca.capsule)
                                        : capsule_clearance(ca.capsule, cb.capsule);
          if (clearance < threshold) {
            out.push_back({placed[a].id, ca.link, placed[b].id, cb.link, clearance});
          }
        }
      }
    }
    if (scene.table) {
      for (const auto& ca : placed[a].capsules) {
        const double clearance =
            segment_box_distance(ca.capsule.axis, scene.table->min, scene.table->max) -
            ca.capsule.radius;
        if (clearance < threshold) out.push_back({placed[a].id, ca.link, "table", "table", clearance});
      }
    }
  }
  for (auto& p : out) canonicalize(p);
  std::sort(out.begin(), out.end(), [](const CollisionPair& x, const CollisionPair& y) {
    return std::tie(x.robot_a, x.link_a, x.robot_b, x.link_b) <
           std::tie(y.robot_a, y.link_a, y.robot_b, y.link_b);
  });
  return out;
}

std::vector<CollisionPair> check_collisions(const Scene& scene,
                                            const std::map<std::string, JointState>& states) {
  std::vector<RobotConfiguration> configs;
  for (const auto& [id, q] : states) configs.push_back({id, scene.robot(id).base, q});
  return check_collisions(scene, configs);
}

// ---------------------------------------------------------------------------
// Reach planning

namespace {

std::vector<CollisionPair> only_contacts(std::vector<CollisionPair> pairs) {
  std::erase_if(pairs, [](const CollisionPair& p) { return !(p.clearance < 0.0); });
  return pairs;
}

std::string describe_contacts(const std::vector<CollisionPair>& pairs) {
  std::string s = "collision:";
  for (const auto& p : pairs) {
    s += " " + p.robot_a + "." + p.link_a + "/" + p.robot_b + "." + p.link_b;
  }
  return s;
}

void finish_report(FeasibilityReport& report, const Scene& scene) {
  const RobotConfiguration config{report.robot_id, report.base, report.solution};
  report.collisions = only_contacts(check_collisions(scene, std::span(&config, 1)));
  if (!report.reason.empty()) {
    report.feasible = false;
    return;
  }
  if (!report.violations.empty()) {
    report.reason = std::string("limit violation: ") + LimitViolationError(report.violations).what();
  } else if (!report.collisions.empty()) {
    report.reason = describe_contacts(report.collisions);
  } else if (!(report.rcm_residual <= scene.settings.rcm_tolerance)) {
    report.reason = "rcm residual " + std::to_string(report.rcm_residual) + " mm above tolerance";
  }
  report.feasible = report.reason.empty();
  if (report.feasible) report.reason = "ok";
}

// Tool frame with +z along `axis` and +x as close as possible to `x_hint`.
Eigen::Matrix3d frame_along(const Eigen::Vector3d& axis, const Eigen::Vector3d& x_hint) {
  Eigen::Vector3d x = x_hint - x_hint.dot(axis) * axis;
  if (x.norm() < 1e-9) {
    const Eigen::Vector3d alt = std::abs(axis.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    x = alt - alt.dot(axis) * axis;
  }
  x.normalize();
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = axis.cross(x);
  r.col(2) = axis;
  return r;
}

}  // namespace

FeasibilityReport plan_reach(const Scene& scene, const std::string& robot_id,
                             const std::string& trocar_id, const std::string& target_id) {
  const RobotPlacement& placement = scene.robot(robot_id);
  const RobotModel& model = scene.model_of(placement);
  const Eigen::Vector3d trocar = scene.trocar_world(trocar_id);
  const Eigen::Vector3d target = scene.target_world(target_id);

  FeasibilityReport report;
  report.robot_id = robot_id;
  report.trocar_id = trocar_id;
  report.target_id = target_id;

  std::visit(
      overloaded{
          [&](const SphericalRcmModel& m) {
            report.base = Pose{Eigen::Quaterniond::Identity(), trocar};
            try {
              report.solution = spherical_ik(m, trocar, target);
            } catch (const LimitViolationError& e) {
              report.violations = e.violations();
              report.solution = spherical_ik_unchecked(m, trocar, target);
            } catch (const Error& e) {
              report.reason = std::string(e.what());
              report.solution = placement.state;
            }
            const SphericalFk fk = spherical_fk(m, report.solution, trocar, false);
            report.tip = fk.tip;
            report.axis = fk.axis;
            report.rcm_residual = rcm_residual(fk.tip, fk.axis, trocar);
          },
          [&](const SerialRobotModel& m) {
            report.base = placement.base;
            SerialRobotModel placed = m;
            placed.base_pose = Pose::from_isometry(placement.base.isometry() * m.base_pose.isometry());
            const Eigen::Vector3d line = target - trocar;
            if (line.norm() < 1e-9) {
              report.reason = "DegenerateTarget: target coincides with the trocar";
              report.solution = placement.state;
            } else {
              const Eigen::Vector3d axis = line.normalized();
              const Eigen::Isometry3d current = fk_dh(placed, placement.state).tool;
              Eigen::Isometry3d goal = Eigen::Isometry3d::Identity();
              goal.linear() = frame_along(axis, current.linear().col(0));
              goal.translation() = target - scene.settings.endoscope_standoff * axis;
              IkOptions options;
              options.tol_pos = 1e-4;
              try {
                report.solution = ik_dls(placed, goal, placement.state, options).q;
              } catch (const NotConvergedError& e) {
                report.solution = e.best().q;
                report.reason = std::string(e.what());
              }
            }
            report.violations = serial_limit_violations(m, report.solution);
            const Eigen::Isometry3d tool = fk_dh(placed, report.solution).tool;
            report.tip = tool.translation();
            report.axis = tool.linear().col(2);
            report.rcm_residual = rcm_residual(report.tip, report.axis, trocar);
          },
      },
      model);
  finish_report(report, scene);
  return report;
}

// ---------------------------------------------------------------------------
// Simulation

Trajectory simulate_insertion(const Scene& scene, const std::string& robot_id,
                              const std::string& trocar_id, const std::string& target_id,
                              std::size_t n_steps) {
  if (n_steps < 2) throw Error(ErrorCode::BadParameter, "n_steps must be >= 2");
  const FeasibilityReport plan = plan_reach(scene, robot_id, trocar_id, target_id);
  if (!plan.feasible) throw InfeasiblePlanError(plan);

  const RobotPlacement& placement = scene.robot(robot_id);
  const RobotModel& model = scene.model_of(placement);
  const JointState& q0 = placement.state;
  const JointState& q1 = plan.solution;

  std::map<std::string, JointState> fixed;
  for (const auto& r : scene.robots) {
    if (r.id != robot_id) fixed[r.id] = r.state;
  }

  Trajectory traj;
  traj.robot_id = robot_id;
  traj.base = plan.base;
  traj.rcm = scene.trocar_world(trocar_id);

  const auto* spherical = std::get_if<SphericalRcmModel>(&model);
  SerialRobotModel placed_serial;
  if (!spherical) {
    placed_serial = std::get<SerialRobotModel>(model);
    placed_serial.base_pose =
        Pose::from_isometry(plan.base.isometry() * placed_serial.base_pose.isometry());
  }

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double s = k + 1 == n_steps ? 1.0 : static_cast<double>(k) / static_cast<double>(n_steps - 1);
    TrajectorySample sample;
    sample.s = s;
    sample.joints = fixed;
    JointState q;
    if (spherical) {
      const double retracted = spherical->insertion.lo;
      if (s <= 0.5) {
        const double u = s / 0.5;
        const JointState start = q0;
        const JointState docked{q1[0], q1[1], retracted};
        q = interpolate_joint(start, docked, u);
        sample.phase = TrajectoryPhase::Position;
      } else {
        const double u = (s - 0.5) / 0.5;
        const JointState docked{q1[0], q1[1], retracted};
        q = interpolate_joint(docked, q1, u);
        sample.phase = TrajectoryPhase::Insert;
      }
      const SphericalFk fk = spherical_fk(*spherical, q, traj.rcm, false);
      sample.tip = fk.tip;
      sample.axis = fk.axis;
    } else {
      q = interpolate_joint(q0, q1, s);
      sample.phase = TrajectoryPhase::Position;
      const Eigen::Isometry3d tool = fk_dh(placed_serial, q).tool;
      sample.tip = tool.translation();
      sample.axis = tool.linear().col(2);
    }
    sample.rcm_residual = rcm_residual(sample.tip, sample.axis, traj.rcm);
    sample.joints[robot_id] = std::move(q);
    traj.samples.push_back(std::move(sample));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Edits

void stroke_edit(Scene& scene, const StrokeAction& action) {
  switch (action.kind) {
    case StrokeAction::Kind::Begin: {
      if (scene.open_stroke) stroke_edit(scene, StrokeAction::end());
      Stroke s;
      s.id = "stroke-" + std::to_string(scene.next_stroke_number++);
      s.color = action.color;
      s.created_at = action.created_at;
      scene.open_stroke = std::move(s);
      break;
    }
    case StrokeAction::Kind::Append: {
      if (!scene.open_stroke) throw Error(ErrorCode::NoOpenStroke, "append without begin");
      if (!action.point.allFinite()) throw Error(ErrorCode::BadParameter, "non-finite stroke point");
      auto& pts = scene.open_stroke->points;
      if (pts.empty() || (action.point - pts.back()).norm() >= scene.settings.stroke_min_spacing) {
        pts.push_back(action.point);
      }
      break;
    }
    case StrokeAction::Kind::End: {
      if (!scene.open_stroke) throw Error(ErrorCode::NoOpenStroke, "end without begin");
      if (!scene.open_stroke->points.empty()) scene.strokes.push_back(std::move(*scene.open_stroke));
      scene.open_stroke.reset();
      break;
    }
    case StrokeAction::Kind::Delete: {
      const auto it = std::find_if(scene.strokes.begin(), scene.strokes.end(),
                                   [&](const Stroke& s) { return s.id == action.id; });
      if (it == scene.strokes.end()) throw Error(ErrorCode::UnknownId, "stroke '" + action.id + "'");
      scene.strokes.erase(it);
      break;
    }
  }
}

void apply_patient_preset(Scene& scene, const PatientPreset& preset) {
  preset.validate();
  scene.preset = preset;
  if (preset.kind == PresetKind::Supine) scene.preset.angle_deg = 0.0;
}

// ---------------------------------------------------------------------------
// Persistence

using nlohmann::json;
using namespace json_io;

SceneResolver SceneResolver::filesystem(std::string base_dir) {
  SceneResolver r;
  auto resolve = [base_dir](const std::string& path) {
    std::filesystem::path p(path);
    return p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
  };
  r.load_mesh = [resolve](const std::string& path,
                          const std::string& object) -> std::shared_ptr<const Mesh> {
    const auto full = resolve(path);
    if (!std::filesystem::exists(full)) return nullptr;
    auto meshes = read_obj_file(full.string());
    for (auto& m : meshes) {
      if (object.empty() || m.name == object) return std::make_shared<const Mesh>(std::move(m));
    }
    return nullptr;
  };
  r.has_volume = [resolve](const std::string& ref) { return std::filesystem::exists(resolve(ref)); };
  return r;
}

namespace {

json stroke_to_json(const Stroke& s) {
  json pts = json::array();
  for (const auto& p : s.points) pts.push_back(vec3(p));
  return {{"id", s.id}, {"points", pts}, {"color", rgba(s.color)}, {"created_at", s.created_at}};
}

Stroke stroke_from_json(const json& j, const std::string& what) {
  Stroke s;
  s.id = read_string(j, "id", what);
  if (!j.contains("points") || !j.at("points").is_array()) {
    throw Error(ErrorCode::MalformedDocument, what + ": missing points");
  }
  for (const auto& p : j.at("points")) s.points.push_back(read_vec3(p, what + ".points"));
  if (j.contains("color")) s.color = read_rgba(j.at("color"), what + ".color");
  if (j.contains("created_at")) s.created_at = read_string(j, "created_at", what);
  return s;
}

json joints_json(const JointState& q) { return json(q); }

JointState read_joints(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::MalformedDocument, what + ": expected a number array");
  JointState q;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::MalformedDocument, what + ": expected numbers");
    q.push_back(x.get<double>());
  }
  return q;
}

}  // namespace

json scene_to_json(const Scene& scene) {
  json structures = json::array();
  for (const auto& s : scene.structures) {
    json sj{{"id", s.id},
            {"name", s.name},
            {"transform", similarity(s.transform)},
            {"visible", s.visible},
            {"color", rgba(s.color)}};
    if (!s.mesh_file.empty()) {
      sj["mesh_file"] = s.mesh_file;
      sj["mesh_object"] = s.mesh ? s.mesh->name : "";
    } else {
      sj["mesh"] = s.mesh ? mesh_to_json(*s.mesh) : json(nullptr);
    }
    structures.push_back(sj);
  }
  json models = json::object();
  for (const auto& [id, m] : scene.robot_models) models[id] = robot_to_json(m);
  json robots = json::array();
  for (const auto& r : scene.robots) {
    robots.push_back({{"id", r.id},
                      {"model", r.model_id},
                      {"base", pose(r.base)},
                      {"joints", joints_json(r.state)},
                      {"role", r.role}});
  }
  json trocars = json::object();
  for (const auto& [id, p] : scene.trocars) trocars[id] = vec3(p);
  json targets = json::object();
  for (const auto& [id, p] : scene.targets) targets[id] = vec3(p);
  json strokes = json::array();
  for (const auto& s : scene.strokes) strokes.push_back(stroke_to_json(s));

  return json{
      {"schema_version", scene.schema_version},
      {"volume_ref", scene.volume_ref},
      {"patient",
       {{"preset", preset_name(scene.preset.kind)},
        {"angle_deg", scene.preset.angle_deg},
        {"pivot", vec3(scene.patient_pivot)}}},
      {"structures", structures},
      {"robot_models", models},
      {"robots", robots},
      {"trocars", trocars},
      {"targets", targets},
      {"strokes", strokes},
      {"open_stroke", scene.open_stroke ? stroke_to_json(*scene.open_stroke) : json(nullptr)},
      {"next_stroke_number", scene.next_stroke_number},
      {"table", scene.table ? json{{"min", vec3(scene.table->min)}, {"max", vec3(scene.table->max)}}
                            : json(nullptr)},
      {"settings",
       {{"stroke_min_spacing", scene.settings.stroke_min_spacing},
        {"collision_report_threshold", scene.settings.collision_report_threshold},
        {"endoscope_standoff", scene.settings.endoscope_standoff},
        {"rcm_tolerance", scene.settings.rcm_tolerance}}},
  };
}

Scene scene_from_json(const json& doc, const SceneResolver& resolver) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "scene document must be an object");
  if (!doc.contains("schema_version") || !doc.at("schema_version").is_number_integer()) {
    throw Error(ErrorCode::MalformedDocument, "schema_version is mandatory");
  }
  const int version = doc.at("schema_version").get<int>();
  if (version != kSceneSchemaVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "schema_version " + std::to_string(version));
  }

  Scene scene;
  try {
    if (doc.contains("volume_ref") && !doc.at("volume_ref").is_null()) {
      scene.volume_ref = read_string(doc, "volume_ref", "scene");
    }
    if (doc.contains("patient")) {
      const json& pj = doc.at("patient");
      const std::string name = read_string(pj, "preset", "patient");
      const auto kind = parse_preset_kind(name);
      if (!kind) throw Error(ErrorCode::MalformedDocument, "unknown preset '" + name + "'");
      scene.preset = {*kind, read_number_or(pj, "angle_deg", 0.0, "patient")};
      scene.preset.validate();
      if (pj.contains("pivot")) scene.patient_pivot = read_vec3(pj.at("pivot"), "patient.pivot");
    }
    if (doc.contains("robot_models")) {
      for (const auto& [id, mj] : doc.at("robot_models").items()) {
        scene.robot_models.emplace(id, robot_from_json(mj));
      }
    }
    if (doc.contains("structures")) {
      for (const auto& sj : doc.at("structures")) {
        const std::string what = "structure";
        Structure s;
        s.id = read_string(sj, "id", what);
        if (sj.contains("name")) s.name = read_string(sj, "name", what);
        if (sj.contains("transform")) s.transform = read_similarity(sj.at("transform"), what + ".transform");
        if (sj.contains("visible")) s.visible = sj.at("visible").get<bool>();
        if (sj.contains("color")) s.color = read_rgba(sj.at("color"), what + ".color");
        if (sj.contains("mesh_file")) {
          s.mesh_file = read_string(sj, "mesh_file", what);
          const std::string object = sj.contains("mesh_object") ? read_string(sj, "mesh_object", what) : "";
          if (!resolver.load_mesh) {
            throw Error(ErrorCode::UnresolvableReference, "no mesh resolver for '" + s.mesh_file + "'");
          }
          s.mesh = resolver.load_mesh(s.mesh_file, object);
          if (!s.mesh) throw Error(ErrorCode::UnresolvableReference, "mesh '" + s.mesh_file + "'");
        } else if (sj.contains("mesh") && !sj.at("mesh").is_null()) {
          s.mesh = std::make_shared<const Mesh>(mesh_from_json(sj.at("mesh"), what + ".mesh"));
        } else {
          throw Error(ErrorCode::MalformedDocument, "structure '" + s.id + "' has no mesh");
        }
        if (scene.structure(s.id)) throw Error(ErrorCode::MalformedDocument, "duplicate structure id " + s.id);
        scene.structures.push_back(std::move(s));
      }
    }
    if (doc.contains("robots")) {
      for (const auto& rj : doc.at("robots")) {
        RobotPlacement r;
        r.id = read_string(rj, "id", "robot");
        r.model_id = read_string(rj, "model", "robot");
        if (rj.contains("base")) r.base = read_pose(rj.at("base"), "robot.base");
        if (rj.contains("joints")) r.state = read_joints(rj.at("joints"), "robot.joints");
        if (rj.contains("role")) r.role = read_string(rj, "role", "robot");
        const auto it = scene.robot_models.find(r.model_id);
        if (it == scene.robot_models.end()) {
          throw Error(ErrorCode::UnresolvableReference, "robot model '" + r.model_id + "'");
        }
        if (r.state.empty()) r.state.assign(robot_dof(it->second), 0.0);
        if (r.state.size() != robot_dof(it->second)) {
          throw Error(ErrorCode::MalformedDocument, "robot '" + r.id + "' joint count mismatch");
        }
        for (const auto& other : scene.robots) {
          if (other.id == r.id) throw Error(ErrorCode::MalformedDocument, "duplicate robot id " + r.id);
        }
        scene.robots.push_back(std::move(r));
      }
    }
    if (doc.contains("trocars")) {
      for (const auto& [id, p] : doc.at("trocars").items()) scene.trocars[id] = read_vec3(p, "trocar " + id);
    }
    if (doc.contains("targets")) {
      for (const auto& [id, p] : doc.at("targets").items()) scene.targets[id] = read_vec3(p, "target " + id);
    }
    if (doc.contains("strokes")) {
      for (const auto& sj : doc.at("strokes")) scene.strokes.push_back(stroke_from_json(sj, "stroke"));
    }
    if (doc.contains("open_stroke") && !doc.at("open_stroke").is_null()) {
      scene.open_stroke = stroke_from_json(doc.at("open_stroke"), "open_stroke");
    }
    if (doc.contains("next_stroke_number")) {
      scene.next_stroke_number = doc.at("next_stroke_number").get<std::uint64_t>();
    }
    if (doc.contains("table") && !doc.at("table").is_null()) {
      const json& tj = doc.at("table");
      scene.table = Aabb{read_vec3(tj.at("min"), "table.min"), read_vec3(tj.at("max"), "table.max")};
    }
    if (doc.contains("settings")) {
      const json& sj = doc.at("settings");
      SceneSettings& st = scene.settings;
      st.stroke_min_spacing = read_number_or(sj, "stroke_min_spacing", st.stroke_min_spacing, "settings");
      st.collision_report_threshold =
          read_number_or(sj, "collision_report_threshold", st.collision_report_threshold, "settings");
      st.endoscope_standoff = read_number_or(sj, "endoscope_standoff", st.endoscope_standoff, "settings");
      st.rcm_tolerance = read_number_or(sj, "rcm_tolerance", st.rcm_tolerance, "settings");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadTransform || e.code() == ErrorCode::BadAngle ||
        e.code() == ErrorCode::BadRobotConfig || e.code() == ErrorCode::BadFaceIndex) {
      throw Error(ErrorCode::MalformedDocument, e.what());
    }
    throw;
  }
  if (!scene.volume_ref.empty() && resolver.has_volume && !resolver.has_volume(scene.volume_ref)) {
    throw Error(ErrorCode::UnresolvableReference, "volume '" + scene.volume_ref + "'");
  }
  return scene;
}

std::string save_scene(const Scene& scene) { return scene_to_json(scene).dump(2) + "\n"; }

Scene load_scene(std::string_view document, const SceneResolver& resolver) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  return scene_from_json(doc, resolver);
}

json collision_to_json(const CollisionPair& p) {
  return {{"robot_a", p.robot_a}, {"link_a", p.link_a}, {"robot_b", p.robot_b},
          {"link_b", p.link_b},   {"clearance", p.clearance}};
}

json report_to_json(const FeasibilityReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    violations.push_back({{"joint", v.joint}, {"value", v.value}, {"amount", v.amount}});
  }
  json collisions = json::array();
  for (const auto& c : r.collisions) collisions.push_back(collision_to_json(c));
  return {{"feasible", r.feasible},
          {"robot", r.robot_id},
          {"trocar", r.trocar_id},
          {"target", r.target_id},
          {"solution", r.solution},
          {"base", pose(r.base)},
          {"tip", vec3(r.tip)},
          {"axis", vec3(r.axis)},
          {"rcm_residual", r.rcm_residual},
          {"violations", violations},
          {"collisions", collisions},
          {"reason", r.reason}};
}

std::string_view phase_name(TrajectoryPhase phase) {
  return phase == TrajectoryPhase::Position ? "position" : "insert";
}

json trajectory_to_json(const Trajectory& t) {
  json samples = json::array();
  for (const auto& s : t.samples) {
    json joints = json::object();
    for (const auto& [id, q] : s.joints) joints[id] = q;
    samples.push_back({{"s", s.s},
                       {"joints", joints},
                       {"tip", vec3(s.tip)},
                       {"axis", vec3(s.axis)},
                       {"phase", phase_name(s.phase)},
                       {"rcm_residual", s.rcm_residual}});
  }
  return {{"robot", t.robot_id}, {"base", pose(t.base)}, {"rcm", vec3(t.rcm)}, {"samples", samples}};
}

}  // namespace surgplan
