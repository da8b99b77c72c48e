#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "surgplan/anatomy.hpp"
#include "surgplan/kinematics.hpp"
#include "surgplan/render.hpp"

namespace surgplan {

inline constexpr int kSceneSchemaVersion = 1;

enum class PresetKind { Supine, ReverseTrendelenburg, LeftLateralSemiprone };

// Patient positioning. World axes: +z up, +y towards the head of a supine
// patient, anterior facing +z; the patient's left is -x.
struct PatientPreset {
  PresetKind kind = PresetKind::Supine;
  // Reverse Trendelenburg: head-up tilt. Left lateral semi-prone: anterior tilt
  // beyond the lateral decubitus roll. Ignored for supine.
  double angle_deg = 0.0;

  static constexpr double kDefaultReverseTrendelenburgDeg = 30.0;
  static constexpr double kMcKeownAnteriorTiltDeg = 45.0;

  static PatientPreset supine() { return {}; }
  static PatientPreset reverse_trendelenburg(double angle_deg = kDefaultReverseTrendelenburgDeg);
  static PatientPreset left_lateral_semiprone(double anterior_tilt_deg = kMcKeownAnteriorTiltDeg);

  // Throws BadAngle when angle_deg is outside [-90, 90].
  void validate() const;
  Eigen::Quaterniond rotation() const;

  bool operator==(const PatientPreset&) const = default;
};

std::string_view preset_name(PresetKind kind);
std::optional<PresetKind> parse_preset_kind(std::string_view name);

struct RobotPlacement {
  std::string id;
  std::string model_id;
  Pose base;
  JointState state;
  std::string role;

  bool operator==(const RobotPlacement&) const = default;
};

// Freehand annotation; points live in the patient (volume) frame.
struct Stroke {
  std::string id;
  std::vector<Eigen::Vector3d> points;
  Rgba color{1.0, 0.0, 0.0, 1.0};
  std::string created_at;

  bool operator==(const Stroke&) const = default;
};

struct SceneSettings {
  double stroke_min_spacing = 1.0;           // mm
  double collision_report_threshold = 10.0;  // mm
  double endoscope_standoff = 50.0;          // mm, serial holder tip before the target
  double rcm_tolerance = 1e-3;               // mm
  bool operator==(const SceneSettings&) const = default;
};

struct Scene {
  int schema_version = kSceneSchemaVersion;
  std::string volume_ref;
  std::vector<Structure> structures;
  std::map<std::string, RobotModel> robot_models;
  std::vector<RobotPlacement> robots;
  std::map<std::string, Eigen::Vector3d> trocars;  // world frame
  std::map<std::string, Eigen::Vector3d> targets;  // patient frame
  std::vector<Stroke> strokes;
  std::optional<Stroke> open_stroke;
  std::uint64_t next_stroke_number = 1;
  PatientPreset preset;
  Eigen::Vector3d patient_pivot = Eigen::Vector3d::Zero();
  std::optional<Aabb> table;
  SceneSettings settings;

  const RobotPlacement& robot(const std::string& id) const;
  RobotPlacement& robot(const std::string& id);
  const RobotModel& model_of(const RobotPlacement& placement) const;
  const Structure* structure(const std::string& id) const;

  // Patient frame -> world: rotation by the preset about patient_pivot.
  SimilarityTransform patient_to_world() const;
  Eigen::Vector3d trocar_world(const std::string& id) const;
  Eigen::Vector3d target_world(const std::string& id) const;
};

bool operator==(const Scene& a, const Scene& b);

// Adds the structure and, unless a target of the same name exists, a target at
// its bounding-box center.
void add_structure(Scene& scene, Structure structure);

// ---------------------------------------------------------------------------
// Planning

struct CollisionPair {
  std::string robot_a;
  std::string link_a;
  std::string robot_b;
  std::string link_b;
  double clearance;  // mm, negative when overlapping

  bool operator==(const CollisionPair&) const = default;
};

struct RobotConfiguration {
  std::string robot_id;
  Pose base;
  JointState q;
};

struct NamedCapsule {
  std::string link;
  Capsule capsule;
};

std::vector<NamedCapsule> robot_capsules(const RobotModel& model, const Pose& base,
                                         std::span<const double> q);

// Capsule pairs across distinct robots plus each robot against the table box,
// reported when clearance is below the scene's report threshold.
std::vector<CollisionPair> check_collisions(const Scene& scene,
                                            std::span<const RobotConfiguration> configs);
// Uses the scene's base poses with the given joint states (missing ids keep their current state).
std::vector<CollisionPair> check_collisions(const Scene& scene,
                                            const std::map<std::string, JointState>& states);

struct FeasibilityReport {
  bool feasible = false;
  std::string robot_id;
  std::string trocar_id;
  std::string target_id;
  JointState solution;
  Pose base;  // placement used for the solution
  Eigen::Vector3d tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::Zero();
  double rcm_residual = 0.0;
  std::vector<LimitViolation> violations;
  std::vector<CollisionPair> collisions;
  std::string reason;

  bool operator==(const FeasibilityReport&) const = default;
};

FeasibilityReport plan_reach(const Scene& scene, const std::string& robot_id,
                             const std::string& trocar_id, const std::string& target_id);

enum class TrajectoryPhase { Position, Insert };

struct TrajectorySample {
  double s;
  std::map<std::string, JointState> joints;
  Eigen::Vector3d tip;
  Eigen::Vector3d axis;
  TrajectoryPhase phase;
  double rcm_residual;
};

struct Trajectory {
  std::string robot_id;
  Pose base;
  Eigen::Vector3d rcm;
  std::vector<TrajectorySample> samples;
};

class InfeasiblePlanError : public Error {
 public:
  explicit InfeasiblePlanError(FeasibilityReport report)
      : Error(ErrorCode::InfeasiblePlan, report.reason), report_(std::move(report)) {}
  const FeasibilityReport& report() const noexcept { return report_; }

 private:
  FeasibilityReport report_;
};

Trajectory simulate_insertion(const Scene& scene, const std::string& robot_id,
                              const std::string& trocar_id, const std::string& target_id,
                              std::size_t n_steps);

// ---------------------------------------------------------------------------
// Scene edits

struct StrokeAction {
  enum class Kind { Begin, Append, End, Delete };
  Kind kind = Kind::Begin;
  Rgba color{1.0, 0.0, 0.0, 1.0};
  std::string created_at;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  std::string id;

  static StrokeAction begin(Rgba color, std::string created_at) {
    StrokeAction a;
    a.kind = Kind::Begin;
    a.color = color;
    a.created_at = std::move(created_at);
    return a;
  }
  static StrokeAction append(const Eigen::Vector3d& p) {
    StrokeAction a;
    a.kind = Kind::Append;
    a.point = p;
    return a;
  }
  static StrokeAction end() {
    StrokeAction a;
    a.kind = Kind::End;
    return a;
  }
  static StrokeAction remove(std::string id) {
    StrokeAction a;
    a.kind = Kind::Delete;
    a.id = std::move(id);
    return a;
  }
};

void stroke_edit(Scene& scene, const StrokeAction& action);

void apply_patient_preset(Scene& scene, const PatientPreset& preset);

// ---------------------------------------------------------------------------
// Persistence

// Resolves external references while loading a scene document.
struct SceneResolver {
  // Loads mesh `object` (empty = first) from `path`; nullptr when unavailable.
  std::function<std::shared_ptr<const Mesh>(const std::string& path, const std::string& object)>
      load_mesh;
  // True when the volume reference can be resolved.
  std::function<bool(const std::string& ref)> has_volume;

  // Resolves relative paths against `base_dir` on the local filesystem.
  static SceneResolver filesystem(std::string base_dir);
};

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& doc, const SceneResolver& resolver = {});

// Canonical document: sorted keys, shortest round-trip number formatting.
std::string save_scene(const Scene& scene);
Scene load_scene(std::string_view document, const SceneResolver& resolver = {});

nlohmann::json report_to_json(const FeasibilityReport& report);
nlohmann::json collision_to_json(const CollisionPair& pair);
nlohmann::json trajectory_to_json(const Trajectory& trajectory);
std::string_view phase_name(TrajectoryPhase phase);

}  // namespace surgplan
