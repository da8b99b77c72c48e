#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "surgplan/error.hpp"
#include "surgplan/geometry.hpp"

namespace surgplan {

// Rigid pose. The quaternion is the stored form so serialization is exact.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Isometry3d isometry() const;
  static Pose from_isometry(const Eigen::Isometry3d& iso);

  bool operator==(const Pose& o) const {
    return rotation.coeffs() == o.rotation.coeffs() && translation == o.translation;
  }
};

// Values in model joint order: rad for revolute joints, mm for prismatic ones.
using JointState = std::vector<double>;

enum class JointKind { Revolute, Prismatic };

struct DHJoint {
  std::string name;
  double a = 0.0;      // mm
  double alpha = 0.0;  // rad
  double d = 0.0;      // mm
  double theta_offset = 0.0;
  JointKind kind = JointKind::Revolute;
  double lo = -M_PI;
  double hi = M_PI;

  bool operator==(const DHJoint&) const = default;
};

// Capsule fixed in the frame of link `frame` (0 = base, i = after joint i).
struct LinkCapsule {
  std::string name;
  std::size_t frame = 0;
  Eigen::Vector3d p0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d p1 = Eigen::Vector3d::Zero();
  double radius = 1.0;

  bool operator==(const LinkCapsule&) const = default;
};

struct SerialRobotModel {
  std::string name;
  std::vector<DHJoint> joints;
  Pose base_pose;
  Pose tool_pose;
  std::vector<LinkCapsule> capsules;

  void validate() const;
  std::size_t dof() const noexcept { return joints.size(); }
  bool operator==(const SerialRobotModel&) const = default;
};

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

// Three-joint spherical arm around a remote center of motion:
// theta_az (rad) about the vertical, d_arc (mm) along an arc rail of radius R,
// d_ins (mm) instrument insertion.
struct SphericalRcmModel {
  std::string name = "spherical";
  double arc_radius = 200.0;
  Interval azimuth{-M_PI, M_PI};
  Interval arc{0.0, 200.0 * 75.0 * M_PI / 180.0};
  Interval insertion{0.0, 250.0};
  double instrument_offset = 100.0;  // L0
  Eigen::Vector3d reference_direction{0.0, 0.0, -1.0};
  double instrument_length = 300.0;
  double instrument_radius = 4.0;
  double carriage_radius = 25.0;
  double load_mass = 1.0;              // kg
  double load_lever = 300.0;           // mm
  double counterweight_lever = 150.0;  // mm

  static constexpr std::array<const char*, 3> joint_names{"theta_az", "d_arc", "d_ins"};

  void validate() const;
  // Unit vectors (h, m): horizontal tilt axis and the meridian direction m = h x ref.
  std::pair<Eigen::Vector3d, Eigen::Vector3d> meridian_frame() const;
  bool operator==(const SphericalRcmModel&) const = default;
};

using RobotModel = std::variant<SerialRobotModel, SphericalRcmModel>;

std::string robot_name(const RobotModel& model);
std::size_t robot_dof(const RobotModel& model);

// ---------------------------------------------------------------------------
// Serial arms

struct FkResult {
  Eigen::Isometry3d tool;
  // frames[0] is the base; frames[i] follows joint i.
  std::vector<Eigen::Isometry3d> frames;
};

Eigen::Isometry3d dh_transform(const DHJoint& joint, double q);
FkResult fk_dh(const SerialRobotModel& model, std::span<const double> q);

// Axis-angle vector of a rotation matrix.
Eigen::Vector3d rotation_log(const Eigen::Matrix3d& r);

// 6 x n: rows 0-2 linear (mm per unit), rows 3-5 angular (rad per unit).
Eigen::MatrixXd jacobian_fd(const SerialRobotModel& model, std::span<const double> q,
                            double epsilon = 1e-6);

struct IkOptions {
  double tol_pos = 1e-3;  // mm
  double tol_rot = 1e-6;  // rad
  int max_iter = 200;
  double damping = 0.05;
  double fd_epsilon = 1e-6;
  // Largest joint update per iteration (rad or mm); keeps far seeds stable.
  double max_step = 0.5;
};

struct IkResult {
  JointState q;
  int iterations = 0;
  double pos_error = 0.0;
  double rot_error = 0.0;
};

class NotConvergedError : public Error {
 public:
  explicit NotConvergedError(IkResult best)
      : Error(ErrorCode::NotConverged,
              "IK stopped after " + std::to_string(best.iterations) + " iterations with residual " +
                  std::to_string(best.pos_error) + " mm / " + std::to_string(best.rot_error) + " rad"),
        best_(std::move(best)) {}
  const IkResult& best() const noexcept { return best_; }

 private:
  IkResult best_;
};

IkResult ik_dls(const SerialRobotModel& model, const Eigen::Isometry3d& target,
                std::span<const double> seed, const IkOptions& options = {});

// Twist-style error (linear mm, angular rad) from `current` to `target`.
Eigen::Matrix<double, 6, 1> pose_error(const Eigen::Isometry3d& current,
                                       const Eigen::Isometry3d& target);

// ---------------------------------------------------------------------------
// Spherical RCM arm

struct LimitViolation {
  std::string joint;
  double value;
  double amount;  // distance outside the allowed interval

  bool operator==(const LimitViolation&) const = default;
};

class LimitViolationError : public Error {
 public:
  explicit LimitViolationError(std::vector<LimitViolation> violations);
  const std::vector<LimitViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<LimitViolation> violations_;
};

struct SphericalFk {
  Eigen::Vector3d axis;  // unit instrument axis, pointing into the patient
  Eigen::Vector3d tip;
  Eigen::Vector3d arc_carriage;         // rcm - R * axis
  Eigen::Vector3d instrument_carriage;  // tip - instrument_length * axis
  std::vector<Capsule> capsules;        // instrument shaft, arc carriage
};

std::vector<LimitViolation> spherical_limit_violations(const SphericalRcmModel& model,
                                                       std::span<const double> q);
std::vector<LimitViolation> serial_limit_violations(const SerialRobotModel& model,
                                                    std::span<const double> q);

SphericalFk spherical_fk(const SphericalRcmModel& model, std::span<const double> q,
                         const Eigen::Vector3d& rcm, bool clamped = true);

// Closed-form inverse; throws DegenerateTarget or LimitViolationError.
JointState spherical_ik(const SphericalRcmModel& model, const Eigen::Vector3d& rcm,
                        const Eigen::Vector3d& target);
// Same solution without the limit check.
JointState spherical_ik_unchecked(const SphericalRcmModel& model, const Eigen::Vector3d& rcm,
                                  const Eigen::Vector3d& target);

// Static lever law about the pivot: m_cw = m_load * r_load / r_cw.
double counterweight_balance(double m_load, double r_load, double r_cw);

// Perpendicular distance from `rcm` to the line through `point` along `direction`.
double rcm_residual(const Eigen::Vector3d& point, const Eigen::Vector3d& direction,
                    const Eigen::Vector3d& rcm);

JointState interpolate_joint(std::span<const double> q0, std::span<const double> q1, double s);

}  // namespace surgplan
