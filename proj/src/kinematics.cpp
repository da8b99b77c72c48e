#include "surgplan/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace surgplan {

Eigen::Isometry3d Pose::isometry() const {
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  iso.linear() = rotation.normalized().toRotationMatrix();
  iso.translation() = translation;
  return iso;
}

Pose Pose::from_isometry(const Eigen::Isometry3d& iso) {
  Pose p;
  p.rotation = Eigen::Quaterniond(iso.linear());
  p.rotation.normalize();
  p.translation = iso.translation();
  return p;
}

void SerialRobotModel::validate() const {
  if (joints.empty()) throw Error(ErrorCode::BadRobotConfig, name + ": needs at least one joint");
  for (const auto& j : joints) {
    if (!(j.lo < j.hi)) throw Error(ErrorCode::BadRobotConfig, name + ": joint " + j.name + " has lo >= hi");
  }
  for (const auto& c : capsules) {
    if (!(c.radius > 0.0)) throw Error(ErrorCode::BadRobotConfig, name + ": capsule radius must be > 0");
    if (c.frame > joints.size()) {
      throw Error(ErrorCode::BadRobotConfig, name + ": capsule " + c.name + " references a missing frame");
    }
  }
}

void SphericalRcmModel::validate() const {
  if (!(arc_radius > 0.0)) throw Error(ErrorCode::BadRobotConfig, name + ": arc radius must be > 0");
  for (const Interval* iv : {&azimuth, &arc, &insertion}) {
    if (!(iv->lo <= iv->hi)) throw Error(ErrorCode::BadRobotConfig, name + ": empty limit interval");
  }
  if (std::abs(reference_direction.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadRobotConfig, name + ": reference direction must be unit length");
  }
  if (!(instrument_radius > 0.0) || !(carriage_radius > 0.0) || !(instrument_length > 0.0)) {
    throw Error(ErrorCode::BadRobotConfig, name + ": instrument geometry must be positive");
  }
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> SphericalRcmModel::meridian_frame() const {
  const Eigen::Vector3d& r = reference_direction;
  Eigen::Vector3d seed = Eigen::Vector3d::UnitX();
  if (std::abs(r.dot(seed)) > 1.0 - 1e-6) seed = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d h = (seed - seed.dot(r) * r).normalized();
  return {h, h.cross(r)};
}

std::string robot_name(const RobotModel& model) {
  return std::visit([](const auto& m) { return m.name; }, model);
}

std::size_t robot_dof(const RobotModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, SerialRobotModel>) {
          return m.dof();
        } else {
          return 3;
        }
      },
      model);
}

// ---------------------------------------------------------------------------
// Serial arms

Eigen::Isometry3d dh_transform(const DHJoint& joint, double q) {
  const double theta = joint.theta_offset + (joint.kind == JointKind::Revolute ? q : 0.0);
  const double d = joint.d + (joint.kind == JointKind::Prismatic ? q : 0.0);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(joint.alpha), sa = std::sin(joint.alpha);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  t.translation() << joint.a * ct, joint.a * st, d;
  return t;
}

FkResult fk_dh(const SerialRobotModel& model, std::span<const double> q) {
  if (q.size() != model.joints.size()) {
    throw Error(ErrorCode::LengthMismatch, model.name + ": expected " +
                                               std::to_string(model.joints.size()) +
                                               " joint values, got " + std::to_string(q.size()));
  }
  FkResult out;
  out.frames.reserve(q.size() + 1);
  Eigen::Isometry3d t = model.base_pose.isometry();
  out.frames.push_back(t);
  for (std::size_t n = 0; n < q.size(); ++n) {
    t = t * dh_transform(model.joints[n], q[n]);
    out.frames.push_back(t);
  }
  out.tool = t * model.tool_pose.isometry();
  return out;
}

Eigen::Vector3d rotation_log(const Eigen::Matrix3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v = q.vec();
  const double n = v.norm();
  if (n < 1e-300) return Eigen::Vector3d::Zero();
  return (2.0 * std::atan2(n, q.w()) / n) * v;
}

Eigen::Matrix<double, 6, 1> pose_error(const Eigen::Isometry3d& current,
                                       const Eigen::Isometry3d& target) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = target.translation() - current.translation();
  e.tail<3>() = rotation_log(target.linear() * current.linear().transpose());
  return e;
}

Eigen::MatrixXd jacobian_fd(const SerialRobotModel& model, std::span<const double> q,
                            double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::BadParameter, "epsilon must be > 0");
  if (q.size() != model.joints.size()) {
    throw Error(ErrorCode::LengthMismatch, model.name + ": joint vector length mismatch");
  }
  Eigen::MatrixXd jac(6, q.size());
  JointState plus(q.begin(), q.end()), minus(q.begin(), q.end());
  for (std::size_t j = 0; j < q.size(); ++j) {
    plus[j] = q[j] + epsilon;
    minus[j] = q[j] - epsilon;
    const Eigen::Isometry3d tp = fk_dh(model, plus).tool;
    const Eigen::Isometry3d tm = fk_dh(model, minus).tool;
    jac.block<3, 1>(0, static_cast<Eigen::Index>(j)) =
        (tp.translation() - tm.translation()) / (2.0 * epsilon);
    jac.block<3, 1>(3, static_cast<Eigen::Index>(j)) =
        rotation_log(tp.linear() * tm.linear().transpose()) / (2.0 * epsilon);
    plus[j] = minus[j] = q[j];
  }
  return jac;
}

namespace {

void clamp_to_limits(const SerialRobotModel& model, JointState& q) {
  for (std::size_t n = 0; n < q.size(); ++n) {
    q[n] = std::clamp(q[n], model.joints[n].lo, model.joints[n].hi);
  }
}

}  // namespace

IkResult ik_dls(const SerialRobotModel& model, const Eigen::Isometry3d& target,
                std::span<const double> seed, const IkOptions& options) {
  if (seed.size() != model.joints.size()) {
    throw Error(ErrorCode::LengthMismatch, model.name + ": seed length mismatch");
  }
  JointState q(seed.begin(), seed.end());
  clamp_to_limits(model, q);
  const std::size_t n = q.size();
  const double lambda2 = options.damping * options.damping;

  IkResult best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    const Eigen::Matrix<double, 6, 1> e = pose_error(fk_dh(model, q).tool, target);
    const double pos_err = e.head<3>().norm();
    const double rot_err = e.tail<3>().norm();
    const double score = std::max(pos_err / options.tol_pos, rot_err / options.tol_rot);
    if (score < best_score) {
      best_score = score;
      best = IkResult{q, iter, pos_err, rot_err};
    }
    if (pos_err <= options.tol_pos && rot_err <= options.tol_rot) {
      return IkResult{q, iter, pos_err, rot_err};
    }
    if (iter >= options.max_iter) break;

    const Eigen::MatrixXd jac = jacobian_fd(model, q, options.fd_epsilon);
    const Eigen::MatrixXd jjt = jac * jac.transpose() + lambda2 * Eigen::MatrixXd::Identity(6, 6);
    // J^T (J J^T + l^2 I)^-1 e equals (J^T J + l^2 I)^-1 J^T e.
    Eigen::VectorXd dq = jac.transpose() * jjt.ldlt().solve(e);
    const double largest = dq.cwiseAbs().maxCoeff();
    if (largest > options.max_step) dq *= options.max_step / largest;
    for (std::size_t j = 0; j < n; ++j) q[j] += dq[static_cast<Eigen::Index>(j)];
    clamp_to_limits(model, q);
  }
  best.iterations = options.max_iter;
  throw NotConvergedError(std::move(best));
}

std::vector<LimitViolation> serial_limit_violations(const SerialRobotModel& model,
                                                    std::span<const double> q) {
  std::vector<LimitViolation> out;
  for (std::size_t n = 0; n < q.size() && n < model.joints.size(); ++n) {
    const auto& j = model.joints[n];
    if (q[n] < j.lo) out.push_back({j.name, q[n], j.lo - q[n]});
    if (q[n] > j.hi) out.push_back({j.name, q[n], q[n] - j.hi});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spherical RCM arm

namespace {

std::string describe(const std::vector<LimitViolation>& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += "; ";
    s += x.joint + "=" + std::to_string(x.value) + " exceeds its limit by " + std::to_string(x.amount);
  }
  return s;
}

}  // namespace

LimitViolationError::LimitViolationError(std::vector<LimitViolation> violations)
    : Error(ErrorCode::LimitViolation, describe(violations)), violations_(std::move(violations)) {}

std::vector<LimitViolation> spherical_limit_violations(const SphericalRcmModel& model,
                                                       std::span<const double> q) {
  if (q.size() != 3) throw Error(ErrorCode::LengthMismatch, "spherical arm has 3 joints");
  std::vector<LimitViolation> out;
  const Interval* limits[3] = {&model.azimuth, &model.arc, &model.insertion};
  for (int n = 0; n < 3; ++n) {
    const Interval& iv = *limits[n];
    if (q[n] < iv.lo) out.push_back({SphericalRcmModel::joint_names[n], q[n], iv.lo - q[n]});
    if (q[n] > iv.hi) out.push_back({SphericalRcmModel::joint_names[n], q[n], q[n] - iv.hi});
  }
  return out;
}

SphericalFk spherical_fk(const SphericalRcmModel& model, std::span<const double> q,
                         const Eigen::Vector3d& rcm, bool clamped) {
  if (q.size() != 3) throw Error(ErrorCode::LengthMismatch, "spherical arm has 3 joints");
  if (clamped) {
    auto v = spherical_limit_violations(model, q);
    if (!v.empty()) throw LimitViolationError(std::move(v));
  }
  const double theta = q[0];
  const double phi = q[1] / model.arc_radius;
  const auto [h, m] = model.meridian_frame();
  const Eigen::Vector3d& ref = model.reference_direction;
  // Tilt by phi about h, then turn by theta about the vertical (-ref).
  const Eigen::Vector3d axis =
      (std::cos(phi) * ref + std::sin(phi) * (std::cos(theta) * m - std::sin(theta) * h)).normalized();

  SphericalFk out;
  out.axis = axis;
  out.tip = rcm + (q[2] - model.instrument_offset) * axis;
  out.arc_carriage = rcm - model.arc_radius * axis;
  out.instrument_carriage = out.tip - model.instrument_length * axis;
  out.capsules.push_back({{out.instrument_carriage, out.tip}, model.instrument_radius});
  out.capsules.push_back({{out.arc_carriage, out.arc_carriage}, model.carriage_radius});
  return out;
}

JointState spherical_ik_unchecked(const SphericalRcmModel& model, const Eigen::Vector3d& rcm,
                                  const Eigen::Vector3d& target) {
  const Eigen::Vector3d offset = target - rcm;
  const double depth = offset.norm();
  if (!(depth > 1e-12)) throw Error(ErrorCode::DegenerateTarget, "target coincides with the RCM");
  const Eigen::Vector3d dir = offset / depth;
  const Eigen::Vector3d& ref = model.reference_direction;
  const auto [h, m] = model.meridian_frame();
  const double phi = std::atan2(ref.cross(dir).norm(), ref.dot(dir));
  const double along_m = dir.dot(m);
  const double along_h = dir.dot(h);
  const double theta = std::hypot(along_m, along_h) < 1e-15 ? 0.0 : std::atan2(-along_h, along_m);
  return {theta, phi * model.arc_radius, depth + model.instrument_offset};
}

JointState spherical_ik(const SphericalRcmModel& model, const Eigen::Vector3d& rcm,
                        const Eigen::Vector3d& target) {
  JointState q = spherical_ik_unchecked(model, rcm, target);
  auto v = spherical_limit_violations(model, q);
  if (!v.empty()) throw LimitViolationError(std::move(v));
  return q;
}

double counterweight_balance(double m_load, double r_load, double r_cw) {
  if (!(r_cw > 0.0)) throw Error(ErrorCode::BadLeverArm, "counterweight lever arm must be > 0");
  if (!(m_load >= 0.0) || !(r_load >= 0.0)) {
    throw Error(ErrorCode::BadParameter, "load mass and lever arm must be >= 0");
  }
  return m_load * r_load / r_cw;
}

double rcm_residual(const Eigen::Vector3d& point, const Eigen::Vector3d& direction,
                    const Eigen::Vector3d& rcm) {
  return point_line_distance(point, direction, rcm);
}

JointState interpolate_joint(std::span<const double> q0, std::span<const double> q1, double s) {
  if (q0.size() != q1.size()) throw Error(ErrorCode::LengthMismatch, "joint states differ in length");
  if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::BadParameter, "s must lie in [0,1]");
  JointState out(q0.size());
  for (std::size_t n = 0; n < q0.size(); ++n) out[n] = (1.0 - s) * q0[n] + s * q1[n];
  return out;
}

}  // namespace surgplan
