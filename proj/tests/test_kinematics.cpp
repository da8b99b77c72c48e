#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "surgplan/error.hpp"
#include "surgplan/json_io.hpp"
#include "surgplan/kinematics.hpp"

using namespace surgplan;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

SerialRobotModel ur5() {
  return std::get<SerialRobotModel>(json_io::read_robot_config_file(std::string(SURGPLAN_CONFIG_DIR) + "/ur5.json"));
}

SerialRobotModel planar_2r() {
  SerialRobotModel m;
  m.name = "2r";
  m.joints = {{"q1", 1000, 0, 0, 0, JointKind::Revolute, -M_PI, M_PI},
              {"q2", 1000, 0, 0, 0, JointKind::Revolute, -M_PI, M_PI}};
  return m;
}

// Independent chain product on plain arrays.
using M4 = std::array<std::array<double, 4>, 4>;

M4 mul(const M4& a, const M4& b) {
  M4 c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

M4 from_pose(const Pose& p) {
  const double w = p.rotation.w(), x = p.rotation.x(), y = p.rotation.y(), z = p.rotation.z();
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w), p.translation.x()},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w), p.translation.y()},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y), p.translation.z()},
           {0, 0, 0, 1}}};
}

M4 dh_oracle(double a, double alpha, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta), ca = std::cos(alpha), sa = std::sin(alpha);
  return {{{ct, -st * ca, st * sa, a * ct}, {st, ct * ca, -ct * sa, a * st}, {0, sa, ca, d}, {0, 0, 0, 1}}};
}

M4 fk_oracle(const SerialRobotModel& m, const std::vector<double>& q) {
  M4 t = from_pose(m.base_pose);
  for (std::size_t i = 0; i < m.joints.size(); ++i) {
    const auto& j = m.joints[i];
    const bool prismatic = j.kind == JointKind::Prismatic;
    t = mul(t, dh_oracle(j.a, j.alpha, j.d + (prismatic ? q[i] : 0.0), j.theta_offset + (prismatic ? 0.0 : q[i])));
  }
  return mul(t, from_pose(m.tool_pose));
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(-500, 500);
  Pose p;
  p.rotation = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
  p.translation = {u(rng), u(rng), u(rng)};
  return p;
}

std::vector<double> random_q(std::mt19937_64& rng, const SerialRobotModel& m) {
  std::vector<double> q;
  for (const auto& j : m.joints) q.push_back(std::uniform_real_distribution<double>(j.lo, j.hi)(rng));
  return q;
}

void expect_matches_oracle(const SerialRobotModel& m, const std::vector<double>& q) {
  const M4 o = fk_oracle(m, q);
  const Eigen::Isometry3d t = fk_dh(m, q).tool;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(t.translation()[i], o[i][3], 1e-9);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(t.linear()(i, j), o[i][j], 1e-12);
  }
}

}  // namespace

TEST(ForwardKinematics, PrismaticAndPlanarExamples) {
  SerialRobotModel slide;
  slide.joints = {{"z", 0, 0, 0, 0, JointKind::Prismatic, -100, 100}};
  const std::vector<double> five{5.0};
  EXPECT_EQ(fk_dh(slide, five).tool.translation(), Eigen::Vector3d(0, 0, 5));

  const std::vector<double> zero{0.0, 0.0};
  const FkResult fk = fk_dh(planar_2r(), zero);
  EXPECT_EQ(fk.tool.translation(), Eigen::Vector3d(2000, 0, 0));
  ASSERT_EQ(fk.frames.size(), 3u);
  EXPECT_EQ(fk.frames[1].translation(), Eigen::Vector3d(1000, 0, 0));

  const std::vector<double> wrong{0.0};
  EXPECT_EQ(code_of([&] { fk_dh(planar_2r(), wrong); }), ErrorCode::LengthMismatch);
}

TEST(ForwardKinematics, Ur5AgainstMatrixOracle) {
  const SerialRobotModel m = ur5();
  ASSERT_EQ(m.dof(), 6u);
  std::mt19937_64 rng(41);
  for (int n = 0; n < 500; ++n) expect_matches_oracle(m, random_q(rng, m));
}

TEST(ForwardKinematics, RandomChainsAgainstMatrixOracle) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> len(-400, 400), ang(-M_PI, M_PI);
  for (int n = 0; n < 500; ++n) {
    SerialRobotModel m;
    m.base_pose = random_pose(rng);
    m.tool_pose = random_pose(rng);
    const int dof = 1 + static_cast<int>(rng() % 7);
    for (int i = 0; i < dof; ++i) {
      DHJoint j{"j" + std::to_string(i), len(rng), ang(rng), len(rng), ang(rng), JointKind::Revolute, -M_PI, M_PI};
      if (rng() % 4 == 0) {
        j.kind = JointKind::Prismatic;
        j.lo = -200;
        j.hi = 200;
      }
      m.joints.push_back(j);
    }
    expect_matches_oracle(m, random_q(rng, m));
  }
}

TEST(Jacobian, PlanarAndPrismatic) {
  const std::vector<double> zero{0.0, 0.0};
  const Eigen::MatrixXd j = jacobian_fd(planar_2r(), zero);
  ASSERT_EQ(j.rows(), 6);
  ASSERT_EQ(j.cols(), 2);
  EXPECT_NEAR((j.col(0).head<3>() - Eigen::Vector3d(0, 2000, 0)).norm(), 0, 1e-4);
  EXPECT_NEAR((j.col(1).head<3>() - Eigen::Vector3d(0, 1000, 0)).norm(), 0, 1e-4);
  EXPECT_NEAR((j.col(0).tail<3>() - Eigen::Vector3d(0, 0, 1)).norm(), 0, 1e-8);

  SerialRobotModel slide;
  slide.base_pose.rotation = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 1, 0).normalized());
  slide.joints = {{"z", 0, 0, 0, 0, JointKind::Prismatic, -100, 100}};
  const std::vector<double> q{3.0};
  const Eigen::MatrixXd js = jacobian_fd(slide, q);
  const Eigen::Vector3d axis = slide.base_pose.rotation * Eigen::Vector3d::UnitZ();
  EXPECT_NEAR((js.col(0).head<3>() - axis).norm(), 0, 1e-8);
  EXPECT_NEAR(js.col(0).tail<3>().norm(), 0, 1e-9);
}

TEST(Jacobian, StepHalvingIsConsistent) {
  const SerialRobotModel m = ur5();
  std::mt19937_64 rng(47);
  for (int n = 0; n < 50; ++n) {
    const auto q = random_q(rng, m);
    const Eigen::MatrixXd a = jacobian_fd(m, q, 1e-4);
    const Eigen::MatrixXd b = jacobian_fd(m, q, 5e-5);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    EXPECT_LT((a - b).cwiseAbs().maxCoeff() / scale, 1e-6);
  }
}

TEST(InverseKinematics, SeedAtTargetReturnsImmediately) {
  const SerialRobotModel m = ur5();
  const std::vector<double> seed{0.3, -1.2, 1.1, -0.5, 1.4, 0.2};
  const IkResult r = ik_dls(m, fk_dh(m, seed).tool, seed);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.q, seed);
}

TEST(InverseKinematics, UnreachableThrowsWithBestEffort) {
  Eigen::Isometry3d target = Eigen::Isometry3d::Identity();
  target.translation() = Eigen::Vector3d(3000, 0, 0);
  const std::vector<double> seed{0.2, 0.3};
  try {
    ik_dls(planar_2r(), target, seed);
    FAIL() << "expected NotConverged";
  } catch (const NotConvergedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotConverged);
    EXPECT_GT(e.best().pos_error, 0.0);
    EXPECT_GE(e.best().pos_error, 1000.0 - 1e-9);
    EXPECT_LT(e.best().pos_error, 1100.0);
  }
}

TEST(InverseKinematics, Ur5RoundTrip) {
  const SerialRobotModel m = ur5();
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-M_PI, M_PI), jitter(-0.2, 0.2);
  int solved = 0;
  for (int n = 0; n < 100; ++n) {
    std::vector<double> truth(6), seed(6);
    for (int i = 0; i < 6; ++i) {
      truth[i] = u(rng);
      seed[i] = truth[i] + jitter(rng);
    }
    const Eigen::Isometry3d target = fk_dh(m, truth).tool;
    try {
      const IkResult r = ik_dls(m, target, seed);
      const Eigen::Isometry3d got = fk_dh(m, r.q).tool;
      const auto e = pose_error(got, target);
      if (e.head<3>().norm() <= 1e-3 && e.tail<3>().norm() <= 1e-6 && r.iterations <= 200) ++solved;
    } catch (const NotConvergedError&) {
    }
  }
  EXPECT_GE(solved, 95);
}

TEST(RotationLog, SmallAndNearPi) {
  const Eigen::Vector3d axis = Eigen::Vector3d(1, -2, 0.5).normalized();
  for (double angle : {1e-9, 0.1, 2.0, M_PI - 1e-7}) {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    EXPECT_NEAR((rotation_log(r) - angle * axis).norm(), 0, 1e-6) << angle;
  }
}

TEST(SphericalArm, ZeroRotationAndTipAtRcm) {
  const SphericalRcmModel m;
  const Eigen::Vector3d rcm(10, 20, 30);
  const std::vector<double> q{0, 0, m.instrument_offset + 50};
  const SphericalFk fk = spherical_fk(m, q, rcm);
  EXPECT_NEAR((fk.axis - m.reference_direction).norm(), 0, 1e-15);
  EXPECT_NEAR((fk.tip - (rcm + 50 * m.reference_direction)).norm(), 0, 1e-12);

  const std::vector<double> at_rcm{M_PI / 2, 0, m.instrument_offset};
  EXPECT_NEAR((spherical_fk(m, at_rcm, rcm).tip - rcm).norm(), 0, 1e-12);

  // The azimuth turns the tilt plane about the vertical.
  const double arc = 40.0;
  const std::vector<double> q0{0, arc, m.instrument_offset};
  const std::vector<double> q90{M_PI / 2, arc, m.instrument_offset};
  auto horizontal = [&](const Eigen::Vector3d& a) {
    return Eigen::Vector3d(a - a.dot(m.reference_direction) * m.reference_direction);
  };
  const Eigen::Vector3d h0 = horizontal(spherical_fk(m, q0, rcm).axis);
  const Eigen::Vector3d h90 = horizontal(spherical_fk(m, q90, rcm).axis);
  EXPECT_GT(h0.norm(), 0.1);
  const Eigen::Vector3d turned = Eigen::AngleAxisd(M_PI / 2, -m.reference_direction) * h0;
  EXPECT_NEAR((h90 - turned).norm(), 0, 1e-12);
  EXPECT_NEAR(std::acos(spherical_fk(m, q0, rcm).axis.dot(m.reference_direction)), arc / m.arc_radius, 1e-12);
}

TEST(SphericalArm, RcmInvariant) {
  const SphericalRcmModel m;
  const Eigen::Vector3d rcm(-5, 7, 120);
  std::mt19937_64 rng(59);
  for (int n = 0; n < 2000; ++n) {
    const std::vector<double> q{std::uniform_real_distribution<double>(m.azimuth.lo, m.azimuth.hi)(rng),
                                std::uniform_real_distribution<double>(m.arc.lo, m.arc.hi)(rng),
                                std::uniform_real_distribution<double>(m.insertion.lo, m.insertion.hi)(rng)};
    const SphericalFk fk = spherical_fk(m, q, rcm);
    EXPECT_LE(rcm_residual(fk.tip, fk.axis, rcm), 1e-9);
    EXPECT_NEAR(fk.axis.norm(), 1.0, 1e-14);
  }
}

TEST(SphericalArm, InverseExamples) {
  const SphericalRcmModel m;
  const Eigen::Vector3d rcm(0, 0, 100);
  const JointState q = spherical_ik(m, rcm, rcm + 80 * m.reference_direction);
  EXPECT_NEAR(q[0], 0, 1e-12);
  EXPECT_NEAR(q[1], 0, 1e-12);
  EXPECT_NEAR(q[2], m.instrument_offset + 80, 1e-12);

  EXPECT_EQ(code_of([&] { spherical_ik(m, rcm, rcm); }), ErrorCode::DegenerateTarget);

  // 85 degrees off the reference direction: past the 75 degree arc travel.
  const Eigen::Vector3d dir(std::sin(85 * M_PI / 180), 0, -std::cos(85 * M_PI / 180));
  try {
    spherical_ik(m, rcm, rcm + 60 * dir);
    FAIL() << "expected LimitViolation";
  } catch (const LimitViolationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::LimitViolation);
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_EQ(e.violations()[0].joint, "d_arc");
    EXPECT_NEAR(e.violations()[0].amount, m.arc_radius * 10 * M_PI / 180, 1e-9);
    EXPECT_NE(std::string(e.what()).find("d_arc"), std::string::npos);
  }
  // Deeper than the insertion travel allows.
  try {
    spherical_ik(m, rcm, rcm + 400 * m.reference_direction);
    FAIL() << "expected LimitViolation";
  } catch (const LimitViolationError& e) {
    EXPECT_EQ(e.violations().at(0).joint, "d_ins");
  }
}

TEST(SphericalArm, InverseForwardRoundTrip) {
  const SphericalRcmModel m;
  const Eigen::Vector3d rcm(30, -10, 90);
  std::mt19937_64 rng(61);
  for (int n = 0; n < 2000; ++n) {
    const std::vector<double> q{std::uniform_real_distribution<double>(-3.1, 3.1)(rng),
                                std::uniform_real_distribution<double>(0.5, m.arc.hi)(rng),
                                std::uniform_real_distribution<double>(m.instrument_offset + 1, m.insertion.hi)(rng)};
    const Eigen::Vector3d target = spherical_fk(m, q, rcm).tip;
    const Eigen::Vector3d back = spherical_fk(m, spherical_ik(m, rcm, target), rcm).tip;
    EXPECT_LE((back - target).norm(), 1e-6);
  }
}

TEST(Counterweight, LeverLaw) {
  EXPECT_EQ(counterweight_balance(1.0, 300.0, 150.0), 2.0);
  EXPECT_EQ(counterweight_balance(0.0, 300.0, 150.0), 0.0);
  EXPECT_EQ(counterweight_balance(3.7, 210.0, 210.0), 3.7);
  EXPECT_EQ(code_of([] { counterweight_balance(1.0, 300.0, 0.0); }), ErrorCode::BadLeverArm);
  EXPECT_EQ(code_of([] { counterweight_balance(1.0, 300.0, -5.0); }), ErrorCode::BadLeverArm);
  EXPECT_EQ(code_of([] { counterweight_balance(-1.0, 300.0, 150.0); }), ErrorCode::BadParameter);
}

TEST(RcmResidual, ExamplesAndSamplingOracle) {
  EXPECT_EQ(rcm_residual({0, 0, 0}, {0, 0, 1}, {0, 0, 17}), 0.0);
  EXPECT_NEAR(rcm_residual({0, 0, 0}, {0, 0, 1}, {1, 0, 5}), 1.0, 1e-15);

  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-100, 100);
  std::normal_distribution<double> nd(0, 1);
  for (int n = 0; n < 20; ++n) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const Eigen::Vector3d dir = Eigen::Vector3d(nd(rng), nd(rng), nd(rng)).normalized();
    Eigen::Vector3d rcm(u(rng), u(rng), u(rng));
    if (rcm_residual(p, dir, rcm) < 1.0) continue;
    const double reach = (rcm - p).norm() + 10;
    double best = 1e300;
    constexpr int kSamples = 100000;
    for (int s = 0; s <= kSamples; ++s) {
      const double t = -reach + 2 * reach * s / kSamples;
      best = std::min(best, (p + t * dir - rcm).norm());
    }
    EXPECT_NEAR(rcm_residual(p, dir, rcm), best, 1e-4);
  }
}

TEST(Interpolation, EndpointsAndMidpoint) {
  const std::vector<double> a{0, 10, -4}, b{2, 20, 4};
  EXPECT_EQ(interpolate_joint(a, b, 0.0), a);
  EXPECT_EQ(interpolate_joint(a, b, 1.0), b);
  EXPECT_EQ(interpolate_joint(a, b, 0.5), (std::vector<double>{1, 15, 0}));
  const std::vector<double> short_q{1};
  EXPECT_EQ(code_of([&] { interpolate_joint(a, short_q, 0.5); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { interpolate_joint(a, b, 1.5); }), ErrorCode::BadParameter);
}

TEST(RobotConfig, JsonRoundTripAndErrors) {
  const RobotModel m = ur5();
  EXPECT_EQ(json_io::robot_from_json(json_io::robot_to_json(m)), m);
  const RobotModel s = SphericalRcmModel{};
  EXPECT_EQ(json_io::robot_from_json(json_io::robot_to_json(s)), s);
  EXPECT_EQ(code_of([] { json_io::robot_from_json({{"kind", "delta"}, {"name", "x"}}); }), ErrorCode::BadRobotConfig);
  EXPECT_EQ(code_of([] { json_io::robot_from_json({{"kind", "serial_dh"}}); }), ErrorCode::MalformedDocument);
}
