// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "surgplan/image.hpp"
#include "surgplan/json_io.hpp"
#include "surgplan/planning.hpp"
#include "surgplan/render.hpp"
#include "surgplan/service.hpp"
#include "surgplan/volume.hpp"

using namespace surgplan;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  // False when the failure is a timing target scoped to hardware this machine does not have.
  bool counted = true;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string test_data(const std::string& name) { return std::string(SURGPLAN_TEST_DATA) + "/" + name; }
std::string sample_data(const std::string& name) { return std::string(SURGPLAN_SAMPLE_DATA) + "/" + name; }

SerialRobotModel ur5() {
  return std::get<SerialRobotModel>(json_io::read_robot_config_file(std::string(SURGPLAN_CONFIG_DIR) + "/ur5.json"));
}

Volume random_u8(std::mt19937_64& rng, std::size_t nx, std::size_t ny, std::size_t nz) {
  VolumeHeader h;
  h.sizes = {nx, ny, nz};
  std::vector<std::uint8_t> v(nx * ny * nz);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& x : v) x = static_cast<std::uint8_t>(d(rng));
  return Volume(h, std::move(v));
}

std::uint8_t window_gray(double v, double lo, double hi) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp((v - lo) / (hi - lo), 0.0, 1.0)));
}

// ---------------------------------------------------------------------------

Outcome nrrd_round_trip() {
  Outcome o;
  std::vector<std::string> docs;
  for (const char* f : {"fixture.nrrd", "fixture_gzip.nrrd", "int16_be_gzip.nrrd", "float_spacings.nrrd"})
    docs.push_back(read_file(test_data(f)));
  std::mt19937_64 rng(101);
  for (ScalarKind kind : {ScalarKind::UInt8, ScalarKind::Int16, ScalarKind::UInt16, ScalarKind::Float32}) {
    for (Encoding enc : {Encoding::Raw, Encoding::Gzip}) {
      VolumeHeader h;
      h.sizes = {7, 5, 3};
      h.kind = kind;
      h.encoding = enc;
      h.endian = rng() % 2 ? Endian::Big : Endian::Little;
      h.origin = {1.5, -2, 0.25};
      std::vector<double> vals(h.voxel_count());
      std::uniform_int_distribution<int> d(0, 255);
      for (auto& x : vals) x = kind == ScalarKind::Float32 ? d(rng) * 0.37 - 20 : d(rng);
      const auto bytes = write_nrrd(make_volume(h, vals));
      docs.emplace_back(bytes.begin(), bytes.end());
    }
  }
  const auto t0 = Clock::now();
  for (const std::string& doc : docs) {
    const Volume v = parse_nrrd(doc);
    const auto out = write_nrrd(v);
    const std::string again(out.begin(), out.end());
    o.require(parse_nrrd(again) == v, "parse(write(v)) != v");
    if (v.header().encoding == Encoding::Raw) {
      const auto payload = [](const std::string& s) { return s.substr(s.find("\n\n") + 2); };
      o.require(payload(again) == payload(doc), "raw payload not bitwise identical");
    }
  }
  const double t = seconds_since(t0);
  o.require(t < 1.0, "runtime " + fmt("%.3f s", t));
  if (o.pass) o.detail = std::to_string(docs.size()) + " fixtures, " + fmt("%.3f s", t);
  return o;
}

Outcome mip_oracle() {
  Outcome o;
  std::mt19937_64 rng(103);
  MipOptions opt;
  opt.mode = SampleMode::Nearest;
  opt.workers = 1;
  const auto t0 = Clock::now();
  for (int n = 0; n < 100; ++n) {
    const Volume v = random_u8(rng, 16, 16, 16);
    const double lo = std::uniform_int_distribution<int>(0, 120)(rng);
    const double hi = lo + std::uniform_int_distribution<int>(1, 135)(rng);
    for (SlicePlane view : {SlicePlane::Axial, SlicePlane::Coronal, SlicePlane::Sagittal}) {
      const Image img =
          render_mip(v, default_camera(v, view), ValueWindow(lo, hi), TransferFunction::grayscale(), {}, opt);
      for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t b = 0; b < 16; ++b) {
          double best = -1;
          for (std::size_t c = 0; c < 16; ++c) {
            const double x = view == SlicePlane::Axial     ? v.voxel_at(a, b, c)
                             : view == SlicePlane::Coronal ? v.voxel_at(a, c, b)
                                                           : v.voxel_at(c, a, b);
            if (x >= lo && x <= hi) best = std::max(best, x);
          }
          const std::uint8_t* px = img.pixel(a, b);
          // Grayscale ramps alpha with intensity; empty rays are transparent black.
          const std::uint8_t g = best < 0 ? 0 : window_gray(best, lo, hi);
          const std::array<std::uint8_t, 4> want{g, g, g, g};
          o.require(std::equal(want.begin(), want.end(), px), "pixel mismatch");
        }
    }
  }
  const double t = seconds_since(t0);
  o.require(t < 10.0, "runtime " + fmt("%.3f s", t));
  if (o.pass) o.detail = "100 volumes x 3 views, " + fmt("%.3f s", t);
  return o;
}

Outcome slice_exhaustive() {
  Outcome o;
  std::mt19937_64 rng(107);
  const Volume v = random_u8(rng, 32, 32, 32);
  const double lo = 40, hi = 210;
  const auto t0 = Clock::now();
  for (SlicePlane p : {SlicePlane::Axial, SlicePlane::Coronal, SlicePlane::Sagittal}) {
    for (std::int64_t idx = 0; idx < 32; ++idx) {
      const Image img = extract_slice(v, p, idx, ValueWindow(lo, hi));
      for (std::size_t a = 0; a < 32; ++a)
        for (std::size_t b = 0; b < 32; ++b) {
          const auto k = static_cast<std::size_t>(idx);
          const double x = p == SlicePlane::Axial     ? v.voxel_at(a, b, k)
                           : p == SlicePlane::Coronal ? v.voxel_at(a, k, b)
                                                      : v.voxel_at(k, a, b);
          const std::uint8_t g = window_gray(x, lo, hi);
          const std::uint8_t* px = img.pixel(a, b);
          o.require(px[0] == g && px[1] == g && px[2] == g && px[3] == 255, "slice pixel mismatch");
        }
    }
  }
  const double t = seconds_since(t0);
  o.require(t < 5.0, "runtime " + fmt("%.3f s", t));
  if (o.pass) o.detail = "96 slices, " + fmt("%.3f s", t);
  return o;
}

Outcome window_monotonicity() {
  Outcome o;
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(0, 255);
  for (int n = 0; n < 100; ++n) {
    const Volume v = random_u8(rng, 10, 9, 8);
    Camera cam;
    cam.eye = {4.5 + u(rng) / 50, -20, 3.5 + u(rng) / 60};
    cam.look_at = {4.5, 4, 3.5};
    cam.up = {0, 0, 1};
    cam.width = 12;
    cam.height = 10;
    cam.ortho_width = 14;
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const ValueWindow narrow(a, b + 1e-3);
    const ValueWindow wide(a - u(rng) / 4, b + 1e-3 + u(rng) / 4);
    MipOptions opt;
    opt.workers = 1;
    const MaxImage m1 = mip_max(v, cam, narrow, {}, opt);
    const MaxImage m2 = mip_max(v, cam, wide, {}, opt);
    for (std::size_t i = 0; i < m1.values.size(); ++i) {
      if (!m1.values[i]) continue;
      o.require(m2.values[i] && *m2.values[i] >= *m1.values[i], "wider window decreased a pixel max");
    }
  }
  if (o.pass) o.detail = "100 volumes";
  return o;
}

// 4x4 chain product on plain arrays.
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
M4 fk_oracle(const SerialRobotModel& m, const std::vector<double>& q) {
  M4 t = from_pose(m.base_pose);
  for (std::size_t i = 0; i < m.joints.size(); ++i) {
    const auto& j = m.joints[i];
    const bool pr = j.kind == JointKind::Prismatic;
    const double th = j.theta_offset + (pr ? 0.0 : q[i]), d = j.d + (pr ? q[i] : 0.0);
    const double ct = std::cos(th), st = std::sin(th), ca = std::cos(j.alpha), sa = std::sin(j.alpha);
    t = mul(t, {{{ct, -st * ca, st * sa, j.a * ct}, {st, ct * ca, -ct * sa, j.a * st}, {0, sa, ca, d}, {0, 0, 0, 1}}});
  }
  return mul(t, from_pose(m.tool_pose));
}

Outcome fk_oracle_check() {
  Outcome o;
  std::mt19937_64 rng(113);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_real_distribution<double> len(-400, 400), ang(-M_PI, M_PI);
  const SerialRobotModel arm = ur5();
  double worst_p = 0, worst_r = 0;
  for (int n = 0; n < 1000; ++n) {
    SerialRobotModel m;
    if (n < 500) {
      m = arm;
    } else {
      for (Pose* p : {&m.base_pose, &m.tool_pose}) {
        p->rotation = Eigen::Quaterniond(nd(rng), nd(rng), nd(rng), nd(rng)).normalized();
        p->translation = {len(rng), len(rng), len(rng)};
      }
      const int dof = 1 + static_cast<int>(rng() % 7);
      for (int i = 0; i < dof; ++i) {
        DHJoint j{"j", len(rng), ang(rng), len(rng), ang(rng), JointKind::Revolute, -M_PI, M_PI};
        if (rng() % 4 == 0) {
          j.kind = JointKind::Prismatic;
          j.lo = -200;
          j.hi = 200;
        }
        m.joints.push_back(j);
      }
    }
    std::vector<double> q;
    for (const auto& j : m.joints) q.push_back(std::uniform_real_distribution<double>(j.lo, j.hi)(rng));
    const M4 want = fk_oracle(m, q);
    const Eigen::Isometry3d got = fk_dh(m, q).tool;
    for (int i = 0; i < 3; ++i) {
      worst_p = std::max(worst_p, std::abs(got.translation()[i] - want[i][3]));
      for (int j = 0; j < 3; ++j) worst_r = std::max(worst_r, std::abs(got.linear()(i, j) - want[i][j]));
    }
  }
  o.require(worst_p <= 1e-9, "position error " + fmt("%.3g mm", worst_p));
  o.require(worst_r <= 1e-12, "rotation error " + fmt("%.3g", worst_r));
  if (o.pass) o.detail = "1000 configs, max " + fmt("%.2g mm", worst_p) + " / " + fmt("%.2g", worst_r);
  return o;
}

Outcome ik_round_trip() {
  Outcome o;
  const SerialRobotModel m = ur5();
  std::mt19937_64 rng(127);
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
      const auto e = pose_error(fk_dh(m, r.q).tool, target);
      if (e.head<3>().norm() <= 1e-3 && e.tail<3>().norm() <= 1e-6 && r.iterations <= 200) ++solved;
    } catch (const NotConvergedError&) {
    }
  }
  o.require(solved >= 95, std::to_string(solved) + "/100 solved");
  if (o.pass) o.detail = std::to_string(solved) + "/100 solved";
  return o;
}

Outcome rcm_invariant() {
  Outcome o;
  const SphericalRcmModel m;
  std::mt19937_64 rng(131);
  std::uniform_real_distribution<double> pos(-200, 200);
  double worst = 0, worst_trip = 0;
  for (int n = 0; n < 10000; ++n) {
    const Eigen::Vector3d rcm(pos(rng), pos(rng), pos(rng));
    const std::vector<double> q{std::uniform_real_distribution<double>(m.azimuth.lo, m.azimuth.hi)(rng),
                                std::uniform_real_distribution<double>(m.arc.lo, m.arc.hi)(rng),
                                std::uniform_real_distribution<double>(m.insertion.lo, m.insertion.hi)(rng)};
    const SphericalFk fk = spherical_fk(m, q, rcm);
    worst = std::max(worst, rcm_residual(fk.tip, fk.axis, rcm));
    if (q[2] > m.instrument_offset + 1 && q[1] > 0.5) {
      const Eigen::Vector3d back = spherical_fk(m, spherical_ik(m, rcm, fk.tip), rcm).tip;
      worst_trip = std::max(worst_trip, (back - fk.tip).norm());
    }
  }
  o.require(worst <= 1e-9, "rcm residual " + fmt("%.3g mm", worst));
  o.require(worst_trip <= 1e-6, "ik/fk round trip " + fmt("%.3g mm", worst_trip));
  if (o.pass) o.detail = "10^4 configs, residual " + fmt("%.2g mm", worst) + ", round trip " + fmt("%.2g mm", worst_trip);
  return o;
}

Outcome counterweight() {
  Outcome o;
  o.require(counterweight_balance(1.0, 300.0, 150.0) == 2.0, "(1 kg, 300, 150) != 2 kg");
  std::mt19937_64 rng(137);
  std::uniform_real_distribution<double> mass(0, 20), lever(1, 1000);
  double worst = 0;
  for (int n = 0; n < 1000; ++n) {
    const double m = mass(rng), rl = lever(rng), rc = lever(rng);
    const double cw = counterweight_balance(m, rl, rc);
    // Torque balance about the pivot.
    const long double load = static_cast<long double>(m) * rl, counter = static_cast<long double>(cw) * rc;
    if (load > 0) worst = std::max(worst, static_cast<double>(std::abs(counter - load) / load));
  }
  o.require(worst <= 1e-12, "relative error " + fmt("%.3g", worst));
  if (o.pass) o.detail = "1000 triples, max rel " + fmt("%.2g", worst);
  return o;
}

SerialRobotModel stick(const Capsule& c) {
  SerialRobotModel m;
  m.name = "stick";
  m.joints = {{"slide", 0, 0, 0, 0, JointKind::Prismatic, -1, 1}};
  m.capsules = {{"bar", 0, c.axis.a, c.axis.b, c.radius}};
  return m;
}

double dense_clearance(const Capsule& c1, const Capsule& c2) {
  auto at = [](const Segment& s, double u) { return Eigen::Vector3d(s.a + u * (s.b - s.a)); };
  constexpr int kN = 1000;
  std::vector<Eigen::Vector3d> p(kN + 1), q(kN + 1);
  for (int i = 0; i <= kN; ++i) {
    p[i] = at(c1.axis, double(i) / kN);
    q[i] = at(c2.axis, double(i) / kN);
  }
  double best = 1e300;
  int bi = 0, bj = 0;
  for (int i = 0; i <= kN; ++i)
    for (int j = 0; j <= kN; ++j) {
      const double d = (p[i] - q[j]).squaredNorm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  // Refine inside the neighbouring cells.
  constexpr int kF = 200;
  for (int i = 0; i <= kF; ++i)
    for (int j = 0; j <= kF; ++j) {
      const double u = std::clamp((bi - 1 + 2.0 * i / kF) / kN, 0.0, 1.0);
      const double v = std::clamp((bj - 1 + 2.0 * j / kF) / kN, 0.0, 1.0);
      best = std::min(best, (at(c1.axis, u) - at(c2.axis, v)).squaredNorm());
    }
  return std::sqrt(best) - c1.radius - c2.radius;
}

Outcome collision_oracle() {
  Outcome o;
  std::mt19937_64 rng(139);
  std::uniform_real_distribution<double> u(-50, 50), r(1, 20);
  double worst = 0;
  const std::map<std::string, JointState> none;
  for (int n = 0; n < 100; ++n) {
    const Capsule c1{{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}}, r(rng)};
    const Capsule c2{{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}}, r(rng)};
    Scene s;
    s.settings.collision_report_threshold = 1e9;
    s.robot_models["a"] = stick(c1);
    s.robot_models["b"] = stick(c2);
    s.robots = {{"r1", "a", {}, {0.0}, ""}, {"r2", "b", {}, {0.0}, ""}};
    const auto pairs = check_collisions(s, none);
    std::swap(s.robots[0], s.robots[1]);
    const auto swapped = check_collisions(s, none);
    o.require(pairs.size() == 1, "expected one pair");
    if (pairs.size() != 1) break;
    o.require(pairs == swapped, "report depends on robot order");
    o.require(std::abs(capsule_clearance(c1, c2) - capsule_clearance(c2, c1)) <= 1e-12, "capsule_clearance asymmetric");
    worst = std::max(worst, std::abs(pairs[0].clearance - dense_clearance(c1, c2)));
  }
  o.require(worst <= 1e-3, "oracle deviation " + fmt("%.3g mm", worst));
  if (o.pass) o.detail = "100 pairs, max deviation " + fmt("%.2g mm", worst);
  return o;
}

Scene sample_scene() {
  return load_scene(read_file(sample_data("sample_scene.json")), SceneResolver::filesystem(SURGPLAN_SAMPLE_DATA));
}

Outcome insertion_simulation() {
  Outcome o;
  std::vector<std::pair<Scene, std::array<std::string, 3>>> cases;
  cases.push_back({sample_scene(), {"arm", "t1", "liver"}});
  std::mt19937_64 rng(149);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 0; n < 20; ++n) {
    Scene s;
    s.robot_models["sph"] = SphericalRcmModel{};
    s.robots = {{"arm", "sph", {}, {u(rng), 20 + 10 * u(rng), 0.0}, ""}};
    s.trocars["t"] = {100 * u(rng), 100 * u(rng), 150};
    const Eigen::Vector3d dir = Eigen::Vector3d(0.6 * u(rng), 0.6 * u(rng), -1).normalized();
    s.targets["x"] = s.trocars["t"] + (60 + 80 * std::abs(u(rng))) * dir;
    cases.push_back({s, {"arm", "t", "x"}});
  }
  double worst_tip = 0, worst_rcm = 0;
  for (const auto& [scene, ids] : cases) {
    const Trajectory t = simulate_insertion(scene, ids[0], ids[1], ids[2], 50);
    worst_tip = std::max(worst_tip, (t.samples.back().tip - scene.target_world(ids[2])).norm());
    for (std::size_t k = 0; k < t.samples.size(); ++k) {
      if (k > 0) o.require(t.samples[k].s > t.samples[k - 1].s, "s not strictly increasing");
      if (t.samples[k].phase == TrajectoryPhase::Insert) worst_rcm = std::max(worst_rcm, t.samples[k].rcm_residual);
    }
  }
  o.require(worst_tip <= 0.5, "final tip " + fmt("%.3g mm", worst_tip));
  o.require(worst_rcm <= 1e-6, "insert residual " + fmt("%.3g mm", worst_rcm));
  if (o.pass)
    o.detail = std::to_string(cases.size()) + " trajectories, tip " + fmt("%.2g mm", worst_tip) + ", rcm " +
               fmt("%.2g mm", worst_rcm);
  return o;
}

Outcome scene_persistence() {
  Outcome o;
  Scene s;
  s.volume_ref = "phantom.nrrd";
  s.robot_models["ur5"] = ur5();
  s.robot_models["sph"] = SphericalRcmModel{};
  s.robots = {{"holder", "ur5", {Eigen::Quaterniond(Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ())), {350, -200, 150}},
               {0.1, -1.2, 0.7, 0.0, 1.5, 0.25}, "endoscope"},
              {"arm", "sph", {Eigen::Quaterniond::Identity(), {30, 0, 115}}, {0.5, 12.25, 140}, "instrument"}};
  s.trocars = {{"t1", {30, 0, 115}}, {"t2", {-20.125, -40, 118.1}}};
  for (int k = 0; k < 3; ++k) {
    stroke_edit(s, StrokeAction::begin({1, 0, 0.1 * k, 1}, "2024-01-0" + std::to_string(k + 1)));
    for (int i = 0; i < 4; ++i) stroke_edit(s, StrokeAction::append({0.1 + 3.7 * i, -k / 3.0, 1e-3 * i}));
    stroke_edit(s, StrokeAction::end());
  }
  apply_patient_preset(s, PatientPreset::left_lateral_semiprone(45));
  SceneResolver resolver;
  resolver.has_volume = [](const std::string&) { return true; };
  const std::string first = save_scene(s);
  const Scene back = load_scene(first, resolver);
  o.require(back == s, "load(save(s)) != s");
  o.require(save_scene(back) == first, "save(load(save(s))) differs");
  o.require(back.preset.kind == PresetKind::LeftLateralSemiprone && back.preset.angle_deg == 45.0,
            "preset not preserved");
  o.require(back.robots.size() == 2 && back.strokes.size() == 3 && back.trocars.size() == 2, "scene contents");
  if (o.pass) o.detail = std::to_string(first.size()) + " bytes, byte-identical";
  return o;
}

Outcome service_equivalence() {
  Outcome o;
  service::Service svc(service::ServiceOptions{SURGPLAN_SAMPLE_DATA, 0});
  const std::string sid = svc.handle({"POST", "/sessions", {}, ""}).json().at("id");
  auto call = [&](const std::string& method, const std::string& tail, const std::string& body,
                  std::map<std::string, std::string> q = {}) {
    return svc.handle({method, "/sessions/" + sid + tail, std::move(q), body});
  };
  auto png = [](const service::Response& r) {
    return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(r.body.data()), r.body.size()));
  };
  const std::string bytes = read_file(sample_data("phantom.nrrd"));
  const Volume v = parse_nrrd(bytes);
  const std::string vid = call("POST", "/volumes", bytes).json().at("id");

  for (SlicePlane p : {SlicePlane::Axial, SlicePlane::Coronal, SlicePlane::Sagittal}) {
    const auto r = call("GET", "/volumes/" + vid + "/slice", "",
                        {{"plane", std::string(slice_plane_name(p))}, {"index", "20"}, {"lo", "10"}, {"hi", "200"}});
    o.require(r.status == 200, "slice status");
    if (r.status == 200) {
      o.require(png(r).rgba == extract_slice(v, p, 20, ValueWindow(10, 200)).rgba, "slice differs");
      o.require(r.body == [&] {
        const auto enc = encode_png(extract_slice(v, p, 20, ValueWindow(10, 200)));
        return std::string(enc.begin(), enc.end());
      }(), "slice PNG bytes differ");
    }
  }

  const json body = {{"volume", vid},
                     {"view", "coronal"},
                     {"window", {{"lo", 30}, {"hi", 255}}},
                     {"clips", {{"cut_out_box", {{"min", {-20, -60, 0}}, {"max", {60, 60, 80}}}}}}};
  const auto r = call("POST", "/render/mip", body.dump());
  o.require(r.status == 200, "render status");
  if (r.status == 200) {
    const service::MipRequest req = service::parse_mip_request(body, v);
    const auto enc = encode_png(render_mip(v, req.camera, req.window, req.tf, req.clips, req.options));
    o.require(r.body == std::string(enc.begin(), enc.end()), "render PNG bytes differ");
  }

  json doc = json::parse(read_file(sample_data("sample_scene.json")));
  doc["volume_ref"] = vid;
  o.require(call("PUT", "/scene", doc.dump()).status == 200, "scene upload");
  const Scene direct = *svc.session(sid)->scene();
  for (auto [robot, trocar, target] : {std::array<const char*, 3>{"arm", "t1", "liver"},
                                       std::array<const char*, 3>{"holder", "t2", "esophagus"}}) {
    const auto plan = call("POST", "/plan/reach", json{{"robot", robot}, {"trocar", trocar}, {"target", target}}.dump());
    o.require(plan.json() == report_to_json(plan_reach(direct, robot, trocar, target)), "plan report differs");
  }
  if (o.pass) o.detail = "slice x3, render, plan x2 equal; no web client involved";
  return o;
}

Outcome performance() {
  Outcome o;
  VolumeHeader h;
  h.sizes = {256, 256, 256};
  std::vector<std::uint8_t> vox(h.voxel_count());
  for (std::size_t k = 0; k < 256; ++k)
    for (std::size_t j = 0; j < 256; ++j)
      for (std::size_t i = 0; i < 256; ++i)
        vox[(k * 256 + j) * 256 + i] = static_cast<std::uint8_t>((i * 7 + j * 13 + k * 29 + ((i ^ j ^ k) & 31)) & 255);
  const Volume v(h, std::move(vox));
  Camera cam = default_camera(v, SlicePlane::Axial);
  cam.width = 512;
  cam.height = 512;
  const ValueWindow w(0, 255);
  const auto tf = TransferFunction::grayscale();

  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  MipOptions par;
  par.workers = std::max(4u, cores);
  MipOptions single;
  single.workers = 1;

  render_mip(v, cam, w, tf, {}, par);  // warm-up
  double best = 1e9;
  Image img_par;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = Clock::now();
    img_par = render_mip(v, cam, w, tf, {}, par);
    best = std::min(best, seconds_since(t0));
  }
  const Image img_single = render_mip(v, cam, w, tf, {}, single);
  o.require(img_par.rgba == img_single.rgba, "parallel output differs from single worker");

  double slice_best = 1e9;
  for (int rep = 0; rep < 10; ++rep) {
    const auto t0 = Clock::now();
    const Image s = extract_slice(v, SlicePlane::Coronal, 100 + rep, w);
    slice_best = std::min(slice_best, seconds_since(t0));
  }
  o.require(slice_best < 0.005, "slice " + fmt("%.2f ms", slice_best * 1e3));
  const std::string summary = "MIP " + fmt("%.0f ms", best * 1e3) + " with " + std::to_string(par.workers) +
                              " workers on " + std::to_string(cores) + " core(s), slice " +
                              fmt("%.2f ms", slice_best * 1e3) + ", parallel output bit-identical";
  if (o.pass && best >= 0.5) {
    o.pass = false;
    o.detail = summary + "; target is < 500 ms";
    // The target is defined for a 4-core desktop; a smaller machine cannot decide it.
    if (cores < 4) {
      o.counted = false;
      o.detail += " on a 4-core desktop, not counted on this host";
    }
    return o;
  }
  if (o.pass) o.detail = summary;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"nrrd_round_trip", nrrd_round_trip},
      {"mip_oracle", mip_oracle},
      {"slice_exhaustive", slice_exhaustive},
      {"window_monotonicity", window_monotonicity},
      {"fk_oracle", fk_oracle_check},
      {"ik_round_trip", ik_round_trip},
      {"rcm_invariant", rcm_invariant},
      {"counterweight", counterweight},
      {"collision_oracle", collision_oracle},
      {"insertion_simulation", insertion_simulation},
      {"scene_persistence", scene_persistence},
      {"service_equivalence", service_equivalence},
      {"performance", performance},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass || !o.counted ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
