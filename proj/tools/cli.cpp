#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "surgplan/error.hpp"
#include "surgplan/json_io.hpp"
#include "surgplan/planning.hpp"
#include "surgplan/render.hpp"
#include "surgplan/service.hpp"
#include "surgplan/volume.hpp"

namespace surgplan::cli {

namespace {

using nlohmann::json;

struct Flags {
  std::string volume;
  std::string scene;
  std::string robot_config;
  std::string plane = "axial";
  std::int64_t index = 0;
  std::optional<double> lo;
  std::optional<double> hi;
  std::string out;
  std::size_t steps = 50;
  int port = 8080;
  bool pretty = false;
  std::string robot, trocar, target;
};

SlicePlane plane_of(const std::string& name) {
  const auto p = parse_slice_plane(name);
  if (!p) throw Error(ErrorCode::BadParameter, "unknown plane '" + name + "'");
  return *p;
}

ValueWindow window_for(const Volume& v, const Flags& f) {
  const auto [lo, hi] = v.value_range();
  return ValueWindow(f.lo.value_or(lo), f.hi.value_or(hi > lo ? hi : lo + 1.0));
}

Scene load_scene_file(const Flags& f) {
  std::ifstream in(f.scene, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + f.scene);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(f.scene).parent_path().string();
  Scene scene = load_scene(buf.str(), SceneResolver::filesystem(dir.empty() ? "." : dir));
  if (!f.robot_config.empty()) {
    // The config replaces the model of the robot named on the command line.
    const RobotModel model = json_io::read_robot_config_file(f.robot_config);
    const RobotPlacement& placement = scene.robot(f.robot);
    if (robot_dof(model) != placement.state.size()) {
      throw Error(ErrorCode::BadRobotConfig, "config dof does not match robot '" + f.robot + "'");
    }
    scene.robot_models[placement.model_id] = model;
  }
  return scene;
}

void emit(std::ostream& out, const json& j, bool pretty) {
  out << (pretty ? j.dump(2) : j.dump()) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error(ErrorCode::IoError, "cannot write " + path);
  o << text;
  if (!o) throw Error(ErrorCode::IoError, "cannot write " + path);
}

int cmd_info(const Flags& f, std::ostream& out) {
  const Volume v = read_nrrd_file(f.volume);
  const auto& h = v.header();
  const auto [lo, hi] = v.value_range();
  if (f.pretty) {
    out << "sizes  " << h.sizes[0] << " x " << h.sizes[1] << " x " << h.sizes[2] << "\n"
        << "type   " << scalar_kind_name(h.kind) << "\n"
        << "range  [" << lo << ", " << hi << "]\n"
        << "pitch  " << v.min_pitch() << " mm\n";
    return 0;
  }
  emit(out, {{"sizes", h.sizes}, {"type", scalar_kind_name(h.kind)}, {"value_range", {lo, hi}},
             {"min_pitch", v.min_pitch()}, {"space_origin", json_io::vec3(h.origin)}},
       false);
  return 0;
}

int cmd_slice(const Flags& f, std::ostream& out) {
  const Volume v = read_nrrd_file(f.volume);
  const Image img = extract_slice(v, plane_of(f.plane), f.index, window_for(v, f));
  write_png_file(img, f.out);
  emit(out, {{"out", f.out}, {"width", img.width}, {"height", img.height}}, f.pretty);
  return 0;
}

int cmd_render(const Flags& f, std::ostream& out) {
  const Volume v = read_nrrd_file(f.volume);
  const Camera cam = default_camera(v, plane_of(f.plane));
  const Image img = render_mip(v, cam, window_for(v, f), TransferFunction::grayscale(), ClipSet{});
  write_png_file(img, f.out);
  emit(out, {{"out", f.out}, {"width", img.width}, {"height", img.height}}, f.pretty);
  return 0;
}

int cmd_reach(const Flags& f, std::ostream& out, std::ostream& err) {
  const Scene scene = load_scene_file(f);
  const FeasibilityReport report = plan_reach(scene, f.robot, f.trocar, f.target);
  emit(out, report_to_json(report), f.pretty);
  if (!report.feasible) {
    err << "InfeasiblePlan: " << report.reason << "\n";
    return 2;
  }
  return 0;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  const Scene scene = load_scene_file(f);
  const Trajectory traj = simulate_insertion(scene, f.robot, f.trocar, f.target, f.steps);
  const json j = trajectory_to_json(traj);
  if (f.out.empty()) {
    emit(out, j, f.pretty);
  } else {
    write_text(f.out, j.dump(2) + "\n");
    emit(out, {{"out", f.out}, {"samples", traj.samples.size()}}, f.pretty);
  }
  return 0;
}

int cmd_serve(const Flags& f, std::ostream& out) {
  service::ServiceOptions options;
  if (!f.scene.empty()) options.asset_dir = std::filesystem::path(f.scene).parent_path().string();
  service::Service svc(options);
  json hello = json::object();
  if (!f.scene.empty()) {
    const Scene scene = load_scene_file(f);
    auto s = svc.create_session();
    s->mutate([&](Scene& target) { target = scene; });
    hello["session"] = s->id();
  }
  service::HttpServer server(svc);
  hello["port"] = server.start("0.0.0.0", f.port);
  emit(out, hello, false);
  out.flush();
  server.wait();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surgical planning engine", "surgplan"};
  app.require_subcommand(1);
  Flags f;

  auto* info = app.add_subcommand("info", "Print a volume summary as JSON");
  info->add_option("--volume", f.volume, "NRRD volume")->required();
  info->add_flag("--pretty", f.pretty, "Human-readable output");

  auto window_flags = [&](CLI::App* c) {
    c->add_option("--volume", f.volume, "NRRD volume")->required();
    c->add_option("--plane", f.plane, "axial, coronal or sagittal");
    c->add_option("--lo", f.lo, "Window lower bound (default: volume minimum)");
    c->add_option("--hi", f.hi, "Window upper bound (default: volume maximum)");
    c->add_option("--out", f.out, "Output PNG")->required();
    c->add_flag("--pretty", f.pretty, "Indented JSON");
  };
  auto* slice = app.add_subcommand("slice", "Extract an axis-aligned slice to PNG");
  window_flags(slice);
  slice->add_option("--index", f.index, "Slice index")->required();
  auto* render = app.add_subcommand("render", "Render an orthographic MIP to PNG");
  window_flags(render);

  auto plan_flags = [&](CLI::App* c) {
    c->add_option("--scene", f.scene, "Scene document")->required();
    c->add_option("--robot-config", f.robot_config, "Robot model replacing the robot's own");
    c->add_flag("--pretty", f.pretty, "Indented JSON");
    c->add_option("robot", f.robot, "Robot id")->required();
    c->add_option("trocar", f.trocar, "Trocar id")->required();
    c->add_option("target", f.target, "Target id")->required();
  };
  auto* reach = app.add_subcommand("reach", "Plan a reach and print the feasibility report");
  plan_flags(reach);
  auto* simulate = app.add_subcommand("simulate", "Simulate the insertion trajectory");
  plan_flags(simulate);
  simulate->add_option("--steps", f.steps, "Number of samples (>= 2)");
  simulate->add_option("--out", f.out, "Trajectory JSON (default: stdout)");

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--port", f.port, "TCP port (0 picks a free one)");
  serve->add_option("--scene", f.scene, "Scene to load into an initial session");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*info) return cmd_info(f, out);
    if (*slice) return cmd_slice(f, out);
    if (*render) return cmd_render(f, out);
    if (*reach) return cmd_reach(f, out, err);
    if (*simulate) return cmd_simulate(f, out);
    if (*serve) return cmd_serve(f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace surgplan::cli
