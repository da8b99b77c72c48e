#include "surgplan/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>

#include "httplib.h"
#include "surgplan/error.hpp"
#include "surgplan/image.hpp"
#include "surgplan/json_io.hpp"

namespace surgplan::service {

using nlohmann::json;
using namespace json_io;

int status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownId:
      return 404;
    case ErrorCode::BadParameter:
    case ErrorCode::BadWindow:
    case ErrorCode::BadTransferFunction:
    case ErrorCode::BadCamera:
    case ErrorCode::BadClip:
    case ErrorCode::BadStep:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::OutOfBounds:
    case ErrorCode::DegenerateNormal:
    case ErrorCode::BadRange:
    case ErrorCode::BadAngle:
    case ErrorCode::LengthMismatch:
    case ErrorCode::BadTransform:
      return 400;
    default:
      return 422;
  }
}

// ---------------------------------------------------------------------------
// Session

std::shared_ptr<const Scene> Session::scene() const {
  std::shared_lock lock(state_);
  return scene_;
}

std::shared_ptr<const Volume> Session::volume(const std::string& id) const {
  std::shared_lock lock(state_);
  const auto it = volumes_.find(id);
  if (it == volumes_.end()) throw Error(ErrorCode::UnknownId, "volume '" + id + "'");
  return it->second;
}

bool Session::has_volume(const std::string& id) const {
  std::shared_lock lock(state_);
  return volumes_.contains(id);
}

std::string Session::add_volume(std::shared_ptr<const Volume> v) {
  std::unique_lock lock(state_);
  std::string id = "vol-" + std::to_string(next_volume_++);
  volumes_.emplace(id, std::move(v));
  return id;
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

Response json_response(const json& body, int status = 200) {
  return {status, "application/json", body.dump()};
}

Response error_response(int status, std::string_view name, std::string_view message) {
  return json_response({{"error", name}, {"message", message}}, status);
}

Response png_response(const Image& image) {
  const auto bytes = encode_png(image);
  return {200, "image/png", std::string(bytes.begin(), bytes.end())};
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    if (end > start) parts.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

const std::string& query_param(const Request& r, const std::string& key) {
  const auto it = r.query.find(key);
  if (it == r.query.end()) throw Error(ErrorCode::BadParameter, "missing query parameter '" + key + "'");
  return it->second;
}

double parse_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::BadParameter, "'" + key + "' is not a number: " + s);
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& key) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::BadParameter, "'" + key + "' is not an integer: " + s);
  }
  return v;
}

json parse_body(const Request& r) {
  if (r.body.empty()) return json::object();
  try {
    return json::parse(r.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadParameter, std::string("request body is not JSON: ") + e.what());
  }
}

// Request-body fields are parameters, so malformed ones are a 400 rather than a document error.
template <typename F>
auto as_parameter(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedDocument) throw Error(ErrorCode::BadParameter, e.what());
    throw;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadParameter, e.what());
  }
}

json volume_summary(const std::string& id, const Volume& v) {
  const auto& h = v.header();
  const auto [lo, hi] = v.value_range();
  return {{"id", id},
          {"sizes", h.sizes},
          {"type", scalar_kind_name(h.kind)},
          {"value_range", {lo, hi}}};
}

json volume_info(const std::string& id, const Volume& v) {
  json j = volume_summary(id, v);
  const auto& h = v.header();
  json dirs = json::array();
  for (int c = 0; c < 3; ++c) dirs.push_back(vec3(h.directions.col(c)));
  j["space_directions"] = dirs;
  j["space_origin"] = vec3(h.origin);
  j["encoding"] = h.encoding == Encoding::Gzip ? "gzip" : "raw";
  j["endian"] = h.endian == Endian::Little ? "little" : "big";
  j["space"] = h.space;
  j["min_pitch"] = v.min_pitch();
  return j;
}

json scene_summary(const Scene& s) {
  json strokes = json::array();
  for (const auto& st : s.strokes) strokes.push_back({{"id", st.id}, {"points", st.points.size()}});
  json open = s.open_stroke ? json{{"id", s.open_stroke->id}, {"points", s.open_stroke->points.size()}}
                            : json(nullptr);
  json robots = json::array();
  for (const auto& r : s.robots) robots.push_back(r.id);
  json structures = json::array();
  for (const auto& st : s.structures) structures.push_back(st.id);
  return {{"structures", structures},
          {"robots", robots},
          {"strokes", strokes},
          {"open_stroke", open},
          {"preset", preset_name(s.preset.kind)}};
}

StrokeAction parse_stroke_action(const json& body) {
  return as_parameter([&] {
    const std::string action = read_string(body, "action", "stroke request");
    if (action == "begin") {
      Rgba color{1.0, 0.0, 0.0, 1.0};
      if (body.contains("color")) color = read_rgba(body.at("color"), "color");
      const std::string created = body.contains("created_at") ? read_string(body, "created_at", "stroke") : "";
      return StrokeAction::begin(color, created);
    }
    if (action == "append") return StrokeAction::append(read_vec3(body.at("point"), "point"));
    if (action == "end") return StrokeAction::end();
    if (action == "delete") return StrokeAction::remove(read_string(body, "id", "stroke request"));
    throw Error(ErrorCode::BadParameter, "unknown stroke action '" + action + "'");
  });
}

struct PlanArgs {
  std::string robot, trocar, target;
  std::size_t steps = 50;
};

PlanArgs parse_plan_args(const json& body) {
  return as_parameter([&] {
    PlanArgs a;
    a.robot = read_string(body, "robot", "plan request");
    a.trocar = read_string(body, "trocar", "plan request");
    a.target = read_string(body, "target", "plan request");
    if (body.contains("n_steps")) {
      const json& n = body.at("n_steps");
      if (!n.is_number_integer() || n.get<std::int64_t>() < 2) {
        throw Error(ErrorCode::BadParameter, "n_steps must be an integer >= 2");
      }
      a.steps = n.get<std::size_t>();
    }
    return a;
  });
}

}  // namespace

MipRequest parse_mip_request(const json& body, const Volume& v) {
  MipRequest req;
  as_parameter([&] {
    if (body.contains("camera")) {
      const json& c = body.at("camera");
      Camera cam;
      const std::string proj = c.contains("projection") ? read_string(c, "projection", "camera") : "orthographic";
      if (proj == "orthographic") {
        cam.projection = Projection::Orthographic;
      } else if (proj == "perspective") {
        cam.projection = Projection::Perspective;
      } else {
        throw Error(ErrorCode::BadCamera, "unknown projection '" + proj + "'");
      }
      cam.eye = read_vec3(c.at("eye"), "camera.eye");
      cam.look_at = read_vec3(c.at("look_at"), "camera.look_at");
      cam.up = read_vec3(c.at("up"), "camera.up");
      const double w = read_number(c, "width", "camera");
      const double h = read_number(c, "height", "camera");
      if (w < 1 || h < 1 || w != std::floor(w) || h != std::floor(h) || w > 8192 || h > 8192) {
        throw Error(ErrorCode::BadCamera, "image size must be an integer in [1, 8192]");
      }
      cam.width = static_cast<std::size_t>(w);
      cam.height = static_cast<std::size_t>(h);
      cam.ortho_width = read_number_or(c, "ortho_width", cam.ortho_width, "camera");
      cam.fov_y = read_number_or(c, "fov_y", cam.fov_y, "camera");
      req.camera = cam;
    } else {
      const std::string view = body.contains("view") ? read_string(body, "view", "render") : "axial";
      const auto plane = parse_slice_plane(view);
      if (!plane) throw Error(ErrorCode::BadCamera, "unknown view '" + view + "'");
      req.camera = default_camera(v, *plane);
    }
    req.camera.validate();

    const auto [vlo, vhi] = v.value_range();
    if (body.contains("window")) {
      const json& w = body.at("window");
      req.window = ValueWindow(read_number(w, "lo", "window"), read_number(w, "hi", "window"));
    } else {
      req.window = ValueWindow(vlo, vhi > vlo ? vhi : vlo + 1.0);
    }

    if (body.contains("transfer_function")) {
      std::vector<TransferFunction::ControlPoint> pts;
      for (const auto& p : body.at("transfer_function")) {
        pts.push_back({read_number(p, "position", "transfer_function"),
                       read_rgba(p.at("color"), "transfer_function.color")});
      }
      req.tf = TransferFunction(std::move(pts));
    }

    if (body.contains("clips")) {
      const json& c = body.at("clips");
      if (c.contains("cut_out_box") && !c.at("cut_out_box").is_null()) {
        const json& b = c.at("cut_out_box");
        req.clips.cut_out_box = Aabb{read_vec3(b.at("min"), "cut_out_box.min"),
                                     read_vec3(b.at("max"), "cut_out_box.max")};
      }
      if (c.contains("section_plane") && !c.at("section_plane").is_null()) {
        const json& p = c.at("section_plane");
        req.clips.section_plane = SectionPlane{read_vec3(p.at("point"), "section_plane.point"),
                                               read_vec3(p.at("normal"), "section_plane.normal")};
      }
      req.clips.validate();
    }

    if (body.contains("step") && !body.at("step").is_null()) {
      req.options.step = read_number(body, "step", "render");
    }
    if (body.contains("mode")) {
      const std::string mode = read_string(body, "mode", "render");
      if (mode == "nearest") {
        req.options.mode = SampleMode::Nearest;
      } else if (mode == "trilinear") {
        req.options.mode = SampleMode::Trilinear;
      } else {
        throw Error(ErrorCode::BadParameter, "unknown sample mode '" + mode + "'");
      }
    }
    return 0;
  });
  return req;
}

// ---------------------------------------------------------------------------
// Service

std::shared_ptr<Session> Service::session(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownId, "session '" + id + "'");
  return it->second;
}

std::shared_ptr<Session> Service::create_session() {
  std::unique_lock lock(sessions_mutex_);
  auto s = std::make_shared<Session>("s" + std::to_string(next_session_++));
  sessions_.emplace(s->id(), s);
  return s;
}

Response Service::handle(const Request& request) {
  try {
    return route(request);
  } catch (const InfeasiblePlanError& e) {
    json body = report_to_json(e.report());
    body["error"] = error_name(e.code());
    return json_response(body, 422);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.name(), e.what());
  } catch (const BusyError& e) {
    return error_response(409, "Busy", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

Response Service::route(const Request& r) {
  const auto parts = split_path(r.path);
  const auto n = parts.size();
  auto is = [&](std::initializer_list<std::string_view> shape) {
    if (shape.size() != n) return false;
    std::size_t k = 0;
    for (auto s : shape) {
      if (s != "*" && s != parts[k]) return false;
      ++k;
    }
    return true;
  };
  auto method_not_allowed = [] { return error_response(405, "MethodNotAllowed", "method not allowed"); };

  if (n == 0 || parts[0] != "sessions") return error_response(404, "NotFound", "no route for " + r.path);

  if (is({"sessions"})) {
    if (r.method != "POST") return method_not_allowed();
    auto s = create_session();
    const json body = parse_body(r);
    if (body.contains("scene")) {
      const auto scene = scene_from_json(body.at("scene"), SceneResolver{});
      s->mutate([&](Scene& target) { target = scene; });
    }
    return json_response({{"id", s->id()}}, 201);
  }

  const auto sess = session(parts[1]);

  if (is({"sessions", "*", "volumes"})) {
    if (r.method != "POST") return method_not_allowed();
    auto v = std::make_shared<const Volume>(parse_nrrd(std::string_view(r.body)));
    const std::string id = sess->add_volume(v);
    return json_response(volume_summary(id, *v), 201);
  }

  if (is({"sessions", "*", "volumes", "*", "info"})) {
    if (r.method != "GET") return method_not_allowed();
    return json_response(volume_info(parts[3], *sess->volume(parts[3])));
  }

  if (is({"sessions", "*", "volumes", "*", "slice"})) {
    if (r.method != "GET") return method_not_allowed();
    const auto v = sess->volume(parts[3]);
    const auto plane = parse_slice_plane(query_param(r, "plane"));
    if (!plane) throw Error(ErrorCode::BadParameter, "plane must be axial, coronal or sagittal");
    const auto index = parse_int(query_param(r, "index"), "index");
    const ValueWindow w(parse_double(query_param(r, "lo"), "lo"), parse_double(query_param(r, "hi"), "hi"));
    return png_response(extract_slice(*v, *plane, index, w));
  }

  if (is({"sessions", "*", "render", "mip"})) {
    if (r.method != "POST") return method_not_allowed();
    const json body = parse_body(r);
    const std::string vid = as_parameter([&] { return read_string(body, "volume", "render"); });
    const auto v = sess->volume(vid);
    MipRequest req = parse_mip_request(body, *v);
    req.options.workers = options_.render_workers;
    return png_response(render_mip(*v, req.camera, req.window, req.tf, req.clips, req.options));
  }

  if (is({"sessions", "*", "scene"})) {
    if (r.method == "GET") return json_response(scene_to_json(*sess->scene()));
    if (r.method != "PUT") return method_not_allowed();
    SceneResolver resolver;
    if (!options_.asset_dir.empty()) resolver = SceneResolver::filesystem(options_.asset_dir);
    resolver.has_volume = [&](const std::string& ref) { return sess->has_volume(ref); };
    const Scene scene = load_scene(r.body, resolver);
    const auto updated = sess->mutate([&](Scene& target) { target = scene; });
    return json_response(scene_summary(*updated));
  }

  if (is({"sessions", "*", "scene", "strokes"})) {
    if (r.method != "POST") return method_not_allowed();
    const StrokeAction action = parse_stroke_action(parse_body(r));
    const auto updated = sess->mutate([&](Scene& s) { stroke_edit(s, action); });
    return json_response(scene_summary(*updated));
  }

  if (is({"sessions", "*", "plan", "reach"})) {
    if (r.method != "POST") return method_not_allowed();
    const PlanArgs a = parse_plan_args(parse_body(r));
    const auto scene = sess->scene();
    const FeasibilityReport report = plan_reach(*scene, a.robot, a.trocar, a.target);
    return json_response(report_to_json(report), report.feasible ? 200 : 422);
  }

  if (is({"sessions", "*", "simulate"})) {
    if (r.method != "POST") return method_not_allowed();
    const PlanArgs a = parse_plan_args(parse_body(r));
    const auto scene = sess->scene();
    return json_response(trajectory_to_json(simulate_insertion(*scene, a.robot, a.trocar, a.target, a.steps)));
  }

  if (is({"sessions", "*", "structures", "*", "mesh"})) {
    if (r.method != "GET") return method_not_allowed();
    const auto scene = sess->scene();
    const Structure* s = scene->structure(parts[3]);
    if (!s) throw Error(ErrorCode::UnknownId, "structure '" + parts[3] + "'");
    const SimilarityTransform world = scene->patient_to_world().compose(s->transform);
    json vertices = json::array();
    for (const auto& p : s->mesh->vertices) vertices.push_back(vec3(world.apply(p)));
    return json_response({{"id", s->id},
                          {"name", s->name},
                          {"vertices", vertices},
                          {"triangles", s->mesh->triangles},
                          {"color", rgba(s->color)},
                          {"visible", s->visible}});
  }

  return error_response(404, "NotFound", "no route for " + r.path);
}

// ---------------------------------------------------------------------------
// HTTP transport

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::jthread thread;

  explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    r.body = req.body;
    const Response out = impl_->service.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  auto& srv = impl_->server;
  srv.set_payload_max_length(std::size_t{1} << 31);
  srv.Get(R"(/.*)", handler);
  srv.Post(R"(/.*)", handler);
  srv.Put(R"(/.*)", handler);
  srv.Delete(R"(/.*)", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::jthread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (impl_) {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
  }
}

void HttpServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace surgplan::service
