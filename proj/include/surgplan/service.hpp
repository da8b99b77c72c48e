#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "surgplan/planning.hpp"
#include "surgplan/volume.hpp"

namespace surgplan::service {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

// HTTP status for an engine error code.
int status_for(ErrorCode code) noexcept;

struct ServiceOptions {
  // Directory against which scene mesh_file references are resolved; empty
  // disables file references.
  std::string asset_dir;
  // MIP worker threads, 0 = hardware concurrency.
  unsigned render_workers = 0;
};

class Session {
 public:
  explicit Session(std::string id) : id_(std::move(id)), scene_(std::make_shared<const Scene>()) {}

  const std::string& id() const noexcept { return id_; }

  std::shared_ptr<const Scene> scene() const;
  std::shared_ptr<const Volume> volume(const std::string& id) const;
  std::string add_volume(std::shared_ptr<const Volume> v);
  bool has_volume(const std::string& id) const;

  // Single-writer mutation; throws BusyError when another mutation is running.
  template <typename F>
  std::shared_ptr<const Scene> mutate(F&& edit);

 private:
  std::string id_;
  mutable std::shared_mutex state_;
  std::mutex writer_;
  std::shared_ptr<const Scene> scene_;
  std::map<std::string, std::shared_ptr<const Volume>> volumes_;
  std::uint64_t next_volume_ = 1;
};

class BusyError : public std::runtime_error {
 public:
  BusyError() : std::runtime_error("scene is being modified by another request") {}
};

template <typename F>
std::shared_ptr<const Scene> Session::mutate(F&& edit) {
  std::unique_lock writer(writer_, std::try_to_lock);
  if (!writer.owns_lock()) throw BusyError();
  auto next = std::make_shared<Scene>(*scene());
  edit(*next);
  std::shared_ptr<const Scene> frozen = std::move(next);
  {
    std::unique_lock lock(state_);
    scene_ = frozen;
  }
  return frozen;
}

// Transport-independent request router.
class Service {
 public:
  explicit Service(ServiceOptions options = {}) : options_(std::move(options)) {}

  Response handle(const Request& request);

  std::shared_ptr<Session> session(const std::string& id) const;
  std::shared_ptr<Session> create_session();

 private:
  Response route(const Request& request);

  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
};

// Parses the JSON body of a MIP render request against `v`.
struct MipRequest {
  Camera camera;
  ValueWindow window{0.0, 1.0};
  TransferFunction tf = TransferFunction::grayscale();
  ClipSet clips;
  MipOptions options;
};
MipRequest parse_mip_request(const nlohmann::json& body, const Volume& v);

// Serves `service` over HTTP/1.1 on a background thread.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and starts listening; port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();
  // Blocks until the server stops.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace surgplan::service
