#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "cabfare/geocoder.hpp"
#include "cabfare/mesh_index.hpp"
#include "cabfare/pricing.hpp"

namespace httplib {
class Server;
}

namespace cabfare {

// Single JSON config file for `serve`. Relative paths resolve against the
// config file's directory. See docs/service.md.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path index_path;
  std::optional<MeshSpec> mesh;  // when set, must match the loaded index
  nlohmann::json provider;
  nlohmann::json geocoder;
  std::int32_t max_ring = kDefaultMaxRing;
  double large_dest_gap_m = 250.0;
  bool degraded_mode = false;  // true: 200 yellow-only on provider failure
  std::string cors_origin = "*";
  int worker_threads = 128;  // one per open keep-alive connection
  std::size_t max_query_bytes = 2048;
  std::filesystem::path base_dir;

  // Throws ConfigError (bad values) or IoError (missing referenced files).
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static ServiceConfig load(const std::filesystem::path& path);
  void validate() const;
};

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

using QueryParams = std::multimap<std::string, std::string>;

// Request handling over a shared immutable index. Handlers are pure given
// the index and the provider/geocoder responses.
class FareService {
 public:
  FareService(ServiceConfig config, std::unique_ptr<PricingProvider> provider,
              std::unique_ptr<Geocoder> geocoder);

  void set_index(std::shared_ptr<const MeshIndex> index);
  std::shared_ptr<const MeshIndex> index() const;

  HttpReply compare(const QueryParams& q) const;
  HttpReply geocode(const QueryParams& q) const;
  HttpReply healthz() const;

  // Registers the endpoints and CORS handling on `server`.
  void mount(httplib::Server& server) const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  ServiceConfig config_;
  std::unique_ptr<PricingProvider> provider_;
  std::unique_ptr<Geocoder> geocoder_;
  mutable std::mutex index_mutex_;
  std::shared_ptr<const MeshIndex> index_;
};

// Owns an HTTP server bound to the configured address and serving a
// FareService on a background thread.
class ServiceHost {
 public:
  // port 0 binds an ephemeral port.
  explicit ServiceHost(std::shared_ptr<FareService> service);
  ~ServiceHost();
  ServiceHost(const ServiceHost&) = delete;
  ServiceHost& operator=(const ServiceHost&) = delete;

  // Throws IoError if the address cannot be bound.
  int start();
  void stop();
  void wait();
  // SIGINT/SIGTERM stop this host's server.
  void stop_on_signals();
  int port() const noexcept { return port_; }

 private:
  std::shared_ptr<FareService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

// Provider and geocoder from a loaded config, whose paths are already resolved.
std::shared_ptr<FareService> make_fare_service(const ServiceConfig& config);

// Builds the service from `config`, starts listening, loads the index (the
// health check answers 503 until then) and blocks until the server stops.
int serve(const ServiceConfig& config);

}  // namespace cabfare
