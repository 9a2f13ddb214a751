#include "cabfare/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <csignal>
#include <fstream>

#include "cabfare/errors.hpp"
#include "cabfare/fare_query.hpp"

namespace cabfare {

// --- Config ------------------------------------------------------------------

namespace {

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir) {
  ServiceConfig c;
  c.base_dir = base_dir;
  try {
    if (j.contains("listen")) {
      c.host = j["listen"].value("host", c.host);
      c.port = j["listen"].value("port", c.port);
    }
    c.index_path = resolve(j.at("index_path").get<std::string>(), base_dir);
    if (j.contains("mesh")) {
      const auto bbox = j["mesh"].at("bbox").get<std::vector<double>>();
      if (bbox.size() != 4) throw ConfigError("mesh.bbox must be [south, west, north, east]");
      c.mesh = MeshSpec({{bbox[0], bbox[1]}, {bbox[2], bbox[3]}},
                        j["mesh"].value("cell_size_m", 100.0));
    }
    c.provider = j.at("provider");
    c.geocoder = j.at("geocoder");
    if (c.geocoder.contains("table_path"))
      c.geocoder["table_path"] =
          resolve(c.geocoder["table_path"].get<std::string>(), base_dir).string();
    c.max_ring = j.value("max_ring", c.max_ring);
    c.large_dest_gap_m = j.value("large_dest_gap_m", c.large_dest_gap_m);
    c.degraded_mode = j.value("degraded_mode", c.degraded_mode);
    c.cors_origin = j.value("cors_origin", c.cors_origin);
    if (j.contains("limits")) {
      c.worker_threads = j["limits"].value("worker_threads", c.worker_threads);
      c.max_query_bytes = j["limits"].value("max_query_bytes", c.max_query_bytes);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid service config: ") + e.what());
  }
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
  auto c = from_json(j, path.parent_path());
  c.validate();
  return c;
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("listen.port out of range");
  if (max_ring < 1) throw ConfigError("max_ring must be >= 1");
  if (!(large_dest_gap_m > 0.0)) throw ConfigError("large_dest_gap_m must be > 0");
  if (worker_threads < 1) throw ConfigError("limits.worker_threads must be >= 1");
  if (max_query_bytes < 1) throw ConfigError("limits.max_query_bytes must be >= 1");
  if (!std::filesystem::exists(index_path)) throw IoError("index not found: " + index_path.string());
  if (geocoder.contains("table_path") &&
      !std::filesystem::exists(geocoder["table_path"].get<std::string>()))
    throw IoError("geocoder table not found: " + geocoder["table_path"].get<std::string>());
}

// --- Handlers ----------------------------------------------------------------

namespace {

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
  return {status, nlohmann::json{{"error", code}, {"message", message}}.dump()};
}

std::optional<double> strict_double(const QueryParams& q, const char* key) {
  const auto it = q.find(key);
  if (it == q.end()) return std::nullopt;
  const std::string& s = it->second;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

nlohmann::json point_json(GeoPoint p) { return {{"lat", p.lat}, {"lon", p.lon}}; }

}  // namespace

FareService::FareService(ServiceConfig config, std::unique_ptr<PricingProvider> provider,
                         std::unique_ptr<Geocoder> geocoder)
    : config_(std::move(config)), provider_(std::move(provider)), geocoder_(std::move(geocoder)) {
  if (!provider_) throw ConfigError("service needs a pricing provider");
  if (!geocoder_) throw ConfigError("service needs a geocoder");
}

void FareService::set_index(std::shared_ptr<const MeshIndex> index) {
  if (index && config_.mesh && !(index->spec() == *config_.mesh))
    throw ConfigError("index mesh spec does not match configured mesh");
  std::lock_guard lock(index_mutex_);
  index_ = std::move(index);
}

std::shared_ptr<const MeshIndex> FareService::index() const {
  std::lock_guard lock(index_mutex_);
  return index_;
}

HttpReply FareService::compare(const QueryParams& q) const {
  const auto index = this->index();
  if (!index) return error_reply(503, "not-ready", "index not loaded");

  std::size_t bytes = 0;
  for (const auto& [k, v] : q) bytes += k.size() + v.size();
  if (bytes > config_.max_query_bytes) return error_reply(400, "bad-request", "query too long");

  const auto olat = strict_double(q, "olat"), olon = strict_double(q, "olon");
  const auto dlat = strict_double(q, "dlat"), dlon = strict_double(q, "dlon");
  if (!olat || !olon || !dlat || !dlon)
    return error_reply(400, "bad-request", "olat, olon, dlat and dlon must be finite numbers");
  const GeoPoint origin{*olat, *olon}, dest{*dlat, *dlon};
  if (!origin.valid() || !dest.valid())
    return error_reply(400, "bad-request", "coordinates out of range");
  const auto& bbox = index->spec().bbox();
  if (!bbox.contains(origin) || !bbox.contains(dest))
    return error_reply(400, "out-of-bbox", "origin or destination outside service area");

  FareQuote yellow;
  try {
    yellow = yellow_quote(*index, origin, dest, config_.max_ring);
  } catch (const NoTripsFound& e) {
    return error_reply(404, "no-trips-found", e.what());
  }

  nlohmann::json warnings = nlohmann::json::array();
  const auto& matched = index->trip(*yellow.matched_trip);
  nlohmann::json body{
      {"yellow", to_json(yellow)},
      {"matched_trip",
       {{"ordinal", *yellow.matched_trip},
        {"trip_id", matched.trip_id},
        {"pickup", point_json(matched.pickup)},
        {"dropoff", point_json(matched.dropoff)},
        {"dest_gap_m", *yellow.dest_gap_m},
        {"ring_used", *yellow.origin_ring}}}};
  if (*yellow.dest_gap_m > config_.large_dest_gap_m) warnings.push_back("large-dest-gap");

  try {
    const FareQuote uber = uber_quote(*provider_, origin, dest);
    const auto result = compare_quotes(yellow, uber);
    body["uber"] = to_json(uber);
    body["cheaper"] = std::string(to_string(result.cheaper));
    body["delta_usd"] = result.delta.dollars();
  } catch (const Error& e) {
    // Provider errors only; a missing Uber quote is never filled in.
    if (!config_.degraded_mode) return error_reply(502, "provider-unavailable", e.what());
    warnings.push_back("provider-down");
  }
  body["warnings"] = std::move(warnings);
  return {200, body.dump()};
}

HttpReply FareService::geocode(const QueryParams& q) const {
  const auto it = q.find("q");
  if (it == q.end() || normalize_address(it->second).empty())
    return error_reply(400, "bad-request", "missing q");
  if (it->second.size() > config_.max_query_bytes)
    return error_reply(400, "bad-request", "query too long");
  try {
    const auto hit = geocoder_->lookup(it->second);
    if (!hit) return error_reply(404, "no-match", "address not found");
    return {200, nlohmann::json{{"lat", hit->where.lat}, {"lon", hit->where.lon},
                                {"label", hit->label}}
                     .dump()};
  } catch (const GeocoderUnavailable& e) {
    return error_reply(502, "geocoder-unavailable", e.what());
  }
}

HttpReply FareService::healthz() const {
  const auto index = this->index();
  if (!index) return {503, nlohmann::json{{"status", "loading"}}.dump()};
  return {200, nlohmann::json{{"status", "ok"},
                              {"index_trips", index->size()},
                              {"built_at", index->built_at()}}
                   .dump()};
}

void FareService::mount(httplib::Server& server) const {
  const std::string origin = config_.cors_origin;
  server.set_default_headers({{"Access-Control-Allow-Origin", origin}});
  auto adapt = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      QueryParams q(req.params.begin(), req.params.end());
      HttpReply r = handler(q);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
  };
  server.Get("/v1/compare", adapt([this](const QueryParams& q) { return compare(q); }));
  server.Get("/v1/geocode", adapt([this](const QueryParams& q) { return geocode(q); }));
  server.Get("/healthz", adapt([this](const QueryParams&) { return healthz(); }));
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

// --- Hosting -----------------------------------------------------------------

ServiceHost::ServiceHost(std::shared_ptr<FareService> service) : service_(std::move(service)) {}

ServiceHost::~ServiceHost() { stop(); }

int ServiceHost::start() {
  server_ = std::make_unique<httplib::Server>();
  const int workers = service_->config().worker_threads;
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<size_t>(workers)); };
  server_->set_tcp_nodelay(true);
  service_->mount(*server_);
  const auto& cfg = service_->config();
  if (cfg.port == 0) {
    port_ = server_->bind_to_any_port(cfg.host);
  } else {
    port_ = server_->bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
  }
  if (port_ <= 0) throw IoError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ServiceHost::stop() {
  if (server_) server_->stop();
  wait();
}

void ServiceHost::wait() {
  if (thread_.joinable()) thread_.join();
}

namespace {

std::atomic<httplib::Server*> g_signal_target{nullptr};

extern "C" void on_terminate(int) {
  if (auto* s = g_signal_target.load()) s->stop();
}

}  // namespace

void ServiceHost::stop_on_signals() {
  g_signal_target.store(server_.get());
  std::signal(SIGINT, on_terminate);
  std::signal(SIGTERM, on_terminate);
}

std::shared_ptr<FareService> make_fare_service(const ServiceConfig& config) {
  return std::make_shared<FareService>(config, make_provider(config.provider),
                                       make_geocoder(config.geocoder));
}

int serve(const ServiceConfig& config) {
  auto service = make_fare_service(config);
  ServiceHost host(service);
  const int port = host.start();
  host.stop_on_signals();
  spdlog::info("listening on {}:{} (index loading)", config.host, port);

  auto index = std::make_shared<const MeshIndex>(MeshIndex::load(config.index_path));
  spdlog::info("index loaded: {} trips, {} non-empty cells", index->size(), index->non_empty_cells());
  service->set_index(std::move(index));

  host.wait();
  return 0;
}

}  // namespace cabfare
