#include "cabfare/geocoder.hpp"

#include <httplib.h>

#include <cctype>
#include <fstream>
#include <regex>

#include "cabfare/errors.hpp"

namespace cabfare {

std::string normalize_address(std::string_view query) {
  std::string out;
  bool space = false;
  for (char c : query) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

StubGeocoder::StubGeocoder(std::map<std::string, GeocodeResult> table) {
  for (auto& [k, v] : table) table_.emplace(normalize_address(k), std::move(v));
}

StubGeocoder StubGeocoder::from_json(const nlohmann::json& j) {
  std::map<std::string, GeocodeResult> table;
  try {
    for (const auto& e : j.at("entries")) {
      GeocodeResult r{{e.at("lat").get<double>(), e.at("lon").get<double>()},
                      e.value("label", e.at("query").get<std::string>())};
      if (!r.where.valid()) throw ConfigError("geocoder table entry has invalid coordinates");
      table.emplace(e.at("query").get<std::string>(), std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid geocoder table: ") + e.what());
  }
  return StubGeocoder(std::move(table));
}

StubGeocoder StubGeocoder::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open geocoder table " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("geocoder table is not valid JSON: " + path.string());
  return from_json(j);
}

std::optional<GeocodeResult> StubGeocoder::lookup(std::string_view query) const {
  auto it = table_.find(normalize_address(query));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

HttpGeocoder::HttpGeocoder(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, url_re)) throw ConfigError("bad geocoder url: " + url);
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (timeout_.count() <= 0) throw ConfigError("geocoder timeout must be positive");
}

std::optional<GeocodeResult> HttpGeocoder::lookup(std::string_view query) const {
  httplib::Client client(scheme_host_port_);
  const auto secs = timeout_.count() / 1000;
  const auto usecs = (timeout_.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  auto res = client.Get(path_, httplib::Params{{"q", std::string(query)}}, httplib::Headers{});
  if (!res) throw GeocoderUnavailable("geocoder request failed: " + httplib::to_string(res.error()));
  if (res->status == 404) return std::nullopt;
  if (res->status != 200)
    throw GeocoderUnavailable("geocoder returned HTTP " + std::to_string(res->status));
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  try {
    if (j.is_discarded()) throw GeocoderUnavailable("geocoder body is not JSON");
    GeocodeResult r{{j.at("lat").get<double>(), j.at("lon").get<double>()},
                    j.value("label", std::string(query))};
    if (!r.where.valid()) throw GeocoderUnavailable("geocoder returned invalid coordinates");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw GeocoderUnavailable(std::string("malformed geocoder body: ") + e.what());
  }
}

std::unique_ptr<Geocoder> make_geocoder(const nlohmann::json& config,
                                        const std::filesystem::path& base_dir) {
  try {
    const auto kind = config.at("kind").get<std::string>();
    if (kind == "stub") {
      std::filesystem::path table = config.at("table_path").get<std::string>();
      if (table.is_relative() && !base_dir.empty()) table = base_dir / table;
      return std::make_unique<StubGeocoder>(StubGeocoder::load(table));
    }
    if (kind == "http")
      return std::make_unique<HttpGeocoder>(config.at("url").get<std::string>(),
                                            std::chrono::milliseconds(config.value("timeout_ms", 1500)));
    throw ConfigError("unknown geocoder kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid geocoder config: ") + e.what());
  }
}

}  // namespace cabfare
