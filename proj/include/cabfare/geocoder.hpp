#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cabfare/geo.hpp"

namespace cabfare {

struct GeocodeResult {
  GeoPoint where;
  std::string label;
  friend bool operator==(const GeocodeResult&, const GeocodeResult&) = default;
};

// Address -> coordinates. nullopt means "no match"; an unreachable backend
// raises GeocoderUnavailable.
class Geocoder {
 public:
  virtual ~Geocoder() = default;
  virtual std::optional<GeocodeResult> lookup(std::string_view query) const = 0;
};

// Lower-cased, trimmed, inner whitespace collapsed.
std::string normalize_address(std::string_view query);

// Resolves from a fixture table:
//   {"entries": [{"query": "times square", "lat": 40.758, "lon": -73.9855,
//                 "label": "Times Square, Manhattan"}]}
class StubGeocoder final : public Geocoder {
 public:
  explicit StubGeocoder(std::map<std::string, GeocodeResult> table);
  static StubGeocoder from_json(const nlohmann::json& j);
  static StubGeocoder load(const std::filesystem::path& path);
  std::optional<GeocodeResult> lookup(std::string_view query) const override;

 private:
  std::map<std::string, GeocodeResult> table_;
};

// GET url?q=<query> -> 200 {"lat", "lon", "label"} or 404.
class HttpGeocoder final : public Geocoder {
 public:
  HttpGeocoder(std::string url, std::chrono::milliseconds timeout);
  std::optional<GeocodeResult> lookup(std::string_view query) const override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

// {"kind": "stub", "table_path": "..."} | {"kind": "http", "url": "...", "timeout_ms": 1500}
// Relative table paths resolve against `base_dir`.
std::unique_ptr<Geocoder> make_geocoder(const nlohmann::json& config,
                                        const std::filesystem::path& base_dir = {});

}  // namespace cabfare
