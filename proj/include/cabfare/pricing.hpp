#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include <json.hpp>

#include "cabfare/geo.hpp"
#include "cabfare/money.hpp"

namespace cabfare {

// An external (minimum, maximum) fare estimate. Always 0 < min <= max.
class PriceRange {
 public:
  // Throws InvalidRange when min <= 0 or min > max.
  PriceRange(Money min, Money max);

  Money min() const noexcept { return min_; }
  Money max() const noexcept { return max_; }
  static constexpr std::string_view currency() noexcept { return "USD"; }

  // Midpoint, rounded half up to the cent.
  Money mean() const noexcept { return Money::from_cents((min_.cents() + max_.cents() + 1) / 2); }

  friend bool operator==(const PriceRange&, const PriceRange&) = default;

 private:
  Money min_;
  Money max_;
};

// Parameters of the offline fare emulator. Dollar amounts, miles, minutes.
struct RateCard {
  double base_usd = 0.0;
  double per_mile_usd = 0.0;
  double per_min_usd = 0.0;
  double min_fare_usd = 0.0;
  double booking_fee_usd = 0.0;
  double avg_speed_mph = 12.0;
  double range_spread = 0.0;

  // Throws ConfigError unless money fields >= 0, speed > 0, 0 <= spread < 1.
  void validate() const;

  // ILLUSTRATIVE ONLY: a plausible card for demos. Not a published rate.
  static RateCard illustrative();

  static RateCard from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Source of external fare estimates. Implementations are safe for
// concurrent calls.
class PricingProvider {
 public:
  virtual ~PricingProvider() = default;
  // Throws ProviderUnavailable, MalformedResponse or InvalidRange.
  virtual PriceRange estimate(GeoPoint origin, GeoPoint dest) const = 0;
};

// Point fare: max(min_fare, base + per_mile*d + per_min*t) + booking_fee with
// d the straight-line miles and t = d / avg_speed in minutes. Range is
// point*(1 -/+ spread), each side rounded to the cent.
PriceRange emulate_range(const RateCard& card, GeoPoint origin, GeoPoint dest);
double emulated_point_usd(const RateCard& card, double miles);

class RateCardEmulator final : public PricingProvider {
 public:
  explicit RateCardEmulator(RateCard card);
  PriceRange estimate(GeoPoint origin, GeoPoint dest) const override;
  const RateCard& card() const noexcept { return card_; }

 private:
  RateCard card_;
};

struct HttpProviderConfig {
  std::string url;  // http://host[:port][/path]
  std::string token;
  std::chrono::milliseconds timeout{2000};
  int max_in_flight = 16;
};

// Wire format (GET url?start_latitude=..&start_longitude=..&end_latitude=..
// &end_longitude=.., "Authorization: Token <token>"):
//   200 {"low_estimate": 11.0, "high_estimate": 14.0, "currency_code": "USD"}
// Connection failures, timeouts and non-2xx statuses raise
// ProviderUnavailable; unparseable bodies raise MalformedResponse.
class HttpProvider final : public PricingProvider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  ~HttpProvider() override;
  PriceRange estimate(GeoPoint origin, GeoPoint dest) const override;

 private:
  HttpProviderConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  mutable std::counting_semaphore<4096> in_flight_;
};

// Parses a provider response body into a PriceRange.
PriceRange parse_estimate_body(std::string_view body);

// Provider config block:
//   {"kind": "emulator", "rate_card": {...}}
//   {"kind": "http", "url": "...", "token_env_var": "UBER_TOKEN",
//    "timeout_ms": 2000, "max_in_flight": 16}
std::unique_ptr<PricingProvider> make_provider(const nlohmann::json& config);
std::unique_ptr<PricingProvider> load_provider(const std::string& config_path);

}  // namespace cabfare
