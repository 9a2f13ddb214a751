#include "cabfare/pricing.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>

#include "cabfare/errors.hpp"

namespace cabfare {

PriceRange::PriceRange(Money min, Money max) : min_(min), max_(max) {
  if (min.cents() <= 0) throw InvalidRange("estimate minimum must be positive, got " + min.str());
  if (min > max) throw InvalidRange("estimate minimum " + min.str() + " exceeds maximum " + max.str());
}

void RateCard::validate() const {
  for (double v : {base_usd, per_mile_usd, per_min_usd, min_fare_usd, booking_fee_usd})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("rate card amounts must be >= 0");
  if (!(avg_speed_mph > 0.0) || !std::isfinite(avg_speed_mph))
    throw ConfigError("rate card avg_speed_mph must be > 0");
  if (!(range_spread >= 0.0 && range_spread < 1.0))
    throw ConfigError("rate card range_spread must be in [0, 1)");
}

RateCard RateCard::illustrative() {
  return {.base_usd = 2.55,
          .per_mile_usd = 1.75,
          .per_min_usd = 0.35,
          .min_fare_usd = 8.00,
          .booking_fee_usd = 1.55,
          .avg_speed_mph = 12.0,
          .range_spread = 0.10};
}

RateCard RateCard::from_json(const nlohmann::json& j) {
  RateCard c;
  try {
    c.base_usd = j.at("base_usd").get<double>();
    c.per_mile_usd = j.at("per_mile_usd").get<double>();
    c.per_min_usd = j.at("per_min_usd").get<double>();
    c.min_fare_usd = j.at("min_fare_usd").get<double>();
    c.booking_fee_usd = j.at("booking_fee_usd").get<double>();
    c.avg_speed_mph = j.at("avg_speed_mph").get<double>();
    c.range_spread = j.at("range_spread").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid rate card: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json RateCard::to_json() const {
  return {{"base_usd", base_usd},           {"per_mile_usd", per_mile_usd},
          {"per_min_usd", per_min_usd},     {"min_fare_usd", min_fare_usd},
          {"booking_fee_usd", booking_fee_usd}, {"avg_speed_mph", avg_speed_mph},
          {"range_spread", range_spread}};
}

double emulated_point_usd(const RateCard& card, double miles) {
  const double minutes = miles / card.avg_speed_mph * 60.0;
  const double metered = card.base_usd + card.per_mile_usd * miles + card.per_min_usd * minutes;
  return std::max(card.min_fare_usd, metered) + card.booking_fee_usd;
}

PriceRange emulate_range(const RateCard& card, GeoPoint origin, GeoPoint dest) {
  const double point = emulated_point_usd(card, meters_to_miles(haversine(origin, dest)));
  return PriceRange(Money::from_dollars(point * (1.0 - card.range_spread)),
                    Money::from_dollars(point * (1.0 + card.range_spread)));
}

RateCardEmulator::RateCardEmulator(RateCard card) : card_(card) { card_.validate(); }

PriceRange RateCardEmulator::estimate(GeoPoint origin, GeoPoint dest) const {
  return emulate_range(card_, origin, dest);
}

PriceRange parse_estimate_body(std::string_view body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw MalformedResponse("estimate body is not a JSON object");
  auto number = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw MalformedResponse(std::string("missing numeric ") + key);
    const double v = it->get<double>();
    if (!std::isfinite(v) || std::abs(v) > 1e9) throw MalformedResponse(std::string("bad ") + key);
    return v;
  };
  const double low = number("low_estimate");
  const double high = number("high_estimate");
  auto cur = j.find("currency_code");
  if (cur == j.end() || !cur->is_string() || cur->get<std::string>() != PriceRange::currency())
    throw MalformedResponse("currency_code must be \"USD\"");
  return PriceRange(Money::from_dollars(low), Money::from_dollars(high));
}

HttpProvider::HttpProvider(HttpProviderConfig config)
    : config_(std::move(config)), in_flight_(std::clamp(config_.max_in_flight, 1, 4096)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.url, m, url_re)) throw ConfigError("bad provider url: " + config_.url);
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (config_.timeout.count() <= 0) throw ConfigError("provider timeout must be positive");
}

HttpProvider::~HttpProvider() = default;

PriceRange HttpProvider::estimate(GeoPoint origin, GeoPoint dest) const {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client client(scheme_host_port_);
  const auto secs = config_.timeout.count() / 1000;
  const auto usecs = (config_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Params params{{"start_latitude", std::to_string(origin.lat)},
                         {"start_longitude", std::to_string(origin.lon)},
                         {"end_latitude", std::to_string(dest.lat)},
                         {"end_longitude", std::to_string(dest.lon)}};
  httplib::Headers headers;
  if (!config_.token.empty()) headers.emplace("Authorization", "Token " + config_.token);

  auto res = client.Get(path_, params, headers);
  if (!res) throw ProviderUnavailable("provider request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw ProviderUnavailable("provider returned HTTP " + std::to_string(res->status));
  return parse_estimate_body(res->body);
}

std::unique_ptr<PricingProvider> make_provider(const nlohmann::json& config) {
  try {
    const auto kind = config.at("kind").get<std::string>();
    if (kind == "emulator")
      return std::make_unique<RateCardEmulator>(RateCard::from_json(config.at("rate_card")));
    if (kind == "http") {
      HttpProviderConfig c;
      c.url = config.at("url").get<std::string>();
      if (config.contains("token_env_var")) {
        const auto var = config.at("token_env_var").get<std::string>();
        if (const char* tok = std::getenv(var.c_str())) c.token = tok;
      }
      c.timeout = std::chrono::milliseconds(config.value("timeout_ms", 2000));
      c.max_in_flight = config.value("max_in_flight", 16);
      return std::make_unique<HttpProvider>(std::move(c));
    }
    throw ConfigError("unknown provider kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid provider config: ") + e.what());
  }
}

std::unique_ptr<PricingProvider> load_provider(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open provider config " + config_path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("provider config is not valid JSON: " + config_path);
  return make_provider(j);
}

}  // namespace cabfare
