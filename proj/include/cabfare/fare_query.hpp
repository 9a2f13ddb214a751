#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

#include "cabfare/geo.hpp"
#include "cabfare/mesh_index.hpp"
#include "cabfare/money.hpp"
#include "cabfare/pricing.hpp"

namespace cabfare {

enum class Service { Yellow, UberX };
enum class QuoteBasis { HistoricalTrip, RangeMean };
enum class Cheaper { Yellow, Uber, Tie };

std::string_view to_string(Service s) noexcept;
std::string_view to_string(QuoteBasis b) noexcept;
std::string_view to_string(Cheaper c) noexcept;

// Trip-match fields are present iff basis == HistoricalTrip.
struct FareQuote {
  Service service = Service::Yellow;
  Money amount;
  QuoteBasis basis = QuoteBasis::HistoricalTrip;
  std::optional<std::uint32_t> matched_trip;
  std::optional<std::int32_t> origin_ring;
  std::optional<double> dest_gap_m;

  friend bool operator==(const FareQuote&, const FareQuote&) = default;
};

struct ComparisonResult {
  FareQuote yellow;
  FareQuote uber;
  Cheaper cheaper = Cheaper::Tie;
  Money delta;  // uber - yellow

  friend bool operator==(const ComparisonResult&, const ComparisonResult&) = default;
};

struct ComparableTrip {
  std::uint32_t ordinal = 0;
  std::int32_t ring_used = 0;
  double dest_gap_m = 0.0;

  friend bool operator==(const ComparableTrip&, const ComparableTrip&) = default;
};

// Among trips picked up near `origin`, the one whose dropoff is closest to
// `dest` (haversine); equal gaps go to the lower ordinal.
ComparableTrip find_comparable_trip(const MeshIndex& index, GeoPoint origin, GeoPoint dest,
                                    std::int32_t max_ring = kDefaultMaxRing);

// The matched trip's recorded total fare, unadjusted for the gap.
FareQuote yellow_quote(const MeshIndex& index, GeoPoint origin, GeoPoint dest,
                       std::int32_t max_ring = kDefaultMaxRing);

FareQuote uber_quote(const PricingProvider& provider, GeoPoint origin, GeoPoint dest);

// Verdict from two quotes: Tie iff the amounts agree to the cent.
ComparisonResult compare_quotes(const FareQuote& yellow, const FareQuote& uber);

ComparisonResult compare(const MeshIndex& index, const PricingProvider& provider, GeoPoint origin,
                         GeoPoint dest, std::int32_t max_ring = kDefaultMaxRing);

nlohmann::json to_json(const FareQuote& q);
nlohmann::json to_json(const ComparisonResult& r);

}  // namespace cabfare
