#include "cabfare/fare_query.hpp"

#include "cabfare/errors.hpp"

namespace cabfare {

std::string_view to_string(Service s) noexcept {
  return s == Service::Yellow ? "YELLOW" : "UBER_X";
}

std::string_view to_string(QuoteBasis b) noexcept {
  return b == QuoteBasis::HistoricalTrip ? "HISTORICAL_TRIP" : "RANGE_MEAN";
}

std::string_view to_string(Cheaper c) noexcept {
  switch (c) {
    case Cheaper::Yellow: return "YELLOW";
    case Cheaper::Uber: return "UBER";
    case Cheaper::Tie: return "TIE";
  }
  return "TIE";
}

ComparableTrip find_comparable_trip(const MeshIndex& index, GeoPoint origin, GeoPoint dest,
                                    std::int32_t max_ring) {
  if (!dest.valid() || !index.spec().bbox().contains(dest))
    throw OutOfBounds("destination outside mesh bounding box");
  const NearestDropoff best = index.nearest_dropoff(origin, dest, max_ring);
  return {best.ordinal, best.ring_used, best.gap_m};
}

FareQuote yellow_quote(const MeshIndex& index, GeoPoint origin, GeoPoint dest,
                       std::int32_t max_ring) {
  const auto match = find_comparable_trip(index, origin, dest, max_ring);
  return {.service = Service::Yellow,
          .amount = index.trip(match.ordinal).total_fare,
          .basis = QuoteBasis::HistoricalTrip,
          .matched_trip = match.ordinal,
          .origin_ring = match.ring_used,
          .dest_gap_m = match.dest_gap_m};
}

FareQuote uber_quote(const PricingProvider& provider, GeoPoint origin, GeoPoint dest) {
  const PriceRange range = provider.estimate(origin, dest);
  FareQuote q;
  q.service = Service::UberX;
  q.amount = range.mean();
  q.basis = QuoteBasis::RangeMean;
  return q;
}

ComparisonResult compare_quotes(const FareQuote& yellow, const FareQuote& uber) {
  ComparisonResult r{.yellow = yellow, .uber = uber, .delta = uber.amount - yellow.amount};
  if (r.delta.cents() > 0)
    r.cheaper = Cheaper::Yellow;
  else if (r.delta.cents() < 0)
    r.cheaper = Cheaper::Uber;
  else
    r.cheaper = Cheaper::Tie;
  return r;
}

ComparisonResult compare(const MeshIndex& index, const PricingProvider& provider, GeoPoint origin,
                         GeoPoint dest, std::int32_t max_ring) {
  const FareQuote yellow = yellow_quote(index, origin, dest, max_ring);
  const FareQuote uber = uber_quote(provider, origin, dest);
  return compare_quotes(yellow, uber);
}

nlohmann::json to_json(const FareQuote& q) {
  nlohmann::json j{{"service", to_string(q.service)},
                   {"amount_usd", q.amount.dollars()},
                   {"basis", to_string(q.basis)}};
  if (q.matched_trip) j["matched_trip"] = *q.matched_trip;
  if (q.origin_ring) j["origin_ring"] = *q.origin_ring;
  if (q.dest_gap_m) j["dest_gap_m"] = *q.dest_gap_m;
  return j;
}

nlohmann::json to_json(const ComparisonResult& r) {
  return {{"yellow", to_json(r.yellow)},
          {"uber", to_json(r.uber)},
          {"cheaper", to_string(r.cheaper)},
          {"delta_usd", r.delta.dollars()}};
}

}  // namespace cabfare
