#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include "cabfare/geo.hpp"
#include "cabfare/money.hpp"

namespace cabfare {

// One historical journey. Coordinates are quantized to 1e-6 degree and the
// meter distance to 1e-3 mile at ingest so the binary store round-trips
// exactly.
struct TripRecord {
  std::uint64_t trip_id = 0;
  GeoPoint pickup;
  GeoPoint dropoff;
  std::optional<std::int64_t> pickup_time;   // epoch seconds, UTC
  std::optional<std::int64_t> dropoff_time;  // epoch seconds, UTC
  Money total_fare;                          // fare + surcharges + tip
  std::optional<double> trip_distance_mi;    // as reported by the meter

  friend bool operator==(const TripRecord&, const TripRecord&) = default;
};

inline constexpr double kMicroDegrees = 1e6;
inline constexpr double kMilliMiles = 1e3;

inline std::int32_t to_micro_degrees(double deg) {
  return static_cast<std::int32_t>(std::llround(deg * kMicroDegrees));
}
inline double from_micro_degrees(std::int32_t micro) { return micro / kMicroDegrees; }
inline double quantize_degrees(double deg) { return from_micro_degrees(to_micro_degrees(deg)); }
inline double quantize_miles(double mi) { return std::llround(mi * kMilliMiles) / kMilliMiles; }

// Every TripRecord invariant; used post-hoc on ingest output and on load.
inline bool satisfies_invariants(const TripRecord& t, const BoundingBox& bbox) {
  if (!t.pickup.valid() || !t.dropoff.valid()) return false;
  if (!bbox.contains(t.pickup) || !bbox.contains(t.dropoff)) return false;
  if (t.total_fare.cents() <= 0) return false;
  if (t.pickup_time && t.dropoff_time && *t.pickup_time > *t.dropoff_time) return false;
  if (t.trip_distance_mi && !(*t.trip_distance_mi >= 0.0)) return false;
  return true;
}

}  // namespace cabfare
