#pragma once

// Data-parallel inner loops. Every kernel here has a serial twin in
// kernels::serial with the same contract; tests hold the two to identical
// output and the benchmark target compares their speed.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cabfare/geo.hpp"
#include "cabfare/ingest.hpp"
#include "cabfare/money.hpp"
#include "cabfare/trip.hpp"

namespace cabfare {

class PricingProvider;

namespace kernels {

// Compressed cell -> ordinals table over a dense grid: the ordinals of cell k
// are ordinals[offsets[k] .. offsets[k+1]), ascending.
struct CellBuckets {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> ordinals;
  friend bool operator==(const CellBuckets&, const CellBuckets&) = default;
};

// Outcome of pricing one trip against a provider.
struct PricedTrip {
  std::uint32_t ordinal = 0;
  std::optional<Money> uber;  // empty when the provider failed
  friend bool operator==(const PricedTrip&, const PricedTrip&) = default;
};

struct VoteTally {
  std::uint64_t cell_key = 0;
  std::uint64_t uber_cheaper = 0;
  std::uint64_t yellow_cheaper = 0;
  friend bool operator==(const VoteTally&, const VoteTally&) = default;
};

struct Vote {
  GeoPoint where;
  int sign = 0;  // +1 uber cheaper, -1 yellow cheaper, 0 abstain
};

// Number of trips per block in blocked reductions. Fixed so sums do not
// depend on the thread count.
inline constexpr std::size_t kReduceBlock = 4096;

std::vector<RowResult> parse_rows(std::span<const std::string_view> records,
                                  const ColumnMap& columns, const BoundingBox& bbox,
                                  std::uint64_t first_trip_id);

std::vector<std::uint32_t> pickup_cell_keys(std::span<const TripRecord> trips,
                                            const MeshSpec& spec);

CellBuckets bucket_by_cell(std::span<const std::uint32_t> cell_keys, std::size_t cell_count);

// Straight-line pickup->dropoff miles per trip.
std::vector<double> trip_miles(std::span<const TripRecord> trips);

double blocked_sum(std::span<const double> values);

std::vector<PricedTrip> price_trips(std::span<const TripRecord> trips,
                                    std::span<const std::uint32_t> ordinals,
                                    const PricingProvider& provider);

// Sorted by cell_key; cells without votes are absent.
std::vector<VoteTally> tally_votes(std::span<const Vote> votes, const MeshSpec& raster);

namespace serial {

std::vector<RowResult> parse_rows(std::span<const std::string_view> records,
                                  const ColumnMap& columns, const BoundingBox& bbox,
                                  std::uint64_t first_trip_id);
std::vector<std::uint32_t> pickup_cell_keys(std::span<const TripRecord> trips,
                                            const MeshSpec& spec);
CellBuckets bucket_by_cell(std::span<const std::uint32_t> cell_keys, std::size_t cell_count);
std::vector<double> trip_miles(std::span<const TripRecord> trips);
double blocked_sum(std::span<const double> values);
std::vector<PricedTrip> price_trips(std::span<const TripRecord> trips,
                                    std::span<const std::uint32_t> ordinals,
                                    const PricingProvider& provider);
std::vector<VoteTally> tally_votes(std::span<const Vote> votes, const MeshSpec& raster);

}  // namespace serial

}  // namespace kernels
}  // namespace cabfare
