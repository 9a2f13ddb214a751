#include <algorithm>
#include <map>

#include "cabfare/csv.hpp"
#include "cabfare/errors.hpp"
#include "cabfare/kernels.hpp"
#include "cabfare/pricing.hpp"

namespace cabfare::kernels::serial {

std::vector<RowResult> parse_rows(std::span<const std::string_view> records,
                                  const ColumnMap& columns, const BoundingBox& bbox,
                                  std::uint64_t first_trip_id) {
  std::vector<RowResult> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    out.push_back(parse_row(csv::split_fields(records[i]), columns, bbox, first_trip_id + i));
  return out;
}

std::vector<std::uint32_t> pickup_cell_keys(std::span<const TripRecord> trips,
                                            const MeshSpec& spec) {
  std::vector<std::uint32_t> keys;
  keys.reserve(trips.size());
  for (const auto& t : trips)
    keys.push_back(static_cast<std::uint32_t>(spec.linear(cell_of_unchecked(t.pickup, spec))));
  return keys;
}

CellBuckets bucket_by_cell(std::span<const std::uint32_t> cell_keys, std::size_t cell_count) {
  std::vector<std::vector<std::uint32_t>> lists(cell_count);
  for (std::size_t i = 0; i < cell_keys.size(); ++i)
    lists[cell_keys[i]].push_back(static_cast<std::uint32_t>(i));
  CellBuckets b;
  b.offsets.reserve(cell_count + 1);
  b.ordinals.reserve(cell_keys.size());
  for (const auto& l : lists) {
    b.offsets.push_back(static_cast<std::uint32_t>(b.ordinals.size()));
    b.ordinals.insert(b.ordinals.end(), l.begin(), l.end());
  }
  b.offsets.push_back(static_cast<std::uint32_t>(b.ordinals.size()));
  return b;
}

std::vector<double> trip_miles(std::span<const TripRecord> trips) {
  std::vector<double> out;
  out.reserve(trips.size());
  for (const auto& t : trips) out.push_back(meters_to_miles(haversine(t.pickup, t.dropoff)));
  return out;
}

double blocked_sum(std::span<const double> values) {
  double total = 0.0;
  for (std::size_t lo = 0; lo < values.size(); lo += kReduceBlock) {
    double s = 0.0;
    for (std::size_t i = lo; i < std::min(values.size(), lo + kReduceBlock); ++i) s += values[i];
    total += s;
  }
  return total;
}

std::vector<PricedTrip> price_trips(std::span<const TripRecord> trips,
                                    std::span<const std::uint32_t> ordinals,
                                    const PricingProvider& provider) {
  std::vector<PricedTrip> out;
  out.reserve(ordinals.size());
  for (auto o : ordinals) {
    PricedTrip p{o, std::nullopt};
    try {
      p.uber = provider.estimate(trips[o].pickup, trips[o].dropoff).mean();
    } catch (const ProviderUnavailable&) {
    } catch (const MalformedResponse&) {
    } catch (const InvalidRange&) {
    }
    out.push_back(p);
  }
  return out;
}

std::vector<VoteTally> tally_votes(std::span<const Vote> votes, const MeshSpec& raster) {
  std::map<std::uint64_t, VoteTally> tallies;
  for (const auto& v : votes) {
    const auto key = raster.linear(cell_of_unchecked(v.where, raster));
    auto& t = tallies[key];
    t.cell_key = key;
    if (v.sign > 0) ++t.uber_cheaper;
    if (v.sign < 0) ++t.yellow_cheaper;
  }
  std::vector<VoteTally> out;
  for (const auto& [_, t] : tallies) out.push_back(t);
  return out;
}

}  // namespace cabfare::kernels::serial
