#include <omp.h>

#include <algorithm>
#include <unordered_map>

#include "cabfare/csv.hpp"
#include "cabfare/errors.hpp"
#include "cabfare/kernels.hpp"
#include "cabfare/pricing.hpp"

namespace cabfare::kernels {

std::vector<RowResult> parse_rows(std::span<const std::string_view> records,
                                  const ColumnMap& columns, const BoundingBox& bbox,
                                  std::uint64_t first_trip_id) {
  std::vector<RowResult> out(records.size(), RejectReason::MalformedRow);
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto fields = csv::split_fields(records[i]);
    out[i] = parse_row(fields, columns, bbox, first_trip_id + static_cast<std::uint64_t>(i));
  }
  return out;
}

std::vector<std::uint32_t> pickup_cell_keys(std::span<const TripRecord> trips,
                                            const MeshSpec& spec) {
  std::vector<std::uint32_t> keys(trips.size());
  const auto n = static_cast<std::int64_t>(trips.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    keys[i] = static_cast<std::uint32_t>(spec.linear(cell_of_unchecked(trips[i].pickup, spec)));
  return keys;
}

// Counting sort with one histogram per thread over contiguous chunks. Chunk
// t's entries for a cell are placed after chunks 0..t-1, so each cell keeps
// ascending ordinals.
CellBuckets bucket_by_cell(std::span<const std::uint32_t> cell_keys, std::size_t cell_count) {
  CellBuckets b;
  b.offsets.assign(cell_count + 1, 0);
  b.ordinals.resize(cell_keys.size());
  const std::size_t n = cell_keys.size();
  const int threads = n < 65536 ? 1 : std::max(1, omp_get_max_threads());
  std::vector<std::vector<std::uint32_t>> local(static_cast<std::size_t>(threads));

#pragma omp parallel num_threads(threads)
  {
    // The runtime may grant fewer threads than requested.
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
    auto& hist = local[t];
    hist.assign(cell_count, 0);
    for (std::size_t i = lo; i < hi; ++i) ++hist[cell_keys[i]];

#pragma omp barrier
#pragma omp single
    {
      // Exclusive scan in (cell, thread) order; local[t][k] becomes the
      // write cursor of thread t in cell k.
      std::uint32_t running = 0;
      for (std::size_t k = 0; k < cell_count; ++k) {
        b.offsets[k] = running;
        for (std::size_t th = 0; th < nt; ++th) {
          auto& h = local[th];
          const auto c = h[k];
          h[k] = running;
          running += c;
        }
      }
      b.offsets[cell_count] = running;
    }

    for (std::size_t i = lo; i < hi; ++i) b.ordinals[hist[cell_keys[i]]++] = static_cast<std::uint32_t>(i);
  }
  return b;
}

std::vector<double> trip_miles(std::span<const TripRecord> trips) {
  std::vector<double> out(trips.size());
  const auto n = static_cast<std::int64_t>(trips.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    out[i] = meters_to_miles(haversine(trips[i].pickup, trips[i].dropoff));
  return out;
}

double blocked_sum(std::span<const double> values) {
  const std::size_t blocks = (values.size() + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(values.size(), lo + kReduceBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    partial[b] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

std::vector<PricedTrip> price_trips(std::span<const TripRecord> trips,
                                    std::span<const std::uint32_t> ordinals,
                                    const PricingProvider& provider) {
  std::vector<PricedTrip> out(ordinals.size());
  const auto n = static_cast<std::int64_t>(ordinals.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto o = ordinals[i];
    out[i].ordinal = o;
    try {
      out[i].uber = provider.estimate(trips[o].pickup, trips[o].dropoff).mean();
    } catch (const ProviderUnavailable&) {
    } catch (const MalformedResponse&) {
    } catch (const InvalidRange&) {
    }
  }
  return out;
}

std::vector<VoteTally> tally_votes(std::span<const Vote> votes, const MeshSpec& raster) {
  std::unordered_map<std::uint64_t, VoteTally> merged;
  const auto n = static_cast<std::int64_t>(votes.size());
#pragma omp parallel
  {
    std::unordered_map<std::uint64_t, VoteTally> local;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const auto key = raster.linear(cell_of_unchecked(votes[i].where, raster));
      auto& t = local[key];
      t.cell_key = key;
      if (votes[i].sign > 0) ++t.uber_cheaper;
      if (votes[i].sign < 0) ++t.yellow_cheaper;
    }
#pragma omp critical
    for (const auto& [key, t] : local) {
      auto& m = merged[key];
      m.cell_key = key;
      m.uber_cheaper += t.uber_cheaper;
      m.yellow_cheaper += t.yellow_cheaper;
    }
  }
  std::vector<VoteTally> out;
  out.reserve(merged.size());
  for (const auto& [_, t] : merged) out.push_back(t);
  std::sort(out.begin(), out.end(),
            [](const VoteTally& a, const VoteTally& b) { return a.cell_key < b.cell_key; });
  return out;
}

}  // namespace cabfare::kernels
