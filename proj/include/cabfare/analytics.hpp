#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cabfare/geo.hpp"
#include "cabfare/money.hpp"
#include "cabfare/pricing.hpp"
#include "cabfare/trip.hpp"

namespace cabfare {

// Bins [edges[i], edges[i+1]); values below the first edge land in
// `underflow`, values at or above the last edge in `overflow`.
// Invariant: sum(counts) + underflow + overflow == total.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;
  std::uint64_t total = 0;

  // Throws DataError unless edges are finite and strictly ascending (>= 2).
  explicit Histogram(std::vector<double> bin_edges);
  // [lo, lo+width, ..., hi]
  static Histogram uniform(double lo, double hi, double width);

  void add(double value);
  bool consistent() const noexcept;
};

// Deterministic uniform sample: ordinal i is kept iff a seeded hash of i
// falls below `fraction`. Independent of visiting order and thread count.
class Sampler {
 public:
  // Throws DataError unless 0 < fraction <= 1.
  Sampler(double fraction, std::uint64_t seed);
  bool keep(std::uint64_t ordinal) const noexcept;
  std::vector<std::uint32_t> select(std::size_t n) const;

 private:
  std::uint64_t threshold_;
  std::uint64_t seed_;
  bool all_;
};

struct PricePair {
  std::uint32_t ordinal = 0;  // position in the corpus
  GeoPoint pickup;
  Money yellow;
  Money uber;
  friend bool operator==(const PricePair&, const PricePair&) = default;
};

struct ExperimentRun {
  std::vector<PricePair> pairs;  // ascending ordinal
  std::uint64_t corpus_size = 0;
  std::uint64_t sampled = 0;
  std::uint64_t provider_failed = 0;
};

// For each sampled trip: yellow = recorded total fare, uber = mean of the
// provider's range for the same endpoints. Provider failures are counted and
// skipped.
ExperimentRun run_experiment(std::span<const TripRecord> corpus, const PricingProvider& provider,
                             const Sampler& sample);

struct PriceDistributions {
  Histogram yellow;
  Histogram uber;
  Money median_yellow;
  Money median_uber;
  Money median_gap;  // median(uber) - median(yellow)
};

// Lower median of integer cents. Throws EmptyInput.
Money lower_median(std::vector<std::int64_t> cents);

PriceDistributions price_distributions(std::span<const PricePair> pairs,
                                       const std::vector<double>& bin_edges_usd);
PriceDistributions price_distributions(std::span<const PricePair> pairs);  // $1 bins, 0-100

struct MedianCurve {
  double bin_width_usd = 1.0;
  std::vector<double> x_edges;                   // yellow-price bin edges
  std::vector<std::uint64_t> support;            // pairs per bin
  std::vector<std::optional<Money>> median_yellow;  // set iff support >= min_support
  std::vector<std::optional<Money>> median_uber;
  std::uint64_t min_support = 1;
  std::optional<double> crossover_usd;
};

// Per-yellow-price-bin lower medians. The crossover is the lower edge of the
// first supported bin from which the median Uber price stays at or below the
// bin's median yellow price for every later supported bin.
MedianCurve median_curve(std::span<const PricePair> pairs, double bin_width_usd,
                         std::uint64_t min_support = 1);

struct DistanceDistribution {
  Histogram histogram;
  double mean_mi = 0.0;                   // straight-line
  std::optional<double> meter_mean_mi;    // trips with a meter distance
  std::uint64_t meter_count = 0;
};

DistanceDistribution distance_distribution(std::span<const TripRecord> corpus,
                                           const std::vector<double>& bin_edges_mi);
DistanceDistribution distance_distribution(std::span<const TripRecord> corpus);  // 0.25 mi bins to 20

enum class Verdict { Black, Yellow, NoData };
std::string_view to_string(Verdict v) noexcept;

struct RasterCell {
  std::uint64_t uber_cheaper = 0;
  std::uint64_t yellow_cheaper = 0;
  Verdict verdict() const noexcept;
  friend bool operator==(const RasterCell&, const RasterCell&) = default;
};

struct MajorityRaster {
  MeshSpec spec;
  std::map<CellId, RasterCell> cells;  // cells with at least one pair
  Verdict verdict(CellId c) const;
};

// Each pair votes in its pickup cell: uber-cheaper, yellow-cheaper, or
// abstain on an exact tie. Strict uber majority paints BLACK.
MajorityRaster majority_raster(std::span<const PricePair> pairs, const MeshSpec& raster_spec);

struct TracePoint {
  GeoPoint where;
  bool pickup = true;
};

// Two points (pickup, dropoff) per sampled trip, in corpus order.
std::vector<TracePoint> export_trace_points(std::span<const TripRecord> corpus,
                                            const Sampler& sample);

struct StatsOptions {
  double sample = 1.0;
  std::uint64_t seed = 0;
  double price_bin_usd = 1.0;
  double price_max_usd = 100.0;
  double curve_bin_usd = 1.0;
  std::uint64_t curve_min_support = 1;
  double distance_bin_mi = 0.25;
  double distance_max_mi = 20.0;
  double raster_cell_m = 500.0;
};

struct StatsSummary {
  ExperimentRun run;
  PriceDistributions prices;
  MedianCurve curve;
  DistanceDistribution distances;
  MajorityRaster raster;
  std::vector<TracePoint> trace;
  nlohmann::json summary;
};

// Runs every analytic over `corpus` (distances and traces over the sample).
// Throws EmptyInput when nothing survives sampling and pricing.
StatsSummary compute_stats(std::span<const TripRecord> corpus, const MeshSpec& mesh,
                           const PricingProvider& provider, const StatsOptions& options);

// distributions.csv, median_curve.csv, distances.csv, raster.csv,
// trace_points.csv, summary.json. Byte-stable for identical inputs.
void write_stats(const StatsSummary& stats, const std::filesystem::path& out_dir);

}  // namespace cabfare
