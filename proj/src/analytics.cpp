#include "cabfare/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "cabfare/errors.hpp"
#include "cabfare/kernels.hpp"
#include "cabfare/record_file.hpp"

namespace cabfare {

// --- Histogram ---------------------------------------------------------------

Histogram::Histogram(std::vector<double> bin_edges) : edges(std::move(bin_edges)) {
  if (edges.size() < 2) throw DataError("histogram needs at least two edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) throw DataError("histogram edges must be finite");
    if (i > 0 && !(edges[i] > edges[i - 1])) throw DataError("histogram edges must ascend strictly");
  }
  counts.assign(edges.size() - 1, 0);
}

Histogram Histogram::uniform(double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) throw DataError("bad uniform histogram bounds");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / width));
  std::vector<double> e;
  e.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) e.push_back(lo + static_cast<double>(i) * width);
  return Histogram(std::move(e));
}

void Histogram::add(double value) {
  ++total;
  if (value < edges.front()) {
    ++underflow;
  } else if (value >= edges.back()) {
    ++overflow;
  } else {
    const auto it = std::upper_bound(edges.begin(), edges.end(), value);
    ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
  }
}

bool Histogram::consistent() const noexcept {
  std::uint64_t s = underflow + overflow;
  for (auto c : counts) s += c;
  return s == total && counts.size() + 1 == edges.size();
}

// --- Sampling ----------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Sampler::Sampler(double fraction, std::uint64_t seed) : seed_(splitmix64(seed)) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("sample fraction must be in (0, 1]");
  all_ = fraction >= 1.0;
  threshold_ = all_ ? std::numeric_limits<std::uint64_t>::max()
                    : static_cast<std::uint64_t>(std::ldexp(fraction, 64));
}

bool Sampler::keep(std::uint64_t ordinal) const noexcept {
  return all_ || splitmix64(seed_ ^ splitmix64(ordinal)) < threshold_;
}

std::vector<std::uint32_t> Sampler::select(std::size_t n) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep(i)) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

// --- Experiment --------------------------------------------------------------

ExperimentRun run_experiment(std::span<const TripRecord> corpus, const PricingProvider& provider,
                             const Sampler& sample) {
  ExperimentRun run;
  run.corpus_size = corpus.size();
  const auto ordinals = sample.select(corpus.size());
  run.sampled = ordinals.size();
  const auto priced = kernels::price_trips(corpus, ordinals, provider);
  run.pairs.reserve(priced.size());
  for (const auto& p : priced) {
    if (!p.uber) {
      ++run.provider_failed;
      continue;
    }
    const auto& t = corpus[p.ordinal];
    run.pairs.push_back({p.ordinal, t.pickup, t.total_fare, *p.uber});
  }
  return run;
}

// --- Prices ------------------------------------------------------------------

Money lower_median(std::vector<std::int64_t> cents) {
  if (cents.empty()) throw EmptyInput("median of empty set");
  const auto mid = cents.begin() + static_cast<std::ptrdiff_t>((cents.size() - 1) / 2);
  std::nth_element(cents.begin(), mid, cents.end());
  return Money::from_cents(*mid);
}

PriceDistributions price_distributions(std::span<const PricePair> pairs,
                                       const std::vector<double>& bin_edges_usd) {
  if (pairs.empty()) throw EmptyInput("no price pairs");
  PriceDistributions d{Histogram(bin_edges_usd), Histogram(bin_edges_usd), {}, {}, {}};
  std::vector<std::int64_t> y, u;
  y.reserve(pairs.size());
  u.reserve(pairs.size());
  for (const auto& p : pairs) {
    d.yellow.add(p.yellow.dollars());
    d.uber.add(p.uber.dollars());
    y.push_back(p.yellow.cents());
    u.push_back(p.uber.cents());
  }
  d.median_yellow = lower_median(std::move(y));
  d.median_uber = lower_median(std::move(u));
  d.median_gap = d.median_uber - d.median_yellow;
  return d;
}

PriceDistributions price_distributions(std::span<const PricePair> pairs) {
  return price_distributions(pairs, Histogram::uniform(0.0, 100.0, 1.0).edges);
}

MedianCurve median_curve(std::span<const PricePair> pairs, double bin_width_usd,
                         std::uint64_t min_support) {
  if (pairs.empty()) throw EmptyInput("no price pairs");
  if (!(bin_width_usd > 0.0) || !std::isfinite(bin_width_usd))
    throw DataError("bin width must be > 0");
  const double width_cents = bin_width_usd * 100.0;
  auto bin_of = [&](Money m) {
    return static_cast<std::size_t>(std::max(0.0, std::floor(m.cents() / width_cents)));
  };

  std::size_t bins = 0;
  for (const auto& p : pairs) bins = std::max(bins, bin_of(p.yellow) + 1);
  std::vector<std::vector<std::int64_t>> yellow(bins), uber(bins);
  for (const auto& p : pairs) {
    const auto b = bin_of(p.yellow);
    yellow[b].push_back(p.yellow.cents());
    uber[b].push_back(p.uber.cents());
  }

  MedianCurve c;
  c.bin_width_usd = bin_width_usd;
  c.min_support = std::max<std::uint64_t>(min_support, 1);
  for (std::size_t b = 0; b <= bins; ++b) c.x_edges.push_back(static_cast<double>(b) * bin_width_usd);
  c.support.resize(bins);
  c.median_yellow.resize(bins);
  c.median_uber.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    c.support[b] = yellow[b].size();
    if (c.support[b] < c.min_support) continue;
    c.median_yellow[b] = lower_median(std::move(yellow[b]));
    c.median_uber[b] = lower_median(std::move(uber[b]));
  }

  // Scan from the top: `tail_ok` holds while every supported bin seen so far
  // has uber <= yellow.
  bool tail_ok = true;
  for (std::size_t b = bins; b-- > 0;) {
    if (!c.median_uber[b]) continue;
    tail_ok = tail_ok && *c.median_uber[b] <= *c.median_yellow[b];
    if (!tail_ok) break;
    c.crossover_usd = c.x_edges[b];
  }
  return c;
}

// --- Distances ---------------------------------------------------------------

DistanceDistribution distance_distribution(std::span<const TripRecord> corpus,
                                           const std::vector<double>& bin_edges_mi) {
  if (corpus.empty()) throw EmptyInput("empty corpus");
  DistanceDistribution d{Histogram(bin_edges_mi), 0.0, std::nullopt, 0};
  const auto miles = kernels::trip_miles(corpus);
  for (double m : miles) d.histogram.add(m);
  d.mean_mi = kernels::blocked_sum(miles) / static_cast<double>(miles.size());

  std::vector<double> meter;
  for (const auto& t : corpus)
    if (t.trip_distance_mi) meter.push_back(*t.trip_distance_mi);
  d.meter_count = meter.size();
  if (!meter.empty()) d.meter_mean_mi = kernels::blocked_sum(meter) / static_cast<double>(meter.size());
  return d;
}

DistanceDistribution distance_distribution(std::span<const TripRecord> corpus) {
  return distance_distribution(corpus, Histogram::uniform(0.0, 20.0, 0.25).edges);
}

// --- Raster ------------------------------------------------------------------

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Black: return "BLACK";
    case Verdict::Yellow: return "YELLOW";
    case Verdict::NoData: return "NODATA";
  }
  return "NODATA";
}

Verdict RasterCell::verdict() const noexcept {
  if (uber_cheaper == 0 && yellow_cheaper == 0) return Verdict::NoData;
  return uber_cheaper > yellow_cheaper ? Verdict::Black : Verdict::Yellow;
}

Verdict MajorityRaster::verdict(CellId c) const {
  auto it = cells.find(c);
  return it == cells.end() ? Verdict::NoData : it->second.verdict();
}

MajorityRaster majority_raster(std::span<const PricePair> pairs, const MeshSpec& raster_spec) {
  if (pairs.empty()) throw EmptyInput("no price pairs");
  std::vector<kernels::Vote> votes;
  votes.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!raster_spec.bbox().contains(p.pickup))
      throw OutOfBounds("pair pickup outside raster bounding box");
    const int sign = p.uber < p.yellow ? 1 : (p.uber > p.yellow ? -1 : 0);
    votes.push_back({p.pickup, sign});
  }
  MajorityRaster r{raster_spec, {}};
  for (const auto& t : kernels::tally_votes(votes, raster_spec)) {
    if (t.uber_cheaper == 0 && t.yellow_cheaper == 0) continue;
    r.cells.emplace(raster_spec.from_linear(t.cell_key), RasterCell{t.uber_cheaper, t.yellow_cheaper});
  }
  return r;
}

// --- Traces ------------------------------------------------------------------

std::vector<TracePoint> export_trace_points(std::span<const TripRecord> corpus,
                                            const Sampler& sample) {
  std::vector<TracePoint> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!sample.keep(i)) continue;
    out.push_back({corpus[i].pickup, true});
    out.push_back({corpus[i].dropoff, false});
  }
  return out;
}

// --- Batch -------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string fixed6(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  return std::string(buf, ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, text);
}

}  // namespace

StatsSummary compute_stats(std::span<const TripRecord> corpus, const MeshSpec& mesh,
                           const PricingProvider& provider, const StatsOptions& options) {
  const Sampler sampler(options.sample, options.seed);
  StatsSummary s{.run = run_experiment(corpus, provider, sampler),
                 .prices = {Histogram({0.0, 1.0}), Histogram({0.0, 1.0}), {}, {}, {}},
                 .curve = {},
                 .distances = {Histogram({0.0, 1.0}), 0.0, std::nullopt, 0},
                 .raster = {mesh, {}},
                 .trace = {},
                 .summary = {}};
  if (s.run.pairs.empty()) throw EmptyInput("no trips survived sampling and pricing");

  s.prices = price_distributions(
      s.run.pairs, Histogram::uniform(0.0, options.price_max_usd, options.price_bin_usd).edges);
  s.curve = median_curve(s.run.pairs, options.curve_bin_usd, options.curve_min_support);
  s.distances = distance_distribution(
      corpus, Histogram::uniform(0.0, options.distance_max_mi, options.distance_bin_mi).edges);
  s.raster = majority_raster(s.run.pairs, MeshSpec(mesh.bbox(), options.raster_cell_m,
                                                   mesh.earth_radius()));
  s.trace = export_trace_points(corpus, sampler);

  std::uint64_t black = 0, yellow = 0;
  for (const auto& [_, cell] : s.raster.cells)
    (cell.verdict() == Verdict::Black ? black : yellow)++;

  s.summary = {
      {"median_gap_usd", s.prices.median_gap.dollars()},
      {"median_yellow_usd", s.prices.median_yellow.dollars()},
      {"median_uber_usd", s.prices.median_uber.dollars()},
      {"crossover_usd",
       s.curve.crossover_usd ? nlohmann::json(*s.curve.crossover_usd) : nlohmann::json(nullptr)},
      {"mean_distance_mi", s.distances.mean_mi},
      {"meter_mean_distance_mi", s.distances.meter_mean_mi ? nlohmann::json(*s.distances.meter_mean_mi)
                                                           : nlohmann::json(nullptr)},
      {"counts",
       {{"corpus_trips", s.run.corpus_size},
        {"sampled_trips", s.run.sampled},
        {"pairs", s.run.pairs.size()},
        {"provider_failed", s.run.provider_failed},
        {"meter_distance_trips", s.distances.meter_count},
        {"raster_black_cells", black},
        {"raster_yellow_cells", yellow},
        {"trace_points", s.trace.size()}}},
      {"options",
       {{"sample", options.sample},
        {"seed", options.seed},
        {"curve_bin_usd", options.curve_bin_usd},
        {"raster_cell_m", options.raster_cell_m}}}};
  return s;
}

void write_stats(const StatsSummary& s, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  {
    std::string out = "bin_lo_usd,bin_hi_usd,yellow_count,uber_count\n";
    const auto& e = s.prices.yellow.edges;
    out += "-inf," + num(e.front()) + "," + std::to_string(s.prices.yellow.underflow) + "," +
           std::to_string(s.prices.uber.underflow) + "\n";
    for (std::size_t i = 0; i + 1 < e.size(); ++i)
      out += num(e[i]) + "," + num(e[i + 1]) + "," + std::to_string(s.prices.yellow.counts[i]) + "," +
             std::to_string(s.prices.uber.counts[i]) + "\n";
    out += num(e.back()) + ",inf," + std::to_string(s.prices.yellow.overflow) + "," +
           std::to_string(s.prices.uber.overflow) + "\n";
    write_text(out_dir / "distributions.csv", out);
  }
  {
    std::string out = "bin_lo_usd,bin_hi_usd,support,median_yellow_usd,median_uber_usd\n";
    for (std::size_t i = 0; i < s.curve.support.size(); ++i) {
      out += num(s.curve.x_edges[i]) + "," + num(s.curve.x_edges[i + 1]) + "," +
             std::to_string(s.curve.support[i]) + ",";
      out += (s.curve.median_yellow[i] ? s.curve.median_yellow[i]->str() : "") + ",";
      out += (s.curve.median_uber[i] ? s.curve.median_uber[i]->str() : "") + "\n";
    }
    write_text(out_dir / "median_curve.csv", out);
  }
  {
    const auto& h = s.distances.histogram;
    std::string out = "bin_lo_mi,bin_hi_mi,count\n";
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i)
      out += num(h.edges[i]) + "," + num(h.edges[i + 1]) + "," + std::to_string(h.counts[i]) + "\n";
    out += num(h.edges.back()) + ",inf," + std::to_string(h.overflow) + "\n";
    write_text(out_dir / "distances.csv", out);
  }
  {
    std::string out = "ix,iy,verdict,uber_cheaper,yellow_cheaper\n";
    for (const auto& [c, cell] : s.raster.cells)
      out += std::to_string(c.ix) + "," + std::to_string(c.iy) + "," +
             std::string(to_string(cell.verdict())) + "," + std::to_string(cell.uber_cheaper) + "," +
             std::to_string(cell.yellow_cheaper) + "\n";
    write_text(out_dir / "raster.csv", out);
  }
  {
    std::string out = "lat,lon,kind\n";
    out.reserve(out.size() + s.trace.size() * 32);
    for (const auto& p : s.trace)
      out += fixed6(p.where.lat) + "," + fixed6(p.where.lon) + "," +
             (p.pickup ? "pickup" : "dropoff") + "\n";
    write_text(out_dir / "trace_points.csv", out);
  }
  write_text(out_dir / "summary.json", s.summary.dump(2) + "\n");
}

}  // namespace cabfare
