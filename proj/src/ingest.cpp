#include "cabfare/ingest.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cabfare/csv.hpp"
#include "cabfare/kernels.hpp"

namespace cabfare {

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::MalformedRow: return "malformed-row";
    case RejectReason::MalformedNumber: return "malformed-number";
    case RejectReason::ZeroIsland: return "zero-island";
    case RejectReason::OutOfBbox: return "out-of-bbox";
    case RejectReason::NonpositiveFare: return "nonpositive-fare";
    case RejectReason::TimeInverted: return "time-inverted";
    case RejectReason::Unmatched: return "unmatched";
    case RejectReason::DuplicateKey: return "duplicate-key";
  }
  return "unknown";
}

std::uint64_t IngestReport::total_rejects() const noexcept {
  std::uint64_t n = 0;
  for (const auto& [_, count] : rejects_by_reason) n += count;
  return n;
}

nlohmann::json IngestReport::to_json() const {
  return {{"rows_read", rows_read},
          {"rows_kept", rows_kept},
          {"rejects_by_reason", rejects_by_reason}};
}

Schema Schema::foil() {
  Schema s;
  for (auto name : {field::kPickupLat, field::kPickupLon, field::kDropoffLat, field::kDropoffLon,
                    field::kPickupTime, field::kDropoffTime, field::kTotalAmount,
                    field::kTripDistance, field::kFareAmount, field::kTipAmount,
                    field::kSurcharge, field::kMtaTax, field::kTollsAmount})
    s.columns.emplace(name, name);
  s.join_key = {"medallion", "hack_license", "pickup_datetime"};
  return s;
}

Schema Schema::from_json(const nlohmann::json& j) {
  Schema s;
  try {
    for (const auto& [canonical, header] : j.at("columns").items())
      s.columns.emplace(canonical, header.get<std::string>());
    if (j.contains("join_key")) s.join_key = j.at("join_key").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid schema: ") + e.what());
  }
  return s;
}

Schema Schema::load(const std::string& name_or_path) {
  if (name_or_path == "foil") return foil();
  std::ifstream in(name_or_path);
  if (!in) throw IoError("cannot open schema file " + name_or_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema " + name_or_path + ": " + e.what());
  }
  return from_json(j);
}

ColumnMap ColumnMap::resolve(const Schema& schema, std::span<const std::string> header) {
  std::unordered_map<std::string_view, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i)
    position.try_emplace(csv::trim(header[i]), i);  // first occurrence wins

  auto find = [&](std::string_view canonical) -> std::optional<std::size_t> {
    auto it = schema.columns.find(std::string(canonical));
    if (it == schema.columns.end()) return std::nullopt;
    auto pos = position.find(csv::trim(it->second));
    if (pos == position.end()) return std::nullopt;
    return pos->second;
  };
  auto require = [&](std::string_view canonical) {
    auto p = find(canonical);
    if (!p) throw DataError("required column '" + std::string(canonical) + "' not in header");
    return p;
  };

  ColumnMap m;
  m.pickup_lat = require(field::kPickupLat);
  m.pickup_lon = require(field::kPickupLon);
  m.dropoff_lat = require(field::kDropoffLat);
  m.dropoff_lon = require(field::kDropoffLon);
  m.pickup_time = find(field::kPickupTime);
  m.dropoff_time = find(field::kDropoffTime);
  m.trip_distance = find(field::kTripDistance);
  m.total_amount = find(field::kTotalAmount);
  if (!m.total_amount) {
    auto fare = find(field::kFareAmount);
    auto tip = find(field::kTipAmount);
    if (!fare || !tip)
      throw DataError("need total_amount, or fare_amount and tip_amount, in header");
    m.fare_components = {*fare, *tip};
    for (auto extra : {field::kSurcharge, field::kMtaTax, field::kTollsAmount})
      if (auto p = find(extra)) m.fare_components.push_back(*p);
  }

  std::size_t max_pos = 0;
  for (const auto& p : {m.pickup_lat, m.pickup_lon, m.dropoff_lat, m.dropoff_lon, m.pickup_time,
                        m.dropoff_time, m.total_amount, m.trip_distance})
    if (p) max_pos = std::max(max_pos, *p);
  for (auto p : m.fare_components) max_pos = std::max(max_pos, p);
  m.min_fields = max_pos + 1;
  return m;
}

namespace {

bool parse_double(std::string_view text, double& out) {
  text = csv::trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  text = csv::trim(text);
  // YYYY-MM-DD HH:MM:SS
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' ||
      (text[10] != ' ' && text[10] != 'T') || text[13] != ':' || text[16] != ':')
    return std::nullopt;
  int y, mo, d, h, mi, s;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
      !parse_int(text.substr(14, 2), mi) || !parse_int(text.substr(17, 2), s))
    return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60 || h < 0 || mi < 0 || s < 0) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + s;
}

RowResult parse_row(std::span<const std::string> fields, const ColumnMap& columns,
                    const BoundingBox& bbox, std::uint64_t trip_id) {
  if (fields.size() < columns.min_fields) return RejectReason::MalformedRow;

  TripRecord t;
  t.trip_id = trip_id;
  double plat, plon, dlat, dlon;
  if (!parse_double(fields[*columns.pickup_lat], plat) ||
      !parse_double(fields[*columns.pickup_lon], plon) ||
      !parse_double(fields[*columns.dropoff_lat], dlat) ||
      !parse_double(fields[*columns.dropoff_lon], dlon))
    return RejectReason::MalformedNumber;

  double fare = 0.0;
  if (columns.total_amount) {
    if (!parse_double(fields[*columns.total_amount], fare)) return RejectReason::MalformedNumber;
  } else {
    for (auto pos : columns.fare_components) {
      double part;
      if (!parse_double(fields[pos], part)) return RejectReason::MalformedNumber;
      fare += part;
    }
  }

  auto optional_time = [&](const std::optional<std::size_t>& pos, std::optional<std::int64_t>& out) {
    if (!pos || csv::trim(fields[*pos]).empty()) return true;
    out = parse_timestamp(fields[*pos]);
    return out.has_value();
  };
  if (!optional_time(columns.pickup_time, t.pickup_time) ||
      !optional_time(columns.dropoff_time, t.dropoff_time))
    return RejectReason::MalformedNumber;

  if (columns.trip_distance && !csv::trim(fields[*columns.trip_distance]).empty()) {
    double mi;
    if (!parse_double(fields[*columns.trip_distance], mi) || mi < 0.0)
      return RejectReason::MalformedNumber;
    t.trip_distance_mi = quantize_miles(mi);
  }

  if ((plat == 0.0 && plon == 0.0) || (dlat == 0.0 && dlon == 0.0)) return RejectReason::ZeroIsland;

  t.pickup = {quantize_degrees(plat), quantize_degrees(plon)};
  t.dropoff = {quantize_degrees(dlat), quantize_degrees(dlon)};
  if (!t.pickup.valid() || !t.dropoff.valid() || !bbox.contains(t.pickup) ||
      !bbox.contains(t.dropoff))
    return RejectReason::OutOfBbox;

  t.total_fare = Money::from_dollars(fare);
  if (t.total_fare.cents() <= 0) return RejectReason::NonpositiveFare;

  if (t.pickup_time && t.dropoff_time && *t.pickup_time > *t.dropoff_time)
    return RejectReason::TimeInverted;
  return t;
}

namespace {

void emit(std::vector<RowResult>& results, IngestReport& report, const RecordSink& sink) {
  for (auto& r : results) {
    ++report.rows_read;
    if (auto* trip = std::get_if<TripRecord>(&r)) {
      ++report.rows_kept;
      sink(std::move(*trip));
    } else {
      report.reject(std::get<RejectReason>(r));
    }
  }
}

// Reads `in` in chunks and hands complete records to `on_records`. The
// first record is the header and goes to `on_header`.
template <typename OnHeader, typename OnRecords>
void read_chunks(std::istream& in, std::size_t chunk_bytes, OnHeader&& on_header,
                 OnRecords&& on_records) {
  std::string buffer;
  std::string chunk(std::max<std::size_t>(chunk_bytes, 4096), '\0');
  bool header_seen = false;
  while (true) {
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (in.bad()) throw IoError("read failure");
    buffer.append(chunk.data(), got);
    const bool at_eof = in.eof() || got == 0;
    auto split = csv::split_records(buffer, at_eof);
    std::span<const std::string_view> recs(split.records);
    if (!header_seen && !recs.empty()) {
      on_header(recs.front());
      header_seen = true;
      recs = recs.subspan(1);
    }
    if (!recs.empty()) on_records(recs);
    buffer.erase(0, split.consumed);
    if (at_eof) break;
  }
  if (!header_seen) throw DataError("CSV input has no header row");
}

}  // namespace

IngestReport ingest_stream(std::istream& in, const Schema& schema, const BoundingBox& bbox,
                           const RecordSink& sink, const IngestOptions& options) {
  IngestReport report;
  ColumnMap columns;
  try {
    read_chunks(
        in, options.chunk_bytes,
        [&](std::string_view header) {
          const auto names = csv::split_fields(header);
          columns = ColumnMap::resolve(schema, names);
        },
        [&](std::span<const std::string_view> records) {
          auto results = kernels::parse_rows(records, columns, bbox, report.rows_read);
          emit(results, report, sink);
        });
  } catch (const IngestAborted&) {
    throw;
  } catch (const IoError& e) {
    throw IngestAborted(e.what(), report);
  }
  return report;
}

IngestReport ingest_file(const std::filesystem::path& path, const Schema& schema,
                         const BoundingBox& bbox, const RecordSink& sink,
                         const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestAborted("cannot open " + path.string(), {});
  return ingest_stream(in, schema, bbox, sink, options);
}

IngestResult ingest_file(const std::filesystem::path& path, const Schema& schema,
                         const BoundingBox& bbox) {
  IngestResult out;
  out.report = ingest_file(path, schema, bbox,
                           [&](TripRecord&& t) { out.records.push_back(std::move(t)); });
  return out;
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(std::istream& in) {
  Table t;
  read_chunks(
      in, 16u << 20, [&](std::string_view h) { t.header = csv::split_fields(h); },
      [&](std::span<const std::string_view> recs) {
        for (auto r : recs) t.rows.push_back(csv::split_fields(r));
      });
  return t;
}

std::vector<std::size_t> key_positions(const Schema& schema, const std::vector<std::string>& header,
                                       const char* which) {
  if (schema.join_key.empty()) throw ConfigError("schema has no join_key");
  std::vector<std::size_t> out;
  for (const auto& name : schema.join_key) {
    std::optional<std::size_t> pos;
    for (std::size_t i = 0; i < header.size() && !pos; ++i)
      if (csv::trim(header[i]) == csv::trim(name)) pos = i;
    if (!pos) throw DataError(std::string(which) + " file lacks join column '" + name + "'");
    out.push_back(*pos);
  }
  return out;
}

std::optional<std::string> make_key(const std::vector<std::string>& row,
                                    const std::vector<std::size_t>& positions) {
  std::string key;
  for (auto p : positions) {
    if (p >= row.size()) return std::nullopt;
    key.append(csv::trim(row[p]));
    key.push_back('\x1f');
  }
  return key;
}

}  // namespace

IngestResult join_fare(std::istream& trips_in, std::istream& fares_in, const Schema& schema,
                       const BoundingBox& bbox) {
  const Table fares = read_table(fares_in);
  const auto fare_keys = key_positions(schema, fares.header, "fare");

  IngestResult out;
  auto& report = out.report;
  std::unordered_map<std::string, std::size_t> fare_index;
  std::vector<bool> consumed(fares.rows.size(), false);
  for (std::size_t i = 0; i < fares.rows.size(); ++i) {
    auto key = make_key(fares.rows[i], fare_keys);
    if (!key) {
      ++report.rows_read;
      report.reject(RejectReason::MalformedRow);
      consumed[i] = true;
      continue;
    }
    if (!fare_index.try_emplace(*key, i).second) {
      ++report.rows_read;
      report.reject(RejectReason::DuplicateKey);
      consumed[i] = true;
    }
  }

  std::vector<std::string> trip_header;
  std::vector<std::size_t> trip_keys;
  ColumnMap columns;
  read_chunks(
      trips_in, 16u << 20,
      [&](std::string_view h) {
        trip_header = csv::split_fields(h);
        trip_keys = key_positions(schema, trip_header, "trip");
        std::vector<std::string> combined = trip_header;
        combined.insert(combined.end(), fares.header.begin(), fares.header.end());
        columns = ColumnMap::resolve(schema, combined);
      },
      [&](std::span<const std::string_view> recs) {
        for (auto rec : recs) {
          const std::uint64_t trip_id = report.rows_read;
          ++report.rows_read;
          auto row = csv::split_fields(rec);
          auto key = make_key(row, trip_keys);
          if (!key) {
            report.reject(RejectReason::MalformedRow);
            continue;
          }
          auto it = fare_index.find(*key);
          if (it == fare_index.end()) {
            report.reject(RejectReason::Unmatched);
            continue;
          }
          if (consumed[it->second]) {
            report.reject(RejectReason::DuplicateKey);
            continue;
          }
          consumed[it->second] = true;
          if (row.size() > trip_header.size()) {
            report.reject(RejectReason::MalformedRow);
            continue;
          }
          // Short rows are padded so fare columns land at their combined offsets.
          row.resize(trip_header.size());
          const auto& fare_row = fares.rows[it->second];
          row.insert(row.end(), fare_row.begin(), fare_row.end());
          auto result = parse_row(row, columns, bbox, trip_id);
          if (auto* t = std::get_if<TripRecord>(&result)) {
            ++report.rows_kept;
            out.records.push_back(std::move(*t));
          } else {
            report.reject(std::get<RejectReason>(result));
          }
        }
      });

  for (std::size_t i = 0; i < fares.rows.size(); ++i) {
    if (!consumed[i]) {
      ++report.rows_read;
      report.reject(RejectReason::Unmatched);
    }
  }
  return out;
}

IngestResult join_fare(const std::filesystem::path& trips, const std::filesystem::path& fares,
                       const Schema& schema, const BoundingBox& bbox) {
  std::ifstream t(trips, std::ios::binary);
  if (!t) throw IoError("cannot open " + trips.string());
  std::ifstream f(fares, std::ios::binary);
  if (!f) throw IoError("cannot open " + fares.string());
  return join_fare(t, f, schema, bbox);
}

}  // namespace cabfare
