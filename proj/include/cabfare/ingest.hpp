#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cabfare/errors.hpp"
#include "cabfare/trip.hpp"

namespace cabfare {

enum class RejectReason {
  MalformedRow,
  MalformedNumber,
  ZeroIsland,
  OutOfBbox,
  NonpositiveFare,
  TimeInverted,
  Unmatched,
  DuplicateKey,
};

std::string_view to_string(RejectReason r) noexcept;

struct IngestReport {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_kept = 0;
  std::map<std::string, std::uint64_t> rejects_by_reason;

  void reject(RejectReason r) { ++rejects_by_reason[std::string(to_string(r))]; }
  std::uint64_t total_rejects() const noexcept;
  bool consistent() const noexcept { return rows_read == rows_kept + total_rejects(); }

  nlohmann::json to_json() const;
  friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

// Canonical field names. Each maps to a header name in the source CSV.
namespace field {
inline constexpr std::string_view kPickupLat = "pickup_latitude";
inline constexpr std::string_view kPickupLon = "pickup_longitude";
inline constexpr std::string_view kDropoffLat = "dropoff_latitude";
inline constexpr std::string_view kDropoffLon = "dropoff_longitude";
inline constexpr std::string_view kPickupTime = "pickup_datetime";
inline constexpr std::string_view kDropoffTime = "dropoff_datetime";
inline constexpr std::string_view kTotalAmount = "total_amount";
inline constexpr std::string_view kTripDistance = "trip_distance";
// Fallback when total_amount is not mapped: the components are summed.
inline constexpr std::string_view kFareAmount = "fare_amount";
inline constexpr std::string_view kTipAmount = "tip_amount";
inline constexpr std::string_view kSurcharge = "surcharge";
inline constexpr std::string_view kMtaTax = "mta_tax";
inline constexpr std::string_view kTollsAmount = "tolls_amount";
}  // namespace field

// Column mapping from canonical names to source header names, plus the
// composite key used to join split trip/fare files.
//
// JSON form:
//   {"columns": {"pickup_latitude": "pickup_latitude", ...},
//    "join_key": ["medallion", "hack_license", "pickup_datetime"]}
struct Schema {
  std::map<std::string, std::string> columns;
  std::vector<std::string> join_key;

  // Header names of the 2013 FOIL trip_data / trip_fare files.
  static Schema foil();
  static Schema from_json(const nlohmann::json& j);
  // "foil" selects the built-in mapping; anything else is a JSON file path.
  static Schema load(const std::string& name_or_path);
};

// Schema resolved against a concrete header row.
struct ColumnMap {
  std::optional<std::size_t> pickup_lat, pickup_lon, dropoff_lat, dropoff_lon;
  std::optional<std::size_t> pickup_time, dropoff_time;
  std::optional<std::size_t> total_amount, trip_distance;
  std::vector<std::size_t> fare_components;
  std::size_t min_fields = 0;

  // Throws DataError when a required column is missing from the header.
  static ColumnMap resolve(const Schema& schema, std::span<const std::string> header);
};

using RowResult = std::variant<TripRecord, RejectReason>;

// Validates one CSV record. Rules apply in order and the first failure wins:
// malformed-row, malformed-number, zero-island, out-of-bbox,
// nonpositive-fare, time-inverted.
RowResult parse_row(std::span<const std::string> fields, const ColumnMap& columns,
                    const BoundingBox& bbox, std::uint64_t trip_id);

// "2013-01-01 15:11:48" (or with 'T') as UTC epoch seconds.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

using RecordSink = std::function<void(TripRecord&&)>;

struct IngestOptions {
  std::size_t chunk_bytes = 16u << 20;
};

// Thrown when reading fails part-way; carries the report up to that point.
class IngestAborted : public IoError {
 public:
  IngestAborted(const std::string& what, IngestReport partial)
      : IoError(what), partial_(std::move(partial)) {}
  const IngestReport& partial_report() const noexcept { return partial_; }

 private:
  IngestReport partial_;
};

// Streams records to `sink` in file order. Rows are parsed in parallel per
// chunk and emitted in input order, so output and report are deterministic.
IngestReport ingest_stream(std::istream& in, const Schema& schema, const BoundingBox& bbox,
                           const RecordSink& sink, const IngestOptions& options = {});
IngestReport ingest_file(const std::filesystem::path& path, const Schema& schema,
                         const BoundingBox& bbox, const RecordSink& sink,
                         const IngestOptions& options = {});

struct IngestResult {
  std::vector<TripRecord> records;
  IngestReport report;
};

IngestResult ingest_file(const std::filesystem::path& path, const Schema& schema,
                         const BoundingBox& bbox);

// Joins a trip-geometry file with a fare file on schema.join_key. The first
// fare row per key wins; later duplicates and unpaired rows on either side
// are rejected. rows_read counts every trip row plus every fare row that was
// not consumed by a match.
IngestResult join_fare(const std::filesystem::path& trips, const std::filesystem::path& fares,
                       const Schema& schema, const BoundingBox& bbox);
IngestResult join_fare(std::istream& trips, std::istream& fares, const Schema& schema,
                       const BoundingBox& bbox);

}  // namespace cabfare
