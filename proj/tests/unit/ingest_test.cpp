#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cabfare/csv.hpp"
#include "cabfare/ingest.hpp"
#include "cabfare/record_file.hpp"
#include "harness.hpp"

using namespace cabfare;

namespace {

const std::string kHeader =
    "pickup_datetime,dropoff_datetime,trip_distance,pickup_longitude,pickup_latitude,"
    "dropoff_longitude,dropoff_latitude,total_amount\n";

std::vector<std::string> header_fields() {
  auto h = kHeader;
  h.pop_back();
  return csv::split_fields(h);
}

RowResult parse(const std::string& line) {
  static const ColumnMap columns = ColumnMap::resolve(Schema::foil(), header_fields());
  return parse_row(csv::split_fields(line), columns, BoundingBox::nyc(), 7);
}

RejectReason reason(const RowResult& r) { return std::get<RejectReason>(r); }

const std::string kFourRows = kHeader +
    "2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,40.75,-73.97,40.76,11.5\n"
    "2013-01-01 11:00:00,2013-01-01 11:05:00,0.6,-73.98,40.74,-73.985,40.748,6.25\n"
    "2013-01-01 12:00:00,2013-01-01 12:09:00,1.0,0,0,0,0,9.00\n"
    "2013-01-01 13:00:00,2013-01-01 13:30:00,5.2,-73.95,40.77,-73.87,40.77,24.10\n";

IngestResult ingest_text(const std::string& text, const IngestOptions& options = {}) {
  std::istringstream in(text);
  IngestResult out;
  out.report = ingest_stream(in, Schema::foil(), BoundingBox::nyc(),
                             [&](TripRecord&& t) { out.records.push_back(std::move(t)); }, options);
  return out;
}

}  // namespace

TEST(Csv, QuotedFieldsAndCrlf) {
  const std::string text = "a,\"b,c\",\"d\"\"e\"\r\n\"multi\nline\",x, y \r\n\r\n";
  const auto split = csv::split_records(text, true);
  ASSERT_EQ(split.records.size(), 2u);
  EXPECT_EQ(csv::split_fields(split.records[0]), (std::vector<std::string>{"a", "b,c", "d\"e"}));
  EXPECT_EQ(csv::split_fields(split.records[1]), (std::vector<std::string>{"multi\nline", "x", "y"}));
}

TEST(Csv, LeavesPartialTrailingRecord) {
  const auto split = csv::split_records("a,b\nc,\"d", false);
  ASSERT_EQ(split.records.size(), 1u);
  EXPECT_EQ(split.consumed, 4u);
}

TEST(ParseRow, ValidRowKept) {
  const auto r = parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,40.75,-73.97,40.76,11.5");
  ASSERT_TRUE(std::holds_alternative<TripRecord>(r));
  const auto& t = std::get<TripRecord>(r);
  EXPECT_EQ(t.trip_id, 7u);
  EXPECT_EQ(t.pickup, (GeoPoint{40.75, -73.99}));
  EXPECT_EQ(t.dropoff, (GeoPoint{40.76, -73.97}));
  EXPECT_EQ(t.total_fare, Money::from_cents(1150));
  EXPECT_EQ(t.pickup_time, 1357034400);
  EXPECT_EQ(t.dropoff_time, 1357034400 + 720);
  EXPECT_EQ(t.trip_distance_mi, 1.5);
}

TEST(ParseRow, ZeroIsland) {
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,0.0,0.0,-73.97,40.76,11.5")),
            RejectReason::ZeroIsland);
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,40.75,0,0,11.5")),
            RejectReason::ZeroIsland);
}

TEST(ParseRow, NonpositiveFare) {
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,40.75,-73.97,40.76,-3.00")),
            RejectReason::NonpositiveFare);
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,40.75,-73.97,40.76,0.004")),
            RejectReason::NonpositiveFare);
}

TEST(ParseRow, OtherRejects) {
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,40.75,-73.97")),
            RejectReason::MalformedRow);
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,abc,-73.97,40.76,11.5")),
            RejectReason::MalformedNumber);
  EXPECT_EQ(reason(parse("2013-13-01 10:00:00,2013-01-01 10:12:00,1.5,-73.99,40.75,-73.97,40.76,11.5")),
            RejectReason::MalformedNumber);
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,-72.00,40.75,-73.97,40.76,11.5")),
            RejectReason::OutOfBbox);
  EXPECT_EQ(reason(parse("2013-01-01 10:30:00,2013-01-01 10:12:00,1.5,-73.99,40.75,-73.97,40.76,11.5")),
            RejectReason::TimeInverted);
}

TEST(ParseRow, FirstFailedRuleWins) {
  // Zero island and negative fare: zero island is checked first.
  EXPECT_EQ(reason(parse("2013-01-01 10:00:00,2013-01-01 10:12:00,1.5,0,0,-73.97,40.76,-3")),
            RejectReason::ZeroIsland);
  // Out of bbox and inverted times.
  EXPECT_EQ(reason(parse("2013-01-01 10:30:00,2013-01-01 10:12:00,1.5,-80,40.75,-73.97,40.76,5")),
            RejectReason::OutOfBbox);
}

TEST(ParseRow, SumsFareComponentsWithoutTotal) {
  const std::vector<std::string> header{"pickup_longitude", "pickup_latitude", "dropoff_longitude",
                                        "dropoff_latitude", "fare_amount",     "surcharge",
                                        "mta_tax",          "tip_amount",      "tolls_amount"};
  const auto columns = ColumnMap::resolve(Schema::foil(), header);
  const auto r = parse_row(csv::split_fields("-73.99,40.75,-73.97,40.76,9.0,0.5,0.5,2.0,5.33"),
                           columns, BoundingBox::nyc(), 0);
  ASSERT_TRUE(std::holds_alternative<TripRecord>(r));
  EXPECT_EQ(std::get<TripRecord>(r).total_fare, Money::from_cents(1733));
}

TEST(ColumnMap, MissingRequiredColumnThrows) {
  EXPECT_THROW(ColumnMap::resolve(Schema::foil(), std::vector<std::string>{"pickup_latitude"}),
               DataError);
}

TEST(IngestFile, FourRowFixtureWithOneBadRow) {
  const auto r = ingest_text(kFourRows);
  EXPECT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.report.rows_read, 4u);
  EXPECT_EQ(r.report.rows_kept, 3u);
  ASSERT_EQ(r.report.rejects_by_reason.size(), 1u);
  EXPECT_EQ(r.report.rejects_by_reason.at("zero-island"), 1u);
  EXPECT_TRUE(r.report.consistent());
  // File order preserved, trip ids are row numbers.
  EXPECT_EQ(r.records[0].trip_id, 0u);
  EXPECT_EQ(r.records[1].trip_id, 1u);
  EXPECT_EQ(r.records[2].trip_id, 3u);
}

TEST(IngestFile, HeaderOnly) {
  const auto r = ingest_text(kHeader);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.report.rows_read, 0u);
  EXPECT_TRUE(r.report.consistent());
}

TEST(IngestFile, EmptyInputHasNoHeader) { EXPECT_THROW(ingest_text(""), DataError); }

TEST(IngestFile, CrlfMatchesLf) {
  std::string crlf;
  for (char c : kFourRows) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  const auto a = ingest_text(kFourRows), b = ingest_text(crlf);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.report, b.report);
}

TEST(IngestFile, ChunkSizeDoesNotChangeOutput) {
  std::string text = kHeader;
  for (int i = 0; i < 2000; ++i)
    text += "2013-01-01 10:00:00,2013-01-01 10:12:00," + std::to_string(i % 7) + ".25,-73.99,40.7" +
            std::to_string(i % 10) + ",-73.97,40.76," + std::to_string(5 + i % 30) + ".5\n";
  const auto a = ingest_text(text, {.chunk_bytes = 4096});
  const auto b = ingest_text(text, {.chunk_bytes = 1u << 24});
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.report.rows_read, 2000u);
}

TEST(IngestFile, DeterministicBytes) {
  testkit::TempDir dir;
  testkit::write_text(dir / "in.csv", kFourRows);
  const auto a = ingest_file(dir / "in.csv", Schema::foil(), BoundingBox::nyc());
  const auto b = ingest_file(dir / "in.csv", Schema::foil(), BoundingBox::nyc());
  write_records(dir / "a.rec", a.records);
  write_records(dir / "b.rec", b.records);
  EXPECT_EQ(testkit::read_text(dir / "a.rec"), testkit::read_text(dir / "b.rec"));
  EXPECT_EQ(a.report.to_json().dump(), b.report.to_json().dump());
}

TEST(IngestFile, MissingFileAbortsWithPartialReport) {
  try {
    ingest_file("/nonexistent/trips.csv", Schema::foil(), BoundingBox::nyc());
    FAIL() << "expected IngestAborted";
  } catch (const IngestAborted& e) {
    EXPECT_EQ(e.partial_report().rows_read, 0u);
  }
}

TEST(IngestFile, BundledFixtureKeepsOnlyValidRecords) {
  const auto r = ingest_file(testkit::data_dir() / "fixture" / "trips.csv", Schema::foil(),
                             BoundingBox::nyc());
  EXPECT_EQ(r.report.rows_read, 12u);
  EXPECT_EQ(r.report.rows_kept, 10u);
  EXPECT_EQ(r.report.rejects_by_reason.at("zero-island"), 1u);
  EXPECT_EQ(r.report.rejects_by_reason.at("nonpositive-fare"), 1u);
  EXPECT_TRUE(r.report.consistent());
  for (const auto& t : r.records) EXPECT_TRUE(satisfies_invariants(t, BoundingBox::nyc()));
}

TEST(IngestReport, JsonShape) {
  IngestReport r;
  r.rows_read = 3;
  r.rows_kept = 2;
  r.reject(RejectReason::OutOfBbox);
  const auto j = r.to_json();
  EXPECT_EQ(j["rows_read"], 3);
  EXPECT_EQ(j["rows_kept"], 2);
  EXPECT_EQ(j["rejects_by_reason"]["out-of-bbox"], 1);
  EXPECT_TRUE(r.consistent());
}

namespace {

const std::string kTripData =
    "medallion,hack_license,pickup_datetime,dropoff_datetime,trip_distance,pickup_longitude,"
    "pickup_latitude,dropoff_longitude,dropoff_latitude\n";
const std::string kTripFare =
    "medallion, hack_license, pickup_datetime, fare_amount, surcharge, mta_tax, tip_amount, "
    "tolls_amount, total_amount\n";

std::string trip_row(const std::string& m, const std::string& t) {
  return m + ",H1," + t + "," + t + ",1.0,-73.99,40.75,-73.97,40.76\n";
}
std::string fare_row(const std::string& m, const std::string& t, const std::string& total) {
  return m + ",H1," + t + ",8,0.5,0.5,1,0," + total + "\n";
}

IngestResult join(const std::string& trips, const std::string& fares) {
  std::istringstream t(trips), f(fares);
  return join_fare(t, f, Schema::foil(), BoundingBox::nyc());
}

}  // namespace

TEST(JoinFare, TwoMatchingPairs) {
  const auto r = join(kTripData + trip_row("A", "2013-01-01 00:00:00") + trip_row("B", "2013-01-01 00:05:00"),
                      kTripFare + fare_row("B", "2013-01-01 00:05:00", "11.00") +
                          fare_row("A", "2013-01-01 00:00:00", "10.00"));
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].total_fare, Money::from_cents(1000));
  EXPECT_EQ(r.records[1].total_fare, Money::from_cents(1100));
  EXPECT_EQ(r.report.rows_read, 2u);
  EXPECT_TRUE(r.report.consistent());
}

TEST(JoinFare, TripWithoutFareIsUnmatched) {
  const auto r = join(kTripData + trip_row("A", "2013-01-01 00:00:00") + trip_row("C", "2013-01-01 00:09:00"),
                      kTripFare + fare_row("A", "2013-01-01 00:00:00", "10.00"));
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.report.rejects_by_reason.at("unmatched"), 1u);
  EXPECT_TRUE(r.report.consistent());
}

TEST(JoinFare, DuplicateFareKeyKeepsFirst) {
  const auto r = join(kTripData + trip_row("A", "2013-01-01 00:00:00"),
                      kTripFare + fare_row("A", "2013-01-01 00:00:00", "10.00") +
                          fare_row("A", "2013-01-01 00:00:00", "99.00"));
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].total_fare, Money::from_cents(1000));
  EXPECT_EQ(r.report.rejects_by_reason.at("duplicate-key"), 1u);
  EXPECT_TRUE(r.report.consistent());
}

TEST(JoinFare, OrphanFareCountsAsUnmatched) {
  const auto r = join(kTripData + trip_row("A", "2013-01-01 00:00:00"),
                      kTripFare + fare_row("A", "2013-01-01 00:00:00", "10.00") +
                          fare_row("Z", "2013-01-01 00:00:00", "12.00"));
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.report.rows_read, 2u);
  EXPECT_EQ(r.report.rejects_by_reason.at("unmatched"), 1u);
  EXPECT_TRUE(r.report.consistent());
}
