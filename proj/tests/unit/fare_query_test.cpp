#include <gtest/gtest.h>

#include <random>

#include "cabfare/errors.hpp"
#include "cabfare/fare_query.hpp"
#include "oracle.hpp"
#include "synthetic.hpp"

using namespace cabfare;

namespace {

class FixedProvider final : public PricingProvider {
 public:
  FixedProvider(std::int64_t lo, std::int64_t hi) : lo_(lo), hi_(hi) {}
  PriceRange estimate(GeoPoint, GeoPoint) const override {
    return PriceRange(Money::from_cents(lo_), Money::from_cents(hi_));
  }

 private:
  std::int64_t lo_, hi_;
};

TripRecord trip_at(GeoPoint pickup, GeoPoint dropoff, std::int64_t cents) {
  TripRecord t;
  t.pickup = pickup;
  t.dropoff = dropoff;
  t.total_fare = Money::from_cents(cents);
  return t;
}

const GeoPoint kOrigin{40.7580, -73.9855};
const GeoPoint kDest{40.7800, -73.9600};

}  // namespace

TEST(FindComparableTrip, ExactDropoffHasZeroGap) {
  const MeshSpec spec;
  const auto index = MeshIndex::build(
      {trip_at(kOrigin, testkit::north_of(kDest, 300), 900), trip_at(kOrigin, kDest, 1000)}, spec);
  const auto m = find_comparable_trip(index, kOrigin, kDest);
  EXPECT_EQ(m.ordinal, 1u);
  EXPECT_EQ(m.dest_gap_m, 0.0);
  EXPECT_EQ(m.ring_used, 1);
}

TEST(FindComparableTrip, PicksSmallestGap) {
  const MeshSpec spec;
  const auto index = MeshIndex::build({trip_at(kOrigin, testkit::north_of(kDest, 500), 1000),
                                       trip_at(kOrigin, testkit::east_of(kDest, 120), 1100),
                                       trip_at(kOrigin, testkit::north_of(kDest, -900), 1200)},
                                      spec);
  const auto m = find_comparable_trip(index, kOrigin, kDest);
  EXPECT_EQ(m.ordinal, 1u);
  EXPECT_NEAR(m.dest_gap_m, 120.0, 1e-6);
}

TEST(FindComparableTrip, EqualGapsGoToLowestOrdinal) {
  const MeshSpec spec;
  const auto d = testkit::north_of(kDest, 200);
  const auto index = MeshIndex::build(
      {trip_at(kOrigin, testkit::north_of(kDest, 700), 1), trip_at(kOrigin, d, 2), trip_at(kOrigin, d, 3)},
      spec);
  EXPECT_EQ(find_comparable_trip(index, kOrigin, kDest).ordinal, 1u);
}

TEST(FindComparableTrip, DestinationOutsideBboxThrows) {
  const MeshSpec spec;
  const auto index = MeshIndex::build({trip_at(kOrigin, kDest, 100)}, spec);
  EXPECT_THROW(find_comparable_trip(index, kOrigin, {41.5, -73.9}), OutOfBounds);
}

TEST(FindComparableTrip, MatchesBruteForceArgmin) {
  const MeshSpec spec;
  const auto trips = testkit::synthetic_corpus(10000, 4242);
  const auto index = MeshIndex::build(trips, spec);
  std::mt19937_64 rng(77);
  int matched = 0;
  for (int q = 0; q < 100; ++q) {
    const auto o = testkit::random_point(rng, spec.bbox());
    const auto d = testkit::random_point(rng, spec.bbox());
    const auto expected = oracle::comparable_trip(trips, spec, o, d, kDefaultMaxRing);
    if (!expected) {
      EXPECT_THROW(find_comparable_trip(index, o, d), NoTripsFound);
      continue;
    }
    const auto got = find_comparable_trip(index, o, d);
    ASSERT_EQ(got.ordinal, expected->ordinal);
    ASSERT_EQ(got.ring_used, expected->ring);
    ASSERT_NEAR(got.dest_gap_m, static_cast<double>(expected->gap_m), 1e-6);
    ++matched;
  }
  EXPECT_GT(matched, 50);
}

TEST(FindComparableTrip, GapNeverGrowsWithMaxRing) {
  const MeshSpec spec;
  const auto trips = testkit::synthetic_corpus(3000, 8);
  const auto index = MeshIndex::build(trips, spec);
  std::mt19937_64 rng(5);
  for (int q = 0; q < 50; ++q) {
    const auto o = testkit::random_point(rng, spec.bbox());
    const auto d = testkit::random_point(rng, spec.bbox());
    std::optional<double> last;
    for (std::int32_t r = 1; r <= 30; ++r) {
      try {
        const double gap = find_comparable_trip(index, o, d, r).dest_gap_m;
        if (last) {
          ASSERT_LE(gap, *last);
        }
        last = gap;
      } catch (const NoTripsFound&) {
        ASSERT_FALSE(last.has_value());
      }
    }
  }
}

TEST(YellowQuote, PassesThroughStoredFare) {
  const MeshSpec spec;
  const auto index = MeshIndex::build({trip_at(kOrigin, testkit::north_of(kDest, 40), 1430)}, spec);
  const auto q = yellow_quote(index, kOrigin, kDest);
  EXPECT_EQ(q.service, Service::Yellow);
  EXPECT_EQ(q.basis, QuoteBasis::HistoricalTrip);
  EXPECT_EQ(q.amount, Money::from_cents(1430));
  const auto m = find_comparable_trip(index, kOrigin, kDest);
  EXPECT_EQ(q.matched_trip, m.ordinal);
  EXPECT_EQ(q.origin_ring, m.ring_used);
  EXPECT_EQ(q.dest_gap_m, m.dest_gap_m);
}

TEST(YellowQuote, EmptyIndexThrows) {
  const auto index = MeshIndex::build({}, MeshSpec());
  EXPECT_THROW(yellow_quote(index, kOrigin, kDest), NoTripsFound);
}

TEST(UberQuote, MeanOfRange) {
  EXPECT_EQ(uber_quote(FixedProvider(1000, 1400), kOrigin, kDest).amount, Money::from_cents(1200));
  EXPECT_EQ(uber_quote(FixedProvider(900, 900), kOrigin, kDest).amount, Money::from_cents(900));
  EXPECT_THROW(uber_quote(FixedProvider(1400, 1000), kOrigin, kDest), InvalidRange);
  const auto q = uber_quote(FixedProvider(1000, 1400), kOrigin, kDest);
  EXPECT_EQ(q.service, Service::UberX);
  EXPECT_EQ(q.basis, QuoteBasis::RangeMean);
  EXPECT_FALSE(q.matched_trip || q.origin_ring || q.dest_gap_m);
}

TEST(Compare, YellowCheaper) {
  const auto index = MeshIndex::build({trip_at(kOrigin, kDest, 1050)}, MeshSpec());
  const auto r = compare(index, FixedProvider(1100, 1400), kOrigin, kDest);
  EXPECT_EQ(r.uber.amount, Money::from_cents(1250));
  EXPECT_EQ(r.cheaper, Cheaper::Yellow);
  EXPECT_EQ(r.delta, Money::from_cents(200));
}

TEST(Compare, UberCheaper) {
  const auto index = MeshIndex::build({trip_at(kOrigin, kDest, 4000)}, MeshSpec());
  const auto r = compare(index, FixedProvider(3400, 3600), kOrigin, kDest);
  EXPECT_EQ(r.cheaper, Cheaper::Uber);
  EXPECT_EQ(r.delta, Money::from_cents(-500));
}

TEST(Compare, EqualToTheCentIsTie) {
  const auto index = MeshIndex::build({trip_at(kOrigin, kDest, 1234)}, MeshSpec());
  const auto r = compare(index, FixedProvider(1200, 1268), kOrigin, kDest);
  EXPECT_EQ(r.cheaper, Cheaper::Tie);
  EXPECT_EQ(r.delta.cents(), 0);
  const auto off = compare(index, FixedProvider(1200, 1270), kOrigin, kDest);
  EXPECT_EQ(off.cheaper, Cheaper::Yellow);
}

TEST(Compare, Deterministic) {
  const auto trips = testkit::synthetic_corpus(2000, 6);
  const auto index = MeshIndex::build(trips, MeshSpec());
  const FixedProvider p(1500, 1700);
  EXPECT_EQ(compare(index, p, kOrigin, kDest), compare(index, p, kOrigin, kDest));
  EXPECT_EQ(to_json(compare(index, p, kOrigin, kDest)).dump(),
            to_json(compare(index, p, kOrigin, kDest)).dump());
}

TEST(Compare, JsonShape) {
  const auto index = MeshIndex::build({trip_at(kOrigin, kDest, 1050)}, MeshSpec());
  const auto j = to_json(compare(index, FixedProvider(1100, 1400), kOrigin, kDest));
  EXPECT_EQ(j["cheaper"], "YELLOW");
  EXPECT_EQ(j["delta_usd"], 2.0);
  EXPECT_EQ(j["yellow"]["service"], "YELLOW");
  EXPECT_EQ(j["yellow"]["basis"], "HISTORICAL_TRIP");
  EXPECT_EQ(j["yellow"]["amount_usd"], 10.5);
  EXPECT_EQ(j["uber"]["service"], "UBER_X");
  EXPECT_EQ(j["uber"]["basis"], "RANGE_MEAN");
  EXPECT_FALSE(j["uber"].contains("matched_trip"));
}
