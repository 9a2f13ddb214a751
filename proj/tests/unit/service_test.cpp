#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <thread>

#include "cabfare/errors.hpp"
#include "cabfare/fare_query.hpp"
#include "cabfare/ingest.hpp"
#include "cabfare/service.hpp"
#include "harness.hpp"
#include "synthetic.hpp"

using namespace cabfare;

namespace {

const GeoPoint kTimesSquare{40.7580, -73.9855};
// 2.4 miles due north of Times Square: the zero-spread illustrative card
// prices this at exactly $12.50.
const GeoPoint kUptown{40.792736, -73.9855};

nlohmann::json zero_spread_emulator() {
  auto card = RateCard::illustrative();
  card.range_spread = 0.0;
  return {{"kind", "emulator"}, {"rate_card", card.to_json()}};
}

std::shared_ptr<const MeshIndex> fixture_index() {
  static const auto index = [] {
    auto r = ingest_file(testkit::data_dir() / "fixture" / "trips.csv", Schema::foil(),
                         BoundingBox::nyc());
    return std::make_shared<const MeshIndex>(MeshIndex::build(std::move(r.records), MeshSpec(), 1357000000));
  }();
  return index;
}

ServiceConfig base_config(nlohmann::json provider = zero_spread_emulator()) {
  ServiceConfig c;
  c.port = 0;
  c.provider = std::move(provider);
  c.geocoder = {{"kind", "stub"},
                {"table_path", (testkit::data_dir() / "fixture" / "geocoder.json").string()}};
  return c;
}

std::shared_ptr<FareService> make_service(const ServiceConfig& c, bool load = true) {
  auto s = std::make_shared<FareService>(c, make_provider(c.provider), make_geocoder(c.geocoder));
  if (load) s->set_index(fixture_index());
  return s;
}

QueryParams compare_params(GeoPoint o, GeoPoint d) {
  auto str = [](double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  };
  return {{"olat", str(o.lat)}, {"olon", str(o.lon)}, {"dlat", str(d.lat)}, {"dlon", str(d.lon)}};
}

nlohmann::json body_of(const HttpReply& r) { return nlohmann::json::parse(r.body); }

}  // namespace

TEST(ServiceCompare, FixturePairExactBody) {
  const auto svc = make_service(base_config());
  const auto reply = svc->compare(compare_params(kTimesSquare, kUptown));
  ASSERT_EQ(reply.status, 200) << reply.body;

  // The same answer straight from the query module.
  const RateCardEmulator emu(RateCard::from_json(zero_spread_emulator()["rate_card"]));
  const auto direct = compare(*fixture_index(), emu, kTimesSquare, kUptown);
  const auto& matched = fixture_index()->trip(*direct.yellow.matched_trip);
  const nlohmann::json expected{
      {"yellow", to_json(direct.yellow)},
      {"matched_trip",
       {{"ordinal", *direct.yellow.matched_trip},
        {"trip_id", matched.trip_id},
        {"pickup", {{"lat", matched.pickup.lat}, {"lon", matched.pickup.lon}}},
        {"dropoff", {{"lat", matched.dropoff.lat}, {"lon", matched.dropoff.lon}}},
        {"dest_gap_m", *direct.yellow.dest_gap_m},
        {"ring_used", *direct.yellow.origin_ring}}},
      {"uber", to_json(direct.uber)},
      {"cheaper", "UBER"},
      {"delta_usd", -1.8},
      {"warnings", nlohmann::json::array()}};
  EXPECT_EQ(reply.body, expected.dump());

  const auto j = body_of(reply);
  EXPECT_EQ(j["yellow"]["amount_usd"], 14.3);
  EXPECT_EQ(j["uber"]["amount_usd"], 12.5);
  EXPECT_EQ(j["matched_trip"]["ordinal"], 0);
  EXPECT_LT(j["matched_trip"]["dest_gap_m"].get<double>(), 250.0);
}

TEST(ServiceCompare, ByteIdenticalRepeats) {
  const auto svc = make_service(base_config());
  const auto a = svc->compare(compare_params(kTimesSquare, kUptown));
  for (int i = 0; i < 20; ++i) EXPECT_EQ(svc->compare(compare_params(kTimesSquare, kUptown)).body, a.body);
}

TEST(ServiceCompare, ValidationErrors) {
  const auto svc = make_service(base_config());
  auto q = compare_params(kTimesSquare, kUptown);
  q.find("olat")->second = "91";
  EXPECT_EQ(svc->compare(q).status, 400);
  q.find("olat")->second = "abc";
  EXPECT_EQ(svc->compare(q).status, 400);
  q.find("olat")->second = "nan";
  EXPECT_EQ(svc->compare(q).status, 400);
  q.erase("olat");
  EXPECT_EQ(svc->compare(q).status, 400);
  const auto out = svc->compare(compare_params({41.5, -73.98}, kUptown));
  EXPECT_EQ(out.status, 400);
  EXPECT_EQ(body_of(out)["error"], "out-of-bbox");
}

TEST(ServiceCompare, OriginInTheHudsonIsNotFound) {
  const auto svc = make_service(base_config());
  const auto r = svc->compare(compare_params({40.7600, -74.0110}, kUptown));
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(body_of(r)["error"], "no-trips-found");
}

TEST(ServiceCompare, LargeDestinationGapWarns) {
  const auto svc = make_service(base_config());
  const auto r = svc->compare(compare_params(kTimesSquare, {40.7100, -74.0000}));
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(body_of(r)["warnings"], nlohmann::json::array({"large-dest-gap"}));
}

TEST(ServiceCompare, ProviderDown) {
  testkit::StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const nlohmann::json http{{"kind", "http"}, {"url", stub.url("/estimate")}, {"timeout_ms", 500}};

  const auto strict = make_service(base_config(http));
  const auto r = strict->compare(compare_params(kTimesSquare, kUptown));
  EXPECT_EQ(r.status, 502);

  auto cfg = base_config(http);
  cfg.degraded_mode = true;
  const auto degraded = make_service(cfg);
  const auto d = degraded->compare(compare_params(kTimesSquare, kUptown));
  ASSERT_EQ(d.status, 200);
  const auto j = body_of(d);
  EXPECT_FALSE(j.contains("uber"));
  EXPECT_FALSE(j.contains("cheaper"));
  EXPECT_FALSE(j.contains("delta_usd"));
  EXPECT_EQ(j["yellow"]["amount_usd"], 14.3);
  EXPECT_EQ(j["warnings"], nlohmann::json::array({"provider-down"}));
}

TEST(ServiceGeocode, StubTable) {
  const auto svc = make_service(base_config());
  const auto r = svc->geocode({{"q", "  Times   SQUARE "}});
  ASSERT_EQ(r.status, 200);
  const auto j = body_of(r);
  EXPECT_EQ(j["lat"], 40.7580);
  EXPECT_EQ(j["lon"], -73.9855);
  EXPECT_EQ(svc->geocode({{"q", "atlantis"}}).status, 404);
  EXPECT_EQ(svc->geocode({}).status, 400);
  EXPECT_EQ(svc->geocode({{"q", "   "}}).status, 400);
}

TEST(ServiceGeocode, TimeoutIsBadGateway) {
  testkit::StubServer stub([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(R"({"lat": 1, "lon": 2, "label": "x"})", "application/json");
  });
  auto cfg = base_config();
  cfg.geocoder = {{"kind", "http"}, {"url", stub.url("/geocode")}, {"timeout_ms", 100}};
  const auto svc = make_service(cfg);
  EXPECT_EQ(svc->geocode({{"q", "times square"}}).status, 502);
}

TEST(ServiceHealth, BeforeAndAfterLoad) {
  const auto svc = make_service(base_config(), false);
  EXPECT_EQ(svc->healthz().status, 503);
  EXPECT_EQ(svc->compare(compare_params(kTimesSquare, kUptown)).status, 503);
  svc->set_index(fixture_index());
  const auto r = svc->healthz();
  ASSERT_EQ(r.status, 200);
  const auto j = body_of(r);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["index_trips"], 10);  // rows_kept of the fixture ingest
  EXPECT_EQ(j["built_at"], 1357000000);
}

TEST(ServiceConfig, MismatchedMeshRejected) {
  auto cfg = base_config();
  cfg.mesh = MeshSpec(BoundingBox::nyc(), 250.0);
  const auto svc = make_service(cfg, false);
  EXPECT_THROW(svc->set_index(fixture_index()), ConfigError);
}

TEST(ServiceConfig, LoadsBundledFileAndChecksPaths) {
  testkit::TempDir dir;
  std::filesystem::copy(testkit::data_dir() / "fixture" / "service.json", dir / "service.json");
  EXPECT_THROW(ServiceConfig::load(dir / "service.json"), IoError);  // no index or table yet
  std::filesystem::copy(testkit::data_dir() / "fixture" / "geocoder.json", dir / "geocoder.json");
  fixture_index()->save(dir / "fixture.idx");
  const auto c = ServiceConfig::load(dir / "service.json");
  EXPECT_EQ(c.index_path, dir / "fixture.idx");
  EXPECT_TRUE(c.degraded_mode);
  EXPECT_EQ(c.max_ring, 10);
  ASSERT_TRUE(c.mesh);
  EXPECT_EQ(*c.mesh, MeshSpec());

  auto bad = nlohmann::json::parse(testkit::read_text(dir / "service.json"));
  bad["limits"]["worker_threads"] = 0;
  testkit::write_text(dir / "bad.json", bad.dump());
  EXPECT_THROW(ServiceConfig::load(dir / "bad.json"), ConfigError);
}

TEST(ServiceConfig, RelativeConfigPathResolvesTableOnce) {
  testkit::TempDir dir;
  std::filesystem::copy(testkit::data_dir() / "fixture" / "service.json", dir / "service.json");
  std::filesystem::copy(testkit::data_dir() / "fixture" / "geocoder.json", dir / "geocoder.json");
  fixture_index()->save(dir / "fixture.idx");
  const auto relative = std::filesystem::relative(dir / "service.json", std::filesystem::current_path());
  ASSERT_TRUE(relative.is_relative());
  const auto svc = make_fare_service(ServiceConfig::load(relative));
  EXPECT_EQ(svc->geocode({{"q", "times square"}}).status, 200);
}

TEST(ServiceHttp, EndpointsAndCors) {
  const auto svc = make_service(base_config());
  ServiceHost host(svc);
  const int port = host.start();
  httplib::Client client("127.0.0.1", port);

  const auto h = client.Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  EXPECT_EQ(h->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(h->get_header_value("Content-Type"), "application/json");

  const auto c = client.Get("/v1/compare?olat=40.758&olon=-73.9855&dlat=40.792736&dlon=-73.9855");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->status, 200);
  EXPECT_EQ(c->body, svc->compare(compare_params(kTimesSquare, kUptown)).body);

  const auto g = client.Get("/v1/geocode?q=times%20square");
  ASSERT_TRUE(g);
  EXPECT_EQ(g->status, 200);
  EXPECT_EQ(nlohmann::json::parse(g->body)["lat"], 40.7580);

  const auto bad = client.Get("/v1/compare?olat=91&olon=0&dlat=0&dlon=0");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  const auto pre = client.Options("/v1/compare");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_EQ(pre->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("GET"), std::string::npos);
  host.stop();
}
