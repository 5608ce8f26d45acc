#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include "fixture.hpp"
#include "recsearch/config.hpp"
#include "recsearch/error.hpp"
#include "recsearch/service.hpp"
#include "test_util.hpp"

// After Eigen: the resolver header pulled in here defines a `_res` macro.
#include <httplib.h>
#include <json.hpp>

using namespace recsearch;
using nlohmann::json;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fx_ = testutil::make_fixture().release();
    service_ = new Service(ServingConfig{}, &log_);
    LoadedSystem loaded{fx_->system, {{"model", "00000000"}}};
    service_->set_artifacts(std::move(loaded));
  }
  static void TearDownTestSuite() {
    delete service_;
    delete fx_;
  }

  static json body(const HttpReply& r) { return json::parse(r.body); }
  const std::string& query(std::size_t i = 0) const { return fx_->data.pairs[i].query_text; }

  static testutil::Fixture* fx_;
  static Service* service_;
  static std::ostringstream log_;
};

testutil::Fixture* ServiceTest::fx_ = nullptr;
Service* ServiceTest::service_ = nullptr;
std::ostringstream ServiceTest::log_;

}  // namespace

TEST(WireFloat, SixSignificantDigits) {
  EXPECT_DOUBLE_EQ(wire_float(0.123456789), 0.123457);
  EXPECT_DOUBLE_EQ(wire_float(123456789.0), 123457000.0);
  EXPECT_DOUBLE_EQ(wire_float(0.5), 0.5);
  EXPECT_DOUBLE_EQ(wire_float(-1.0000004), -1.0);
}

TEST(Service, LoadingUntilArtifactsArrive) {
  Service s(ServingConfig{});
  EXPECT_FALSE(s.ready());
  const auto h = s.health();
  EXPECT_EQ(h.status, 503);
  EXPECT_EQ(json::parse(h.body)["status"], "loading");
  EXPECT_EQ(s.search(R"({"query":"x"})").status, 503);
  EXPECT_EQ(s.item("x").status, 503);
}

TEST_F(ServiceTest, Health) {
  const auto r = service_->health();
  ASSERT_EQ(r.status, 200);
  const auto j = body(r);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["N"], 400);
  EXPECT_EQ(j["dims"], 32);
  EXPECT_EQ(j["checksums"]["model"], "00000000");
  EXPECT_EQ(j["modes"], json({"dense", "sparse", "hybrid"}));
  EXPECT_EQ(j["engines"], json({"flat", "hnsw"}));
  EXPECT_EQ(j["precisions"], json({"fp32", "int8"}));
}

TEST_F(ServiceTest, SearchResponseShape) {
  const auto r = service_->search(json{{"query", query()}, {"k", 5}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = body(r);
  ASSERT_EQ(j["results"].size(), 5u);
  EXPECT_EQ(j["mode"], "dense");
  EXPECT_EQ(j["k"], 5);
  double prev = 2.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& res = j["results"][i];
    EXPECT_EQ(res["rank"], i + 1);
    EXPECT_TRUE(res["item_id"].is_string());
    EXPECT_TRUE(res["title"].is_string());
    EXPECT_TRUE(res["brand"].is_string());
    EXPECT_LE(res["score"].get<double>(), prev);
    prev = res["score"].get<double>();
    EXPECT_TRUE(res["source_scores"]["sparse"].is_null());
  }
  for (const char* stage : {"encode", "search", "lookup", "total"}) {
    EXPECT_GE(j["timings_ms"][stage].get<double>(), 0.0) << stage;
  }
  EXPECT_EQ(r.k, 5u);
  EXPECT_EQ(r.mode, "dense");
}

TEST_F(ServiceTest, SearchMatchesLibrary) {
  RetrievalRequest req;
  req.query_text = query(3);
  req.mode = Mode::Hybrid;
  req.lambda = 0.3;
  req.k = 7;
  const auto expected = retrieve(fx_->system, req);
  const auto j = body(service_->search(
      json{{"query", query(3)}, {"k", 7}, {"mode", "hybrid"}, {"lambda", 0.3}}.dump()));
  ASSERT_EQ(j["results"].size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(j["results"][i]["item_id"], expected[i].item_id);
    EXPECT_DOUBLE_EQ(j["results"][i]["score"].get<double>(), wire_float(expected[i].score));
  }
}

TEST_F(ServiceTest, SearchFiltersAndEngines) {
  const auto all = body(service_->search(json{{"query", query(1)}, {"k", 40}}.dump()));
  const std::string brand = all["results"][2]["brand"];
  const auto j = body(service_->search(
      json{{"query", query(1)}, {"k", 40}, {"filters", {{"brand", brand}}}}.dump()));
  ASSERT_GE(j["results"].size(), 1u);
  for (const auto& r : j["results"]) EXPECT_EQ(r["brand"], brand);

  const auto h = service_->search(
      json{{"query", query(1)}, {"engine", "hnsw"}, {"ef_search", 64}, {"precision", "int8"}}.dump());
  EXPECT_EQ(h.status, 200);
}

TEST_F(ServiceTest, BadRequests) {
  for (const std::string bad : {
           std::string("not json"),
           std::string("[1,2]"),
           json{{"k", 3}}.dump(),
           json{{"query", 5}}.dump(),
           json{{"query", "x"}, {"k", 0}}.dump(),
           json{{"query", "x"}, {"k", "ten"}}.dump(),
           json{{"query", "x"}, {"mode", "fuzzy"}}.dump(),
           json{{"query", "x"}, {"lambda", 2}}.dump(),
           json{{"query", "x"}, {"filters", {{"colour", "red"}}}}.dump(),
           json{{"query", "x"}, {"filters", json::array()}}.dump(),
           json{{"query", "..."}}.dump(),
       }) {
    const auto r = service_->search(bad);
    EXPECT_EQ(r.status, 400) << bad;
    EXPECT_TRUE(body(r).contains("error")) << bad;
  }
}

TEST_F(ServiceTest, Item) {
  const auto& item = fx_->data.catalog[7];
  const auto r = service_->item(item.item_id);
  ASSERT_EQ(r.status, 200);
  const auto j = body(r);
  EXPECT_EQ(j["item_id"], item.item_id);
  EXPECT_EQ(j["title"], item.title);
  EXPECT_EQ(j["brand"], *item.brand);
  EXPECT_DOUBLE_EQ(j["price"].get<double>(), *item.price);
  EXPECT_EQ(j["image_url"], *item.image_url);
  EXPECT_EQ(service_->item("NOPE").status, 404);
}

TEST_F(ServiceTest, AbIdenticalConfigsOverlapFully) {
  json q = json::array();
  for (std::size_t i = 0; i < 10; ++i) q.push_back(query(i));
  const auto r = service_->ab(json{{"queries", q},
                                  {"config_a", {{"mode", "hybrid"}, {"lambda", 0.5}}},
                                  {"config_b", {{"mode", "hybrid"}, {"lambda", 0.5}}},
                                  {"warmup", 2}}
                                 .dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = body(r);
  EXPECT_DOUBLE_EQ(j["recall_overlap@10"].get<double>(), 1.0);
  EXPECT_EQ(j["n_queries"], 10);
  for (const char* side : {"config_a", "config_b"}) {
    EXPECT_LE(j[side]["p50"].get<double>(), j[side]["p99"].get<double>());
    EXPECT_GT(j[side]["qps"].get<double>(), 0.0);
  }
}

TEST_F(ServiceTest, AbDifferentConfigs) {
  json q = json::array();
  for (std::size_t i = 0; i < 10; ++i) q.push_back(query(i));
  const auto j = body(service_->ab(
      json{{"queries", q}, {"config_a", {{"mode", "dense"}}}, {"config_b", {{"mode", "sparse"}}}}.dump()));
  const double overlap = j["recall_overlap@10"];
  EXPECT_GE(overlap, 0.0);
  EXPECT_LT(overlap, 1.0);
  EXPECT_EQ(service_->ab(json{{"queries", json::array()}}.dump()).status, 400);
  EXPECT_EQ(service_->ab(json{{"queries", q}, {"config_a", 1}, {"config_b", json::object()}}.dump()).status, 400);
}

TEST_F(ServiceTest, OverHttpWithRequestLog) {
  httplib::Server server;
  service_->mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto h = client.Get("/health");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  auto s = client.Post("/search", json{{"query", query()}, {"k", 3}, {"mode", "sparse"}}.dump(),
                       "application/json");
  ASSERT_TRUE(s);
  EXPECT_EQ(s->status, 200);
  EXPECT_EQ(json::parse(s->body)["results"].size(), json::parse(service_->search(
      json{{"query", query()}, {"k", 3}, {"mode", "sparse"}}.dump()).body)["results"].size());
  auto i = client.Get("/item/" + fx_->data.catalog[0].item_id);
  ASSERT_TRUE(i);
  EXPECT_EQ(i->status, 200);
  auto missing = client.Get("/item/unknown");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto bad = client.Post("/search", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  server.stop();
  t.join();

  std::istringstream lines(log_.str());
  std::string line;
  std::vector<json> entries;
  while (std::getline(lines, line)) entries.push_back(json::parse(line));
  ASSERT_GE(entries.size(), 5u);
  bool saw_search = false;
  for (const auto& e : entries) {
    EXPECT_TRUE(e.contains("route") && e.contains("status") && e.contains("latency_ms"));
    if (e["route"] == "/search" && e["status"] == 200) {
      saw_search = true;
      EXPECT_EQ(e["k"], 3);
      EXPECT_EQ(e["mode"], "sparse");
    }
  }
  EXPECT_TRUE(saw_search);
}

TEST(Serve, FailsFastOnMissingArtifacts) {
  testutil::TempDir dir;
  SystemConfig cfg;
  cfg.serving.port = 0;
  cfg.paths.model = dir / "missing.enc";
  cfg.paths.flat_embeddings = dir / "missing.emb";
  cfg.paths.metadata_cache = dir / "missing.mch";
  try {
    serve(cfg);
    FAIL() << "serve returned";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ArtifactsMissing);
  }
}
