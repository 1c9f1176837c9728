#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "foglet/api.hpp"
#include "foglet/engine.hpp"
#include "support.hpp"

using namespace foglet;

namespace {

class Api : public ::testing::Test {
 protected:
  void start(json topology = test::reference_topology_doc()) {
    engine_ = std::make_unique<Engine>(Topology::load(topology), EngineConfig{});
    server_ = std::make_unique<ApiServer>(*engine_);
    port_ = server_->bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200 && !client_->Get("/v1/nodes"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  void TearDown() override {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
  }

  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, nullptr};
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto res = client_->Post(path, body, "application/json");
    if (!res) return {0, nullptr};
    return {res->status, json::parse(res->body)};
  }

  std::string submit(const std::string& request_name) {
    const auto [status, body] = post("/v1/requests", test::request_doc(request_name).dump());
    EXPECT_EQ(status, 202);
    return body.at("id");
  }

  std::unique_ptr<Engine> engine_;
  std::unique_ptr<ApiServer> server_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

json ten_megabit_wan() {
  auto doc = test::reference_topology_doc();
  for (auto& l : doc["links"])
    if (l["id"] == "wan") l["bandwidth_mbps"] = 10;
  return doc;
}

}  // namespace

TEST_F(Api, SubmitThenPollShowsPlacement) {
  start();
  const auto [status, body] = post("/v1/requests", test::request_doc("face_detection").dump());
  EXPECT_EQ(status, 202);
  EXPECT_EQ(body.at("state"), "Queued");
  server_->wait_idle();
  const auto [s2, req] = get("/v1/requests/" + body.at("id").get<std::string>());
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(req.at("state"), "Placed");
  EXPECT_EQ(req.at("placement").at("node"), "cloud");
}

TEST_F(Api, MalformedAndInvalidDocuments) {
  start();
  EXPECT_EQ(post("/v1/requests", "{not json").first, 400);
  const auto [s1, b1] = post("/v1/requests", R"({"component":"x","requirements":[{"compute":{"vcpus":-1}}]})");
  EXPECT_EQ(s1, 400);
  EXPECT_EQ(b1.at("field"), "requirements[0].compute.vcpus");
  EXPECT_EQ(b1.at("reason"), "negative");
  const auto [s2, b2] = post("/v1/requests", R"({"component":"x","requirements":[{"network":{"endpoint":"cam-9"}}]})");
  EXPECT_EQ(s2, 422);
  EXPECT_EQ(b2.at("error"), "unknown_reference");
  EXPECT_EQ(get("/v1/requests").second.size(), 0u);
}

TEST_F(Api, InfeasibleRequestIsRejectedWithReasons) {
  start();
  const auto id = submit("oversized");
  server_->wait_idle();
  const auto [status, body] = get("/v1/requests/" + id);
  EXPECT_EQ(body.at("state"), "Rejected");
  EXPECT_EQ(body.at("reasons").size(), 3u);
  EXPECT_EQ(get("/v1/requests/" + id + "/explain").first, 200);
}

TEST_F(Api, UnknownIdsAre404) {
  start();
  EXPECT_EQ(get("/v1/requests/nope").first, 404);
  EXPECT_EQ(get("/v1/requests/nope/explain").first, 404);
  EXPECT_EQ(get("/v1/links/nope/utilization").first, 404);
  EXPECT_EQ(post("/v1/events", R"({"link_id":"nope","state":"down"})").first, 404);
  EXPECT_EQ(post("/v1/events", R"({"link_id":"wan","state":"sideways"})").first, 400);
  EXPECT_EQ(post("/v1/clock/advance", R"({"seconds":-1})").first, 400);
}

TEST_F(Api, FreshSystemMirrorsTopology) {
  start();
  const auto [status, nodes] = get("/v1/nodes");
  EXPECT_EQ(status, 200);
  ASSERT_EQ(nodes.size(), 3u);
  EXPECT_EQ(nodes[0].at("id"), "cloud");
  EXPECT_EQ(get("/v1/placements").second, json::array());
}

TEST_F(Api, VideoRequirementSplitsPlacements) {
  start();
  submit("face_store");
  submit("face_detection_svs");
  server_->wait_idle();
  const auto placements = get("/v1/placements").second;
  ASSERT_EQ(placements.size(), 2u);
  std::map<std::string, std::string> where;
  for (const auto& p : placements) where[p.at("component")] = p.at("node");
  EXPECT_EQ(where.at("face_store"), "cloud");
  EXPECT_EQ(where.at("face_detection"), "cloudlet");
}

TEST_F(Api, CameraToCloudUsesFortyPercentOfTenMegabitWan) {
  start(ten_megabit_wan());
  submit("face_store");
  submit("face_detection");
  server_->wait_idle();
  const auto [status, u] = get("/v1/links/wan/utilization");
  EXPECT_EQ(status, 200);
  EXPECT_DOUBLE_EQ(u.at("offered_mbps").get<double>(), 4.0);
  EXPECT_DOUBLE_EQ(u.at("utilization").get<double>(), 0.4);
}

TEST_F(Api, GetsBetweenWritesAreIdentical) {
  start();
  submit("face_detection");
  server_->wait_idle();
  for (const char* path : {"/v1/requests", "/v1/nodes", "/v1/placements", "/v1/report", "/v1/links/wan/utilization",
                           "/v1/requests/req-1", "/v1/requests/req-1/explain"}) {
    const auto a = client_->Get(path), b = client_->Get(path);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->body, b->body) << path;
  }
}

TEST_F(Api, EventsAndClockDriveTheSimulation) {
  start();
  submit("face_store");
  submit("face_detection");
  server_->wait_idle();
  const auto [s1, e1] = post("/v1/events", R"({"link_id":"wan","state":"down"})");
  EXPECT_EQ(s1, 200);
  EXPECT_EQ(e1.at("changed"), true);
  EXPECT_EQ(post("/v1/events", R"({"link_id":"wan","state":"DOWN"})").second.at("changed"), false);
  EXPECT_EQ(post("/v1/clock/advance", R"({"seconds":60})").second.at("now_ms"), 60000);
  const auto report = get("/v1/report").second;
  EXPECT_EQ(report.at("links").at("wan").at("up"), false);
  EXPECT_EQ(report.at("flows").at("camera-1->face_detection").at("bits_lost"), 240'000'000);
}

TEST_F(Api, ConcurrentSubmissionsAreAllProcessed) {
  start();
  std::vector<std::thread> clients;
  for (int i = 0; i < 8; ++i)
    clients.emplace_back([this, i] {
      httplib::Client c("127.0.0.1", port_);
      for (int k = 0; k < 5; ++k) {
        const json doc = {{"id", "c" + std::to_string(i) + "-" + std::to_string(k)}, {"component", "svc"}, {"requirements", json::array()}};
        auto res = c.Post("/v1/requests", doc.dump(), "application/json");
        ASSERT_TRUE(res);
        ASSERT_EQ(res->status, 202);
      }
    });
  for (auto& t : clients) t.join();
  server_->wait_idle();
  const auto all = get("/v1/requests").second;
  ASSERT_EQ(all.size(), 40u);
  for (const auto& r : all) EXPECT_NE(r.at("state"), "Queued");
}
