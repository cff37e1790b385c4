#include <gtest/gtest.h>

#include <httplib.h>

#include "radlabel/service.hpp"

namespace radlabel {
namespace {

using nlohmann::json;

constexpr const char* kWorkedCompletion =
    "<reasoning>Support devices is found because the report mentions: 'Endotracheal tube', "
    "'subclavian line' and 'NG tube'.</reasoning> <answer>[Support Devices]</answer>";

json item(const std::string& completion, std::vector<std::string> gold) {
  return {{"completion", completion}, {"gold_labels", gold}};
}

TEST(RewardHandlers, WorkedExample) {
  RewardHandlers h;
  const ServiceResponse r = h.reward(item(kWorkedCompletion, {"Support Devices"}).dump(), "id-1");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["total"], 1.0);
  EXPECT_EQ(r.body["well_formed"], true);
  EXPECT_EQ(r.body["request_id"], "id-1");
}

TEST(RewardHandlers, MatchesLibraryCall) {
  RewardHandlers h;
  const std::string completion = "<reasoning>fluid</reasoning><answer>[Edema, COPD]</answer>";
  const ServiceResponse r = h.reward(item(completion, {"Edema", "Fracture"}).dump(), "x");
  const json lib = reward_to_json(total_reward(completion, {Disease::Edema, Disease::Fracture}));
  for (const char* key : {"precision", "recall", "accuracy_reward", "formatting_reward", "total"}) {
    EXPECT_EQ(r.body[key], lib[key]) << key;
  }
}

TEST(RewardHandlers, PerRequestConfig) {
  RewardHandlers h;
  json body = item("<reasoning></reasoning><answer>[Edema]</answer>", {"Edema"});
  body["config"] = {{"w_acc", 1.0}, {"w_fmt", 0.0}};
  EXPECT_EQ(h.reward(body.dump(), "x").body["total"], 1.0);
  body["config"] = {{"w_acc", 0.5}, {"w_fmt", 0.2}};
  const ServiceResponse bad = h.reward(body.dump(), "x");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body["field"], "config");
}

TEST(RewardHandlers, ValidationErrors) {
  RewardHandlers h;
  const ServiceResponse off = h.reward(item("x", {"Edema", "Tubes"}).dump(), "r");
  EXPECT_EQ(off.status, 422);
  EXPECT_EQ(off.body["field"], "gold_labels[1]");
  EXPECT_EQ(off.body["request_id"], "r");

  EXPECT_EQ(h.reward("{not json", "r").status, 400);
  const ServiceResponse missing = h.reward(R"({"gold_labels": []})", "r");
  EXPECT_EQ(missing.status, 400);
  EXPECT_EQ(missing.body["field"], "completion");
}

TEST(RewardHandlers, Batch) {
  RewardHandlers h;
  const json body = {
      {"items",
       {item(kWorkedCompletion, {"Support Devices"}),
        item("<reasoning>collapse and fluid</reasoning><answer>[Atelectasis, Edema]</answer>",
             {"Atelectasis"}),
        item("garbage", {"Edema"})}}};
  const ServiceResponse r = h.batch(body.dump(), "b");
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["results"].size(), 3u);
  EXPECT_EQ(r.body["results"][0]["total"], 1.0);
  EXPECT_NEAR(r.body["results"][1]["total"].get<double>(), 0.8, 1e-12);
  EXPECT_EQ(r.body["results"][2]["total"], 0.0);

  const json bad = {{"items", {item("x", {}), item("x", {"Tubes"})}}};
  const ServiceResponse err = h.batch(bad.dump(), "b");
  EXPECT_EQ(err.status, 422);
  EXPECT_EQ(err.body["field"], "items[1].gold_labels[0]");
}

TEST(RewardHandlers, Advantages) {
  RewardHandlers h;
  const ServiceResponse r = h.advantages(R"({"rewards": [1, 0, 1, 0]})", "a");
  EXPECT_EQ(r.body["advantages"], json({1.0, -1.0, 1.0, -1.0}));
  EXPECT_EQ(h.advantages(R"({"rewards": [1]})", "a").status, 400);
  EXPECT_EQ(h.advantages(R"({"rewards": ["x", 1]})", "a").status, 400);
}

class LiveServer : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    server_.start();
  }
  void TearDown() override { server_.stop(); }

  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  RewardServer server_;
  int port_ = -1;
};

TEST_F(LiveServer, RewardOverHttpMatchesHandlers) {
  auto cli = client();
  const std::string body = item(kWorkedCompletion, {"Support Devices"}).dump();
  auto res = cli.Post("/v1/reward", {{"X-Request-Id", "trace-7"}}, body, "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("X-Request-Id"), "trace-7");
  const json j = json::parse(res->body);
  EXPECT_EQ(j["total"], 1.0);
  EXPECT_EQ(j["request_id"], "trace-7");
}

TEST_F(LiveServer, GeneratesRequestIds) {
  auto cli = client();
  auto a = cli.Get("/healthz");
  auto b = cli.Get("/healthz");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(json::parse(a->body)["status"], "ok");
  const std::string ida = a->get_header_value("X-Request-Id");
  EXPECT_FALSE(ida.empty());
  EXPECT_NE(ida, b->get_header_value("X-Request-Id"));
}

TEST_F(LiveServer, ErrorStatusesPropagate) {
  auto cli = client();
  auto res = cli.Post("/v1/reward", item("x", {"Tubes"}).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  auto adv = cli.Post("/v1/advantages", R"({"rewards": [0.2, 0.4]})", "application/json");
  ASSERT_TRUE(adv);
  const json a = json::parse(adv->body)["advantages"];
  ASSERT_EQ(a.size(), 2u);
  EXPECT_NEAR(a[0].get<double>(), -1.0, 1e-12);
  EXPECT_NEAR(a[1].get<double>(), 1.0, 1e-12);
}

}  // namespace
}  // namespace radlabel
