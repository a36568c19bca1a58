#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "enrollcast/csv.hpp"
#include "enrollcast/service/http.hpp"
#include "enrollcast/service/json_io.hpp"
#include "enrollcast/synth.hpp"
#include "temp_dir.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines _res.
#include <httplib.h>

using namespace enrollcast;
using namespace enrollcast::service;
using nlohmann::json;

namespace {

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = std::make_unique<Store>(dir_.path());
    service_ = std::make_unique<HttpService>(*store_);
    port_ = service_->bind_any_port();
    ASSERT_GT(port_, 0);
    server_ = std::thread([this] { service_->run(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(120, 0);
    for (int i = 0; i < 200 && !client_->Get("/models"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  void TearDown() override {
    service_->stop();
    server_.join();
    service_->wait_for_jobs();
  }

  json upload(const SynthData& s, int expected_status) {
    httplib::MultipartFormDataItems items{{"csv", s.csv, "data.csv", "text/csv"},
                                          {"schema", json(s.schema).dump(), "schema.json", "application/json"}};
    auto res = client_->Post("/datasets", items);
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expected_status) << res->body;
    return json::parse(res->body);
  }

  json post_json(const std::string& path, const json& body, int expected_status) {
    auto res = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expected_status) << res->body;
    return json::parse(res->body);
  }

  json get_json(const std::string& path, int expected_status = 200) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expected_status) << path << " " << res->body;
    return json::parse(res->body);
  }

  json wait_job(const std::string& job_id) {
    for (int i = 0; i < 6000; ++i) {
      const auto status = get_json("/jobs/" + job_id);
      if (status["status"] == "done" || status["status"] == "failed") return status;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ADD_FAILURE() << "job did not finish";
    return {};
  }

  std::string train(const std::string& dataset_id, const json& options = json::object()) {
    const auto job = post_json("/models", {{"dataset_id", dataset_id}, {"options", options}}, 202);
    const auto done = wait_job(job["job_id"]);
    EXPECT_EQ(done["status"], "done") << done.dump();
    return done.value("model_id", "");
  }

  TempDir dir_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<HttpService> service_;
  std::thread server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

SynthData data(std::size_t rows = 400, std::uint64_t seed = 2) {
  return generate({.features = 19, .informative = 11, .rows = rows, .seed = seed});
}

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::BadLevel), 400);
  EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::Conflict), 409);
  EXPECT_EQ(http_status(ErrorCode::SingleClass), 422);
  EXPECT_EQ(http_status(ErrorCode::CorruptModel), 500);
}

TEST_F(HttpFixture, UploadIsIdempotent) {
  const auto s = data();
  const auto first = upload(s, 201);
  EXPECT_EQ(first["rows"], 400);
  EXPECT_TRUE(first.contains("clean_report"));
  const auto second = upload(s, 200);
  EXPECT_EQ(second["dataset_id"], first["dataset_id"]);

  const auto bad = post_json("/datasets", {{"csv", "id,x\n1,2\n"}, {"schema", {{"features", "nope"}}}}, 400);
  EXPECT_EQ(bad["code"], "BadSchema");
}

TEST_F(HttpFixture, SummaryCountsMatchDataset) {
  const auto s = data();
  const std::string id = upload(s, 201)["dataset_id"];
  const auto summary = get_json("/datasets/" + id + "/summary?by=School_Type");
  std::size_t total = 0;
  for (const auto& g : summary["groups"]) total += g["count"].get<std::size_t>();
  EXPECT_EQ(total, 400u);
  EXPECT_EQ(summary["total"], 400);

  const auto unknown = get_json("/datasets/" + id + "/summary?by=Nope", 400);
  EXPECT_EQ(unknown["code"], "UnknownFeature");
  EXPECT_EQ(unknown["field"], "Nope");
  EXPECT_EQ(get_json("/datasets/abc123/summary?by=School_Type", 404)["code"], "NotFound");
}

TEST_F(HttpFixture, TrainPredictAndFilter) {
  const auto s = data();
  const std::string dataset_id = upload(s, 201)["dataset_id"];
  const std::string model_id = train(dataset_id, {{"seed", 3}});
  ASSERT_FALSE(model_id.empty());

  const auto summary = get_json("/models/" + model_id);
  EXPECT_EQ(summary["model_id"], model_id);
  EXPECT_EQ(summary["evaluation"].size(), 2u);
  EXPECT_FALSE(summary["logistic"].contains("weights"));
  EXPECT_EQ(summary["logistic"]["feature_names"].size(), 19u);

  // Filter: every returned record echoes the level, and the count matches a scan.
  const auto filtered = get_json("/models/" + model_id + "/predictions?filter=School_Type=Public");
  const auto raw = load_csv(s.csv, s.schema);
  const auto col = *s.schema.index_of("School_Type");
  std::size_t expected = 0;
  for (const auto& r : raw.rows) expected += std::get<std::string>(r.values[col]) == "Public";
  EXPECT_EQ(filtered["records"].size(), expected);
  for (const auto& rec : filtered["records"]) EXPECT_EQ(rec["feature_values"]["School_Type"], "Public");

  const auto both = get_json("/models/" + model_id + "/predictions?filter=School_Type=Public&filter=Gender=Male");
  for (const auto& rec : both["records"]) {
    EXPECT_EQ(rec["feature_values"]["School_Type"], "Public");
    EXPECT_EQ(rec["feature_values"]["Gender"], "Male");
  }
  EXPECT_EQ(get_json("/models/" + model_id + "/predictions?filter=School_Type=Maybe", 400)["field"], "School_Type");

  // Single predict agrees bit for bit with the library and with batch output.
  json values = json::object();
  for (std::size_t j = 0; j < s.schema.features.size(); ++j) values[s.schema.features[j].name] = raw.rows[0].values[j];
  const auto rec = post_json("/models/" + model_id + "/predict", {{"feature_values", values}, {"applicant_id", "A00001"}}, 200);
  const auto model = store_->model(model_id);
  const auto local = predict_record(*model, raw.rows[0]);
  EXPECT_EQ(rec["probability"].get<double>(), local.probability);
  EXPECT_EQ(rec["percentage"].get<double>(), local.percentage);
  EXPECT_EQ(rec["applicant_id"], "A00001");

  auto batch = client_->Post("/models/" + model_id + "/predict-batch", s.csv, "text/csv");
  ASSERT_TRUE(batch);
  ASSERT_EQ(batch->status, 200);
  const auto table = csv::parse(batch->body);
  ASSERT_EQ(table.rows.size(), 400u);
  EXPECT_EQ(std::stod(table.rows[0][1]), local.probability);

  values["Religion_Binary"] = "Maybe";
  const auto bad = post_json("/models/" + model_id + "/predict", {{"feature_values", values}}, 400);
  EXPECT_EQ(bad["code"], "BadLevel");
  EXPECT_EQ(bad["field"], "Religion_Binary");
  EXPECT_TRUE(bad.contains("message"));

  values.erase("Gender");
  values["Religion_Binary"] = "Yes";
  const auto missing = post_json("/models/" + model_id + "/predict", {{"feature_values", values}}, 400);
  EXPECT_EQ(missing["field"], "Gender");

  EXPECT_EQ(get_json("/models/00000000", 404)["code"], "NotFound");
  auto malformed = client_->Post("/models/" + model_id + "/predict", "{not json", "application/json");
  EXPECT_EQ(malformed->status, 400);
}

TEST_F(HttpFixture, SingleClassJobFails) {
  FeatureSchema schema;
  schema.features = {FeatureDef::binary("Within_City", "No", "Yes")};
  schema.target_name = "Enrolled";
  schema.positive_label = "Yes";
  std::string text = "id,Within_City,Enrolled\n";
  for (int i = 0; i < 30; ++i) text += "R" + std::to_string(i) + "," + (i % 3 ? "Yes" : "No") + ",No\n";
  const std::string id = post_json("/datasets", {{"csv", text}, {"schema", schema}}, 201)["dataset_id"];
  const auto job = post_json("/models", {{"dataset_id", id}}, 202);
  const auto status = wait_job(job["job_id"]);
  EXPECT_EQ(status["status"], "failed");
  EXPECT_EQ(status["error"]["code"], "SingleClass");

  EXPECT_EQ(post_json("/models", {{"dataset_id", "feedbeef"}}, 404)["code"], "NotFound");
  EXPECT_EQ(post_json("/models", {{"dataset_id", id}, {"options", {{"bogus", 1}}}}, 400)["code"], "BadRequest");
  EXPECT_EQ(get_json("/jobs/job-999", 404)["code"], "NotFound");
}

TEST_F(HttpFixture, DuplicateActiveJobConflicts) {
  const std::string id = upload(data(1500, 4), 201)["dataset_id"];
  const json body{{"dataset_id", id}, {"options", {{"select_features", true}}}};
  const auto first = post_json("/models", body, 202);
  auto res = client_->Post("/models", body.dump(), "application/json");
  ASSERT_TRUE(res);
  if (res->status == 202) {
    // Only allowed when the first job had already finished.
    const auto status = get_json("/jobs/" + first["job_id"].get<std::string>());
    EXPECT_NE(status["status"], "queued");
    EXPECT_NE(status["status"], "running");
  } else {
    EXPECT_EQ(res->status, 409);
    EXPECT_EQ(json::parse(res->body)["code"], "Conflict");
  }
  wait_job(first["job_id"]);
}
