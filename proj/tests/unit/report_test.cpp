#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mlate/commands.hpp"
#include "mlate/errors.hpp"
#include "mlate/montecarlo.hpp"
#include "mlate/report.hpp"

using namespace mlate;

TEST(Report, JsonRoundTripIsLossless) {
  Report r;
  r.doc["x"] = 0.1 + 0.2;
  r.doc["tiny"] = 4.9e-324;
  r.doc["big"] = 1.7976931348623157e308;
  r.doc["third"] = 1.0 / 3.0;
  r.doc["nan"] = number(std::numeric_limits<double>::quiet_NaN());
  const Report back = Report::from_json(r.to_json());
  EXPECT_EQ(back.doc, r.doc);
  EXPECT_EQ(back.doc["third"].get<double>(), 1.0 / 3.0);
  EXPECT_TRUE(back.doc["nan"].is_null());
  EXPECT_EQ(back.to_json(), r.to_json());
}

TEST(Report, FromJsonErrors) {
  try {
    Report::from_json("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  }
  EXPECT_THROW(Report::from_json("[1,2]"), Error);
}

TEST(Report, TextRounding) {
  Report r;
  r.doc["a"] = 0.12345;
  r.doc["b"] = -0.0001;
  r.doc["c"] = nullptr;
  r.doc["k"] = 3;
  r.doc["v"] = Json::array({1.0, 2.5});
  const std::string text = r.to_text();
  EXPECT_NE(text.find("a: 0.123"), std::string::npos);
  EXPECT_NE(text.find("b: 0.000"), std::string::npos);
  EXPECT_NE(text.find("c: NA"), std::string::npos);
  EXPECT_NE(text.find("k: 3"), std::string::npos);
  EXPECT_NE(text.find("[1.000, 2.500]"), std::string::npos);
}

TEST(Report, TablesRenderAligned) {
  Report r;
  r.doc["rows"] = Json::array({Json{{"name", "beta_star"}, {"estimate", 1.23456}}, Json{{"name", "r"}, {"estimate", 0.5}}});
  const std::string text = r.to_text();
  EXPECT_NE(text.find("beta_star     1.235"), std::string::npos);
  EXPECT_NE(text.find("        r     0.500"), std::string::npos);
}

TEST(Report, Metadata) {
  const Json m = metadata_json(42, false);
  EXPECT_EQ(m["software"], "mlate");
  EXPECT_EQ(m["seed"], 42);
  EXPECT_TRUE(m["timestamp"].is_null());
  EXPECT_EQ(m["version"], software_version());
  const Json t = metadata_json(std::nullopt, true);
  EXPECT_TRUE(t["seed"].is_null());
  EXPECT_EQ(t["timestamp"].get<std::string>().size(), 20u);
}

TEST(Report, EstimateSection) {
  const auto ref = mlate::testing::reference_draw();
  const Dataset ds = simulate_model(ref.theta, ref.v_probs, 2000, 3);
  const Estimate est = estimate(ds);
  const Json j = estimate_json(est, ds.v_support);
  ASSERT_EQ(j["parameters"].size(), 11u);
  EXPECT_EQ(j["parameters"][0]["name"], "beta_star");
  EXPECT_EQ(j["parameters"][0]["estimate"].get<double>(), est.theta_hat.beta_star);
  EXPECT_EQ(j["parameters"][0]["se"].get<double>(), est.se[0]);
  EXPECT_EQ(j["moments"].size(), 11u);
  EXPECT_EQ(j["vcov"].size(), 11u);
}

TEST(Commands, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::IoError), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorKind::ParseError), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorKind::SchemaError), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorKind::InvalidArgument), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorKind::SingularSystem), kExitIdentification);
  EXPECT_EQ(exit_code_for(ErrorKind::NegativeDiscriminant), kExitIdentification);
  EXPECT_EQ(exit_code_for(ErrorKind::EmptyCell), kExitIdentification);
}

TEST(Commands, SimulateIsDeterministic) {
  SimulateCommand cmd;
  cmd.design = 3;
  cmd.n = 300;
  cmd.reps = 4;
  cmd.seed = 9;
  cmd.timestamp = false;
  const CommandResult a = cmd_simulate(cmd);
  cmd.threads = 2;
  const CommandResult b = cmd_simulate(cmd);
  EXPECT_EQ(a.exit_code, kExitOk);
  EXPECT_EQ(a.report.to_json(), b.report.to_json());
  EXPECT_EQ(a.report.doc["metadata"]["seed"], 9);
  cmd.reps = 0;
  EXPECT_EQ(cmd_simulate(cmd).exit_code, kExitIo);
}

TEST(Commands, MissingFile) {
  EstimateCommand cmd;
  cmd.data.path = "/nonexistent.csv";
  const CommandResult r = cmd_estimate(cmd);
  EXPECT_EQ(r.exit_code, kExitIo);
  EXPECT_EQ(r.report.doc["status"]["exit_code"], kExitIo);
}
