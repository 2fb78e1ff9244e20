#include "doctest.h"

#include "rvlab/report.hpp"
#include "test_support.hpp"

using namespace rvlab;

TEST_CASE("twelve significant digits") {
  CHECK(format_sig(0.1 + 0.2) == "0.3");
  CHECK(format_sig(std::sqrt(2.0)) == "1.41421356237");
  CHECK(format_sig(1234567.0) == "1234567");
  CHECK(format_sig(std::nan("")) == "nan");
}

TEST_CASE("experiment configs round trip through JSON") {
  ExperimentConfig c;
  c.label = "rt";
  c.kind = ExperimentKind::Clt;
  MeanRevertingVolLeverage h;
  h.rho = -0.3;
  c.model.vol = h;
  c.model.price_jumps = PriceJumpOverlay{2.0, 0.05, false};
  c.estimator.statistic = Statistic::Multipower;
  c.estimator.powers = {1.0, 0.5, 0.5};
  c.n_list = {100, 200};
  c.replications = 500;
  c.seed = 123456789012345ULL;
  c.mode = ModeSelection::Both;
  c.gates.z_variance = Range{0.9, 1.1};
  c.gates.ks_max = 0.03;
  const Json j = config_to_json(c);
  const ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back).dump() == j.dump());
  CHECK(back.seed == c.seed);
  CHECK(std::get<MeanRevertingVolLeverage>(back.model.vol).rho == -0.3);
}

TEST_CASE("config errors name the problem") {
  Json j = Json::parse(R"({"kind":"clt","n_list":[100],"replications":200,"bogus":1})");
  try {
    config_from_json(j);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS(config_from_json(Json::parse(R"({"model":{"type":"rough"},"n_list":[100]})")));
  CHECK_THROWS(config_from_json(Json::parse(R"({"n_list":[100],"gates":{"size5":0.05}})")));
  CHECK_THROWS(config_from_json(Json::parse(R"({"n_list":"100"})")));
}

TEST_CASE("reports embed version, config and seed") {
  ExperimentConfig c;
  c.label = "tiny";
  c.n_list = {10, 20};
  c.replications = 20;
  c.fine_ratio = 10;
  c.seed = 42;
  const auto r = run_lln(c);
  const Json j = report_to_json(r);
  CHECK(j["version"] == "1.0.0");
  CHECK(j["seed"] == 42);
  CHECK(j["config"]["label"] == "tiny");
  CHECK(j.contains("run"));
  CHECK_FALSE(strip_run_info(j).contains("run"));

  const std::string csv = report_to_csv(r);
  CHECK(csv.find("# rvlab 1.0.0") == 0);
  CHECK(csv.find("# seed: 42") != std::string::npos);
  CHECK(csv.find("# config: {") != std::string::npos);
  CHECK(csv.find("# run:") != std::string::npos);
  CHECK(strip_run_info(csv).find("# run:") == std::string::npos);

  // The embedded config reproduces the report.
  const auto again = run_lln(config_from_json(j["config"]));
  CHECK(strip_run_info(report_to_csv(again)) == strip_run_info(csv));
}

TEST_CASE("atomic writes replace the whole file") {
  const auto path = scratch_dir() / "atomic.txt";
  write_file_atomic(path, "first version, long\n");
  write_file_atomic(path, "second\n");
  CHECK(read_text(path) == "second\n");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}
