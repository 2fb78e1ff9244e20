#include "doctest.h"

#include <cstdlib>
#include <sstream>

#include "cli.hpp"
#include "rvlab/csv_io.hpp"
#include "rvlab/realized.hpp"
#include "rvlab/report.hpp"
#include "rvlab/simulator.hpp"
#include "test_support.hpp"

using namespace rvlab;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("constants table") {
  const auto r = run({"constants", "--r", "1", "2", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("1,0.797884560803,") != std::string::npos);
  CHECK(r.out.find("\n2,1,2\n") != std::string::npos);
  CHECK(r.out.find("\n4,3,96\n") != std::string::npos);
  CHECK(r.out.find("theta,0.608993753862") != std::string::npos);
}

TEST_CASE("usage errors") {
  auto r = run({"constants", "--frobnicate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("frobnicate") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"measures", "--n", "10"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("measures on a CSV") {
  const auto path = write_text("cli_small.csv", "# log_prices: true\ntime,y\n0,0\n1,0.1\n2,-0.1\n3,0.2\n");
  auto r = run({"measures", "--csv", path.string(), "--n", "3", "--stat", "bipower", "--r", "1", "--s", "1"});
  CHECK(r.code == 0);
  CHECK(r.out == "0.08\n");
  r = run({"measures", "--csv", path.string(), "--n", "3", "--stat", "rv"});
  CHECK(r.out == "0.14\n");
  r = run({"measures", "--csv", path.string(), "--n", "3", "--stat", "power", "--r", "1"});
  CHECK(r.out == format_sig(0.6 / std::sqrt(3.0)) + "\n");
  r = run({"measures", "--csv", path.string(), "--n", "3", "--stat", "rv", "--ci", "0.95"});
  CHECK(r.out.find("ci 0.95 ") != std::string::npos);
  r = run({"measures", "--csv", path.string(), "--n", "3", "--stat", "range"});
  CHECK(r.code == 1);
}

TEST_CASE("data errors exit with 2") {
  const auto path = write_text("cli_bad.csv", "time,p\n0,1\n1,-2\n");
  const auto r = run({"measures", "--csv", path.string(), "--n", "2"});
  CHECK(r.code == 2);
  CHECK(r.err.find("row 3") != std::string::npos);
  CHECK(run({"jumptest", "--csv", (scratch_dir() / "nope.csv").string(), "--n", "20"}).code == 2);
}

TEST_CASE("simulate output round-trips bit for bit") {
  const auto path = scratch_dir() / "sim.csv";
  const auto r = run({"simulate", "--model", "heston", "--n-fine", "3000", "--seed", "11", "--out", path.string()});
  REQUIRE(r.code == 0);

  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{};
  const ReturnSeries direct = subsample(simulate(m, 3000, 11), 100);
  PriceCsvSchema schema;
  schema.price_columns = {"y"};
  const ReturnSeries from_file = returns_from_path(ingest_csv(path, schema).path, 100);
  CHECK(direct.data() == from_file.data());

  const auto meas = run({"measures", "--csv", path.string(), "--n", "100", "--stat", "bipower", "--r", "1", "--s", "1"});
  CHECK(meas.out == format_sig(realized_bipower(direct, 0, 1.0, 1.0, 1.0)) + "\n");

  const auto text = read_text(path);
  CHECK(text.find("# rvlab 1.0.0") == 0);
  CHECK(text.find("\"seed\":11") != std::string::npos);
}

TEST_CASE("RVLAB_SEED sets the default seed") {
  const auto a = run({"simulate", "--n-fine", "200", "--seed", "99"});
  setenv("RVLAB_SEED", "99", 1);
  const auto b = run({"simulate", "--n-fine", "200"});
  unsetenv("RVLAB_SEED");
  const auto c = run({"simulate", "--n-fine", "200"});
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("jump test on a CSV") {
  const auto path = scratch_dir() / "jt.csv";
  REQUIRE(run({"simulate", "--n-fine", "2000", "--seed", "4", "--single-jump", "--price-jump-sd", "1", "--out",
               path.string()})
              .code == 0);
  const auto r = run({"jumptest", "--csv", path.string(), "--n", "500"});
  CHECK(r.code == 0);
  CHECK(r.out.find("p_ratio,") != std::string::npos);
  CHECK(r.out.find("note,valid under (H1)+(H2)") != std::string::npos);
}

TEST_CASE("experiment subcommands write reports and gate the exit code") {
  const auto cfg = write_text("cli_clt.json", R"({
    "label": "cli-clt",
    "model": {"type": "constant", "sigma": 1.0},
    "estimator": {"statistic": "rv"},
    "n_list": [50],
    "replications": 200,
    "seed": 8,
    "fine_ratio": 2,
    "gates": {"coverage95": [0.85, 1.0]}
  })");
  const auto prefix = (scratch_dir() / "cli_clt_out").string();
  auto r = run({"clt", "--config", cfg.string(), "--out", prefix});
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(prefix + ".json"));
  CHECK(std::filesystem::exists(prefix + ".csv"));
  const Json j = Json::parse(read_text(prefix + ".json"));
  CHECK(j["passed"] == true);
  CHECK(j["config"]["kind"] == "clt");

  const auto strict = write_text("cli_strict.json", R"({
    "model": {"type": "constant"},
    "n_list": [50],
    "replications": 200,
    "fine_ratio": 2,
    "gates": {"coverage95": [0.999, 1.0]}
  })");
  r = run({"clt", "--config", strict.string(), "--out", prefix + "_strict"});
  CHECK(r.code == 3);
  CHECK(r.out.find("FAIL") != std::string::npos);

  const auto broken = write_text("cli_broken.json", R"({"n_list": [50], "replications": 10, "kind": "clt"})");
  CHECK(run({"clt", "--config", broken.string(), "--out", prefix + "_b"}).code == 1);
}
