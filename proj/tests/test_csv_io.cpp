#include "doctest.h"

#include <cmath>

#include "rvlab/csv_io.hpp"
#include "test_support.hpp"

using namespace rvlab;

TEST_CASE("prices become log prices on [0, 1]") {
  const auto path = write_text("four.csv", "time,price\n0,100\n1,110.517\n2,90.484\n3,122.140\n");
  const auto in = ingest_csv(path);
  REQUIRE(in.path.size() == 4);
  CHECK(in.path.value(0, 0) == doctest::Approx(4.60517).epsilon(1e-6));
  CHECK(in.path.value(1, 0) == doctest::Approx(4.70517).epsilon(1e-5));
  CHECK(in.path.value(2, 0) == doctest::Approx(4.50517).epsilon(1e-5));
  CHECK(in.path.value(3, 0) == doctest::Approx(4.80517).epsilon(1e-5));
  CHECK(in.path.value(1, 0) - in.path.value(0, 0) == doctest::Approx(0.1).epsilon(1e-5));
  CHECK(in.path.times() == std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0});
  CHECK(in.duration_seconds == 3.0);
  CHECK(in.columns == std::vector<std::string>{"price"});
  CHECK(in.warnings.empty());
}

TEST_CASE("duplicate timestamps keep the last observation") {
  const auto path = write_text("dup.csv", "time,p\n0,1\n5,2\n5,3\n10,4\n");
  const auto in = ingest_csv(path);
  REQUIRE(in.path.size() == 3);
  CHECK(in.path.value(1, 0) == doctest::Approx(std::log(3.0)));
  REQUIRE(in.warnings.size() == 1);
  CHECK(in.warnings[0].find("row 4") != std::string::npos);
}

TEST_CASE("bad rows are reported by number") {
  auto row_of = [](const std::string& name, const std::string& text) -> std::size_t {
    try {
      ingest_csv(write_text(name, text));
    } catch (const DataError& e) {
      return e.row();
    }
    return 0;
  };
  CHECK(row_of("neg.csv", "time,p\n0,1\n1,2\n2,-1\n") == 4);
  CHECK(row_of("zero.csv", "# comment\ntime,p\n0,1\n1,0\n") == 4);
  CHECK(row_of("time.csv", "time,p\n0,1\nsoon,2\n") == 3);
  CHECK(row_of("order.csv", "time,p\n0,1\n2,2\n1,3\n") == 4);
  CHECK(row_of("fields.csv", "time,p\n0,1\n1\n") == 3);
  CHECK_THROWS_AS(ingest_csv(write_text("empty.csv", "")), DataError);
  CHECK_THROWS_AS(ingest_csv(write_text("header.csv", "time,p\n")), DataError);
  CHECK_THROWS_AS(ingest_csv(write_text("nocol.csv", "t,p\n0,1\n1,2\n")), DataError);
  CHECK_THROWS_AS(ingest_csv(scratch_dir() / "missing.csv"), DataError);
}

TEST_CASE("ISO-8601 timestamps") {
  CHECK(parse_time("1970-01-01T00:00:00Z") == 0.0);
  CHECK(parse_time("2024-03-01 09:30:00.25") == doctest::Approx(1709285400.25));
  CHECK(parse_time("2024-03-01T10:30:00+01:00") == parse_time("2024-03-01T09:30:00Z"));
  CHECK(parse_time("12.5") == 12.5);
  CHECK_FALSE(parse_time("2024-02-30T00:00:00").has_value());
  CHECK_FALSE(parse_time("yesterday").has_value());

  const auto path = write_text("iso.csv",
                               "time,a,b\n"
                               "2024-03-01T09:30:00Z,10,20\n"
                               "2024-03-01T12:45:00Z,11,19\n"
                               "2024-03-01T16:00:00Z,12,21\n");
  const auto in = ingest_csv(path);
  CHECK(in.path.dim() == 2);
  CHECK(in.duration_seconds == 6.5 * 3600.0);
  CHECK(in.path.times()[1] == doctest::Approx(0.5));
}

TEST_CASE("column selection and log inputs") {
  const auto path = write_text("sel.csv", "# log_prices: true\ntime,y,spot_var\n0,0.5,1\n1,0.7,1\n");
  PriceCsvSchema schema;
  schema.price_columns = {"y"};
  const auto in = ingest_csv(path, schema);
  CHECK(in.path.dim() == 1);
  CHECK(in.path.value(1, 0) == 0.7);
  schema.log_prices = false;
  CHECK(ingest_csv(path, schema).path.value(1, 0) == doctest::Approx(std::log(0.7)));
  CHECK(read_csv_header(path) == std::vector<std::string>{"time", "y", "spot_var"});
}
