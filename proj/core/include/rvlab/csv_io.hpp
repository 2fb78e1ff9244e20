#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvlab/realized.hpp"

namespace rvlab {

/// Malformed input data; `row()` is the 1-based physical line number (0 when
/// the problem is not tied to one line).
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t row = 0);
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

struct PriceCsvSchema {
  std::string time_column = "time";
  /// Empty selects every column except the time column.
  std::vector<std::string> price_columns;
  /// Values are already log prices.  When unset, a "# log_prices: true"
  /// comment line in the file decides; otherwise values are prices.
  std::optional<bool> log_prices;
};

struct IngestResult {
  LogPricePath path;
  std::vector<std::string> columns;
  /// Raw time of the first and last observation (seconds since the epoch for
  /// ISO-8601 input).  The window is rescaled to [0, 1].
  double start = 0.0;
  double duration_seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Column names of the header row.
std::vector<std::string> read_csv_header(const std::filesystem::path& path);

/// Parses "YYYY-MM-DD[T ]hh:mm:ss[.frac][Z|+hh:mm|-hh:mm]" to seconds since
/// the Unix epoch, or a plain decimal number of seconds.
std::optional<double> parse_time(const std::string& field);

IngestResult ingest_csv(const std::filesystem::path& path, const PriceCsvSchema& schema = {});

}  // namespace rvlab
