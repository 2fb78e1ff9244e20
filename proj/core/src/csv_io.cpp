#include "rvlab/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rvlab {

DataError::DataError(const std::string& what, std::size_t row)
    : std::runtime_error(row ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool digits(const std::string& s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

bool is_blank_or_comment(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

std::optional<double> parse_time(const std::string& raw) {
  const std::string s = trim(raw);
  if (auto v = parse_number(s)) return v;
  int y, mo, d, h, mi, sec;
  if (!digits(s, 0, 4, y) || s.size() < 19 || s[4] != '-' || !digits(s, 5, 2, mo) || s[7] != '-' ||
      !digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') || !digits(s, 11, 2, h) || s[13] != ':' ||
      !digits(s, 14, 2, mi) || s[16] != ':' || !digits(s, 17, 2, sec)) {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  double frac = 0.0;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    std::size_t end = pos + 1;
    while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
    if (end == pos + 1) return std::nullopt;
    frac = *parse_number("0" + s.substr(pos, end - pos));
    pos = end;
  }
  double offset = 0.0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      pos += 1;
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      int oh, om;
      if (!digits(s, pos + 1, 2, oh) || !digits(s, pos + 4, 2, om)) return std::nullopt;
      offset = (s[pos] == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
      pos = s.size();
    } else {
      return std::nullopt;
    }
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec + frac - offset;
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!is_blank_or_comment(line)) return split(line);
  }
  throw DataError("empty file " + path.string());
}

IngestResult ingest_csv(const std::filesystem::path& path, const PriceCsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  bool declared_log = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.rfind("#", 0) == 0) {
      if (t.find("log_prices: true") != std::string::npos) declared_log = true;
      continue;
    }
    if (t.empty()) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw DataError("empty file " + path.string());

  auto find_col = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column '" + name + "' in header", lineno);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = find_col(schema.time_column);
  std::vector<std::string> names = schema.price_columns;
  if (names.empty()) {
    for (const auto& h : header)
      if (h != schema.time_column) names.push_back(h);
  }
  if (names.empty()) throw DataError("no price columns in header", lineno);
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(find_col(n));
  const bool logs = schema.log_prices.value_or(declared_log);

  IngestResult result{LogPricePath({0.0, 1.0}, {0.0, 0.0}, 1), names, 0.0, 0.0, {}};
  std::vector<double> times;
  std::vector<double> values;
  const std::size_t dim = cols.size();
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_or_comment(line)) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                      lineno);
    }
    const auto tm = parse_time(fields[time_col]);
    if (!tm) throw DataError("unparseable time '" + fields[time_col] + "'", lineno);
    std::vector<double> row(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto v = parse_number(fields[cols[k]]);
      if (!v) throw DataError("unparseable value '" + fields[cols[k]] + "' in column " + names[k], lineno);
      if (logs) {
        row[k] = *v;
      } else {
        if (!(*v > 0.0)) throw DataError("non-positive price in column " + names[k], lineno);
        row[k] = std::log(*v);
      }
    }
    if (!times.empty() && *tm < times.back()) throw DataError("time decreases", lineno);
    if (!times.empty() && *tm == times.back()) {
      result.warnings.push_back("row " + std::to_string(lineno) + ": duplicate timestamp " +
                                fields[time_col] + ", keeping the later observation");
      std::copy(row.begin(), row.end(), values.end() - static_cast<std::ptrdiff_t>(dim));
      continue;
    }
    times.push_back(*tm);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (times.empty()) throw DataError("no data rows in " + path.string());
  if (times.size() < 2) throw DataError("need at least two distinct timestamps in " + path.string());

  const double t0 = times.front();
  const double span = times.back() - t0;
  for (double& t : times) t = (t - t0) / span;
  times.back() = 1.0;
  result.start = t0;
  result.duration_seconds = span;
  result.path = LogPricePath(std::move(times), std::move(values), dim);
  return result;
}

}  // namespace rvlab
