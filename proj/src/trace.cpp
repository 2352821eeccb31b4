#include "slosim/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "slosim/csv.hpp"
#include "slosim/errors.hpp"
#include "slosim/mathfn.hpp"
#include "slosim/rng.hpp"

namespace slosim {

namespace csv {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    t.rows.push_back(split(line));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw ParseError(path + ": empty file");
  return t;
}

std::size_t Table::column(const std::string& name, const std::string& path) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError(path + ": missing column '" + name + "'");
}

long long parse_int(const std::string& field, std::size_t line, const std::string& path) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(field.c_str(), &end, 10);
  if (field.empty() || errno != 0 || end == field.c_str() || *end != '\0') {
    throw ParseError(path + ": line " + std::to_string(line) + ": bad integer '" + field + "'");
  }
  return v;
}

double parse_double(const std::string& field, std::size_t line, const std::string& path) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (field.empty() || errno != 0 || end == field.c_str() || *end != '\0') {
    throw ParseError(path + ": line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

namespace {

// Days since 1970-01-01 for a civil date (Gregorian, proleptic).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& field, std::size_t line, const std::string& path) {
  bool iso = field.find('-') != std::string::npos || field.find(':') != std::string::npos;
  if (!iso) return parse_int(field, line, path);
  int y, mo, d, h = 0, mi = 0, s = 0;
  char sep = 'T';
  int got = std::sscanf(field.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (got != 7 && got != 3) {
    throw ParseError(path + ": line " + std::to_string(line) + ": bad timestamp '" + field + "'");
  }
  if (got == 7 && sep != 'T' && sep != ' ') {
    throw ParseError(path + ": line " + std::to_string(line) + ": bad timestamp '" + field + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
    throw ParseError(path + ": line " + std::to_string(line) + ": bad timestamp '" + field + "'");
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

}  // namespace csv

WorkloadTrace load_trace(const std::string& path, const TraceSchema& schema, LoadReport* report) {
  csv::Table t = csv::read_file(path);
  if (t.rows.empty()) throw EmptyTraceError(path + ": no data rows");
  std::size_t ts_col = t.column(schema.timestamp_column, path);
  std::size_t ct_col = t.column(schema.count_column, path);

  LoadReport rep;
  std::map<std::int64_t, std::int64_t> buckets;  // minute index -> summed count
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::size_t line = t.line_numbers[r];
    if (row.size() <= std::max(ts_col, ct_col)) {
      throw ParseError(path + ": line " + std::to_string(line) + ": too few columns");
    }
    std::int64_t epoch = csv::parse_timestamp(row[ts_col], line, path);
    long long count = csv::parse_int(row[ct_col], line, path);
    if (count < 0) {
      throw ParseError(path + ": line " + std::to_string(line) + ": negative count");
    }
    std::int64_t minute = epoch >= 0 ? epoch / 60 : (epoch - 59) / 60;
    auto [it, fresh] = buckets.try_emplace(minute, 0);
    if (!fresh) ++rep.duplicate_buckets;
    it->second += count;
    ++rep.rows_read;
  }

  WorkloadTrace trace;
  trace.start_epoch = buckets.begin()->first * 60;
  trace.resolution_s = 60;
  std::int64_t last_minute = buckets.rbegin()->first;
  trace.counts.reserve(static_cast<std::size_t>(last_minute - buckets.begin()->first + 1));
  std::int64_t expect = buckets.begin()->first;
  for (const auto& [minute, count] : buckets) {
    while (expect < minute) {
      trace.counts.push_back(0);
      ++rep.gaps_filled;
      ++expect;
    }
    trace.counts.push_back(count);
    ++expect;
  }
  (void)last_minute;
  if (report) *report = rep;
  return trace;
}

void write_trace(const WorkloadTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "timestamp,count\n";
  for (std::size_t i = 0; i < trace.counts.size(); ++i) {
    out << trace.timestamp(i) << "," << trace.counts[i] << "\n";
  }
}

WorkloadTrace generate_synthetic(const SyntheticSpec& spec) {
  if (spec.length == 0) throw ConfigError("synthetic trace: length must be > 0");
  if (spec.noise_sigma < 0.0) throw ConfigError("synthetic trace: noise_sigma must be >= 0");
  for (const auto& h : spec.harmonics) {
    if (!(h.period > 0.0)) throw ConfigError("synthetic trace: harmonic period must be > 0");
  }
  WorkloadTrace trace;
  trace.start_epoch = spec.start_epoch;
  trace.resolution_s = 60;
  trace.counts.resize(spec.length);
  Rng rng(spec.seed, 0);
  for (std::size_t i = 0; i < spec.length; ++i) {
    double t = static_cast<double>(i);
    double v = spec.base_level;
    if (spec.trend) v += logistic_trend(*spec.trend, t);
    for (const auto& h : spec.harmonics) v += harmonic_value(h, t);
    if (spec.noise_sigma > 0.0) v += spec.noise_sigma * math::normal_quantile(rng.next_u01());
    trace.counts[i] = std::max<std::int64_t>(0, std::llround(v));
  }
  return trace;
}

TraceWindow split(const WorkloadTrace& trace, std::size_t train_len, std::size_t validation_len,
                  std::size_t test_len) {
  if (train_len == 0) throw RangeError("split: train length must be > 0");
  if (train_len + validation_len + test_len > trace.size()) {
    throw RangeError("split: window lengths exceed trace length " + std::to_string(trace.size()));
  }
  return TraceWindow{&trace, train_len, validation_len, test_len};
}

}  // namespace slosim
