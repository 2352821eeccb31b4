#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slosim/signal.hpp"

namespace slosim {

// Request counts per fixed interval. Canonical resolution is one minute: the
// request monitor aggregates per minute, and loaders resample to it.
struct WorkloadTrace {
  std::int64_t start_epoch = 0;  // seconds
  int resolution_s = 60;
  std::vector<std::int64_t> counts;

  std::size_t size() const { return counts.size(); }
  std::int64_t timestamp(std::size_t i) const {
    return start_epoch + static_cast<std::int64_t>(i) * resolution_s;
  }
};

struct TraceSchema {
  std::string timestamp_column = "timestamp";
  std::string count_column = "count";
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t duplicate_buckets = 0;  // rows merged into an already-seen minute
  std::size_t gaps_filled = 0;        // missing minutes filled with 0
};

// CSV loader. Header row required; timestamps are epoch seconds or ISO-8601
// (auto-detected per row). Rows in the same minute bucket are summed; missing
// minutes are zero-filled and flagged in the report.
WorkloadTrace load_trace(const std::string& path, const TraceSchema& schema = {},
                         LoadReport* report = nullptr);

void write_trace(const WorkloadTrace& trace, const std::string& path);

// Synthetic generator. Uses the same trend / seasonal forms the forecaster
// fits, so ground-truth parameters are known to tests.
struct SyntheticSpec {
  double base_level = 0.0;
  std::optional<TrendParams> trend;
  std::vector<Harmonic> harmonics;
  double noise_sigma = 0.0;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::int64_t start_epoch = 0;
};

WorkloadTrace generate_synthetic(const SyntheticSpec& spec);

// Index bookkeeping only: [0, W) train, [W, W+v) validation, [W+v, W+v+t) test.
struct TraceWindow {
  const WorkloadTrace* trace = nullptr;
  std::size_t train_len = 0;
  std::size_t validation_len = 0;
  std::size_t test_len = 0;

  std::size_t train_end() const { return train_len; }
  std::size_t validation_end() const { return train_len + validation_len; }
  std::size_t test_end() const { return train_len + validation_len + test_len; }
};

TraceWindow split(const WorkloadTrace& trace, std::size_t train_len, std::size_t validation_len,
                  std::size_t test_len);

// Epoch-day of an interval timestamp (days since 1970-01-01, floored).
inline std::int64_t epoch_day(std::int64_t epoch_seconds) {
  return epoch_seconds >= 0 ? epoch_seconds / 86400 : (epoch_seconds - 86399) / 86400;
}

}  // namespace slosim
