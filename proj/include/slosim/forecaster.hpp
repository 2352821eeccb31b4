#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slosim/signal.hpp"
#include "slosim/trace.hpp"

namespace slosim {

// Fourier block: a[0]/2 + sum_n a[n] cos(2 pi n t / P) + b[n] sin(2 pi n t / P).
struct SeasonalityParams {
  double period = 1440.0;  // intervals; 1440 = daily at minute resolution
  int order = 0;
  std::vector<double> a;  // size order + 1
  std::vector<double> b;  // size order + 1, b[0] unused

  double value(double t) const;
};

struct Holiday {
  std::int64_t epoch_day = 0;
  int window_days = 1;
};

struct HolidayEffect {
  Holiday holiday;
  double kappa = 0.0;  // one coefficient, spread uniformly across the window
};

struct Forecast {
  std::int64_t target = 0;  // interval index
  double y = 0.0;
  double y_low = 0.0;
  double y_upp = 0.0;
};

// Immutable fitted decomposition y(t) = g(t) + s(t) + h(t) + residual.
struct ForecastModel {
  TrendParams trend;
  std::vector<SeasonalityParams> seasonal;
  std::vector<HolidayEffect> holidays;
  double resid_q05 = 0.0;
  double resid_q95 = 0.0;
  std::int64_t window_start = 0;  // trained on [window_start, window_end)
  std::int64_t window_end = 0;
  std::int64_t start_epoch = 0;  // trace frame, for holiday day lookup
  int resolution_s = 60;
  double t_forecast_s = 0.0;  // wall time of the producing fit
  std::vector<std::string> warnings;

  double trend_value(double t) const { return logistic_trend(trend, t); }
  double seasonal_value(double t) const;
  double holiday_value(std::int64_t t) const;
};

struct SeasonalSpec {
  double period = 1440.0;
  int order = 10;
};

// Two-stage deterministic fit: capacity pinned at 1.2x the training maximum,
// (growth_rate, offset) by coarse grid then Gauss-Newton; seasonality and
// holiday coefficients by OLS on the detrended series; residual 5th/95th
// quantiles retained for the forecast bounds.
ForecastModel fit_range(const WorkloadTrace& trace, std::size_t begin, std::size_t end,
                        const std::vector<SeasonalSpec>& seasonal,
                        const std::vector<Holiday>& holidays = {});

ForecastModel fit(const TraceWindow& window, double period, int order,
                  const std::vector<Holiday>& holidays = {});

// Stage-2-only fit against a caller-supplied trend (calibration hook: OLS is
// exact on noiseless data when the trend is the generator's).
ForecastModel fit_range_with_trend(const WorkloadTrace& trace, std::size_t begin, std::size_t end,
                                   const TrendParams& trend,
                                   const std::vector<SeasonalSpec>& seasonal,
                                   const std::vector<Holiday>& holidays = {});

// Point forecast with residual-quantile bounds; target must lie at or past the
// trained window end.
Forecast predict(const ForecastModel& model, std::int64_t target);

// Refit on the most recent W intervals ending at `now` (same period, order and
// holiday list); `now` must have advanced past the previous window end.
ForecastModel retrain_rolling(const ForecastModel& model, const WorkloadTrace& trace,
                              std::size_t now);

struct TuneCell {
  int order = 0;
  std::size_t window = 0;
  bool ok = false;
  double p95_ape = 0.0;
  double mae = 0.0;
  std::string error;
};

struct TuneResult {
  int order = 0;
  std::size_t window = 0;
  double p95_ape = 0.0;
  std::vector<TuneCell> cells;
};

// Grid search minimizing the 95th-percentile absolute percentage error on the
// validation segment [train_end, train_end + validation_len). Ties break to
// the smaller order, then the smaller window; failing cells are excluded.
TuneResult tune(const WorkloadTrace& trace, std::size_t train_end, std::size_t validation_len,
                const std::vector<int>& order_grid, const std::vector<std::size_t>& window_grid,
                double period = 1440.0, const std::vector<Holiday>& holidays = {});

// One epoch-day per line, optional ",window_days"; '#' starts a comment.
std::vector<Holiday> load_holidays(const std::string& path);

std::string to_json(const ForecastModel& model);
ForecastModel forecast_model_from_json(const std::string& text);

}  // namespace slosim
