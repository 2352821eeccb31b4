#include "slosim/forecaster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slosim/csv.hpp"
#include "slosim/errors.hpp"
#include "slosim/linalg.hpp"
#include "slosim/mathfn.hpp"
#include "slosim/parallel.hpp"

namespace slosim {

double SeasonalityParams::value(double t) const {
  double s = 0.5 * a[0];
  for (int n = 1; n <= order; ++n) {
    double w = 2.0 * M_PI * n * t / period;
    s += a[n] * std::cos(w) + b[n] * std::sin(w);
  }
  return s;
}

double ForecastModel::seasonal_value(double t) const {
  double s = 0.0;
  for (const auto& block : seasonal) s += block.value(t);
  return s;
}

double ForecastModel::holiday_value(std::int64_t t) const {
  if (holidays.empty()) return 0.0;
  std::int64_t day = epoch_day(start_epoch + t * resolution_s);
  double h = 0.0;
  for (const auto& e : holidays) {
    if (day >= e.holiday.epoch_day && day < e.holiday.epoch_day + e.holiday.window_days) {
      h += e.kappa;
    }
  }
  return h;
}

namespace {

struct TrendGn {
  TrendParams params;
  double sse = 0.0;
};

double trend_sse(const TrendParams& p, const std::vector<double>& y, std::size_t begin) {
  return par::sum_indexed(y.size(), [&](std::size_t i) {
    double r = logistic_trend(p, static_cast<double>(begin + i)) - y[i];
    return r * r;
  });
}

// Coarse grid over (k, m), then Gauss-Newton with step halving. The capacity
// stays fixed throughout.
TrendParams fit_trend(const std::vector<double>& y, std::size_t begin, double capacity) {
  constexpr int kGrid = 21;
  const std::size_t w = y.size();
  std::vector<double> ks(kGrid), ms(kGrid);
  for (int j = 0; j < kGrid; ++j) {
    ks[j] = std::pow(10.0, -5.0 + 5.0 * j / (kGrid - 1));  // log-spaced in [1e-5, 1]
    ms[j] = static_cast<double>(begin) +
            static_cast<double>(w - 1) * j / static_cast<double>(kGrid - 1);
  }
  auto [cell, best_sse] = par::argmin_indexed(kGrid * kGrid, [&](std::size_t c) {
    TrendParams p{capacity, ks[c / kGrid], ms[c % kGrid]};
    return trend_sse(p, y, begin);
  });
  TrendParams p{capacity, ks[cell / kGrid], ms[cell % kGrid]};
  double sse = best_sse;

  for (int it = 0; it < 100; ++it) {
    struct Normal {
      double jkk = 0, jkm = 0, jmm = 0, gk = 0, gm = 0;
    };
    Normal nm = par::chunked_reduce<Normal>(
        w, [] { return Normal{}; },
        [&](Normal& acc, std::size_t i) {
          double t = static_cast<double>(begin + i);
          double g = logistic_trend(p, t);
          double slope = g * (1.0 - g / p.capacity);  // d g / d (k (t - m))
          double dk = slope * (t - p.offset);
          double dm = -slope * p.growth_rate;
          double r = g - y[i];
          acc.jkk += dk * dk;
          acc.jkm += dk * dm;
          acc.jmm += dm * dm;
          acc.gk += dk * r;
          acc.gm += dm * r;
        },
        [](Normal& a, const Normal& b) {
          a.jkk += b.jkk;
          a.jkm += b.jkm;
          a.jmm += b.jmm;
          a.gk += b.gk;
          a.gm += b.gm;
        });
    double det = nm.jkk * nm.jmm - nm.jkm * nm.jkm;
    if (!(std::fabs(det) > 1e-30)) break;
    double dk = -(nm.jmm * nm.gk - nm.jkm * nm.gm) / det;
    double dm = -(nm.jkk * nm.gm - nm.jkm * nm.gk) / det;

    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      TrendParams cand{capacity, p.growth_rate + step * dk, p.offset + step * dm};
      if (cand.growth_rate > 0.0) {
        double cand_sse = trend_sse(cand, y, begin);
        if (cand_sse < sse) {
          double rel = std::max(std::fabs(step * dk) / std::max(1.0, std::fabs(p.growth_rate)),
                                std::fabs(step * dm) / std::max(1.0, std::fabs(p.offset)));
          p = cand;
          sse = cand_sse;
          accepted = true;
          if (rel < 1e-8) return p;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return p;
}

std::size_t design_width(const std::vector<SeasonalSpec>& seasonal, std::size_t holidays) {
  std::size_t p = 1 + holidays;
  for (const auto& s : seasonal) p += 2 * static_cast<std::size_t>(s.order);
  return p;
}

// Fills one design-matrix row: [1, cos/sin per block harmonic..., holiday...].
void fill_row(double* row, std::int64_t t, const WorkloadTrace& trace,
              const std::vector<SeasonalSpec>& seasonal, const std::vector<Holiday>& holidays) {
  std::size_t c = 0;
  row[c++] = 1.0;
  for (const auto& s : seasonal) {
    for (int n = 1; n <= s.order; ++n) {
      double w = 2.0 * M_PI * n * static_cast<double>(t) / s.period;
      row[c++] = std::cos(w);
      row[c++] = std::sin(w);
    }
  }
  if (!holidays.empty()) {
    std::int64_t day = epoch_day(trace.timestamp(static_cast<std::size_t>(t)));
    for (const auto& h : holidays) {
      row[c++] = (day >= h.epoch_day && day < h.epoch_day + h.window_days) ? 1.0 : 0.0;
    }
  }
}

ForecastModel assemble_fit(const WorkloadTrace& trace, std::size_t begin, std::size_t end,
                           const TrendParams& trend, const std::vector<SeasonalSpec>& seasonal,
                           const std::vector<Holiday>& holidays,
                           std::vector<std::string> warnings) {
  const std::size_t w = end - begin;
  const std::size_t p = design_width(seasonal, holidays.size());

  struct Gram {
    std::vector<double> xtx;
    std::vector<double> xty;
  };
  Gram gram = par::chunked_reduce<Gram>(
      w,
      [&] {
        return Gram{std::vector<double>(p * p, 0.0), std::vector<double>(p, 0.0)};
      },
      [&](Gram& acc, std::size_t i) {
        std::int64_t t = static_cast<std::int64_t>(begin + i);
        std::vector<double> row(p);
        fill_row(row.data(), t, trace, seasonal, holidays);
        double d = static_cast<double>(trace.counts[begin + i]) -
                   logistic_trend(trend, static_cast<double>(t));
        for (std::size_t r = 0; r < p; ++r) {
          if (row[r] == 0.0) continue;
          for (std::size_t c2 = 0; c2 <= r; ++c2) acc.xtx[r * p + c2] += row[r] * row[c2];
          acc.xty[r] += row[r] * d;
        }
      },
      [](Gram& a, const Gram& b) {
        for (std::size_t i = 0; i < a.xtx.size(); ++i) a.xtx[i] += b.xtx[i];
        for (std::size_t i = 0; i < a.xty.size(); ++i) a.xty[i] += b.xty[i];
      });

  std::vector<double> beta;
  try {
    beta = linalg::cholesky_solve(std::move(gram.xtx), std::move(gram.xty), p);
  } catch (const linalg::SingularMatrixError&) {
    throw FitError("singular regression matrix; reduce the Fourier order N");
  }

  ForecastModel model;
  model.trend = trend;
  model.start_epoch = trace.start_epoch;
  model.resolution_s = trace.resolution_s;
  model.window_start = static_cast<std::int64_t>(begin);
  model.window_end = static_cast<std::int64_t>(end);
  model.warnings = std::move(warnings);

  std::size_t c = 1;
  bool first_block = true;
  for (const auto& s : seasonal) {
    SeasonalityParams block;
    block.period = s.period;
    block.order = s.order;
    block.a.assign(static_cast<std::size_t>(s.order) + 1, 0.0);
    block.b.assign(static_cast<std::size_t>(s.order) + 1, 0.0);
    // The shared intercept lands in the first block's a0.
    if (first_block) {
      block.a[0] = 2.0 * beta[0];
      first_block = false;
    }
    for (int n = 1; n <= s.order; ++n) {
      block.a[n] = beta[c++];
      block.b[n] = beta[c++];
    }
    model.seasonal.push_back(std::move(block));
  }
  for (const auto& h : holidays) {
    model.holidays.push_back(HolidayEffect{h, beta[c++]});
  }

  std::vector<double> residuals(w);
  par::for_each_index(w, [&](std::size_t i) {
    std::int64_t t = static_cast<std::int64_t>(begin + i);
    double fitted = model.trend_value(static_cast<double>(t)) +
                    model.seasonal_value(static_cast<double>(t)) + model.holiday_value(t);
    residuals[i] = static_cast<double>(trace.counts[begin + i]) - fitted;
  });
  model.resid_q05 = math::quantile_type7(residuals, 0.05);
  model.resid_q95 = math::quantile_type7(residuals, 0.95);
  return model;
}

void validate_fit_args(const WorkloadTrace& trace, std::size_t begin, std::size_t end,
                       const std::vector<SeasonalSpec>& seasonal,
                       std::vector<std::string>& warnings) {
  if (end > trace.size() || begin >= end) throw RangeError("fit: bad training range");
  if (seasonal.empty()) throw ConfigError("fit: at least one seasonal block required");
  const std::size_t w = end - begin;
  int max_order = 0;
  for (const auto& s : seasonal) {
    if (!(s.period > 0.0)) throw ConfigError("fit: seasonal period must be > 0");
    if (s.order < 1) throw ConfigError("fit: Fourier order must be >= 1");
    if (static_cast<double>(s.order) > s.period / 2.0) {
      throw ConfigError("fit: Fourier order exceeds period/2");
    }
    max_order = std::max(max_order, s.order);
    if (static_cast<double>(w) < 2.0 * s.period) {
      warnings.push_back("training window shorter than two periods of " +
                         std::to_string(s.period));
    }
  }
  if (w < 2 * static_cast<std::size_t>(max_order) + 2) {
    throw InsufficientDataError("fit: training window of " + std::to_string(w) +
                                " intervals cannot support order " + std::to_string(max_order));
  }
}

}  // namespace

ForecastModel fit_range(const WorkloadTrace& trace, std::size_t begin, std::size_t end,
                        const std::vector<SeasonalSpec>& seasonal,
                        const std::vector<Holiday>& holidays) {
  auto started = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  validate_fit_args(trace, begin, end, seasonal, warnings);

  std::vector<double> y(end - begin);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(trace.counts[begin + i]);
  double capacity = 1.2 * *std::max_element(y.begin(), y.end());
  if (!(capacity > 0.0)) capacity = 1.0;
  TrendParams trend = fit_trend(y, begin, capacity);

  ForecastModel model =
      assemble_fit(trace, begin, end, trend, seasonal, holidays, std::move(warnings));
  model.t_forecast_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return model;
}

ForecastModel fit(const TraceWindow& window, double period, int order,
                  const std::vector<Holiday>& holidays) {
  return fit_range(*window.trace, 0, window.train_len, {{period, order}}, holidays);
}

ForecastModel fit_range_with_trend(const WorkloadTrace& trace, std::size_t begin, std::size_t end,
                                   const TrendParams& trend,
                                   const std::vector<SeasonalSpec>& seasonal,
                                   const std::vector<Holiday>& holidays) {
  std::vector<std::string> warnings;
  validate_fit_args(trace, begin, end, seasonal, warnings);
  return assemble_fit(trace, begin, end, trend, seasonal, holidays, std::move(warnings));
}

Forecast predict(const ForecastModel& model, std::int64_t target) {
  if (target < model.window_end) {
    throw RangeError("predict: target " + std::to_string(target) +
                     " lies before the trained window end " + std::to_string(model.window_end));
  }
  double t = static_cast<double>(target);
  double raw = model.trend_value(t) + model.seasonal_value(t) + model.holiday_value(target);
  Forecast f;
  f.target = target;
  f.y = std::max(0.0, raw);
  // min/max with zero keep the bounds bracketing even if both residual
  // quantiles share a sign.
  f.y_low = std::max(0.0, raw + std::min(model.resid_q05, 0.0));
  f.y_upp = std::max(f.y, raw + std::max(model.resid_q95, 0.0));
  return f;
}

ForecastModel retrain_rolling(const ForecastModel& model, const WorkloadTrace& trace,
                              std::size_t now) {
  if (static_cast<std::int64_t>(now) <= model.window_end) {
    throw RangeError("retrain_rolling: now must advance past the trained window end");
  }
  std::size_t w = static_cast<std::size_t>(model.window_end - model.window_start);
  if (now < w || now > trace.size()) {
    throw RangeError("retrain_rolling: rolling window out of trace bounds");
  }
  std::vector<SeasonalSpec> seasonal;
  for (const auto& block : model.seasonal) seasonal.push_back({block.period, block.order});
  std::vector<Holiday> holidays;
  for (const auto& e : model.holidays) holidays.push_back(e.holiday);
  return fit_range(trace, now - w, now, seasonal, holidays);
}

TuneResult tune(const WorkloadTrace& trace, std::size_t train_end, std::size_t validation_len,
                const std::vector<int>& order_grid, const std::vector<std::size_t>& window_grid,
                double period, const std::vector<Holiday>& holidays) {
  if (order_grid.empty() || window_grid.empty()) throw ConfigError("tune: empty grid");
  if (validation_len == 0) throw RangeError("tune: validation segment required");
  if (train_end + validation_len > trace.size()) {
    throw RangeError("tune: validation segment exceeds trace");
  }

  TuneResult result;
  result.cells.resize(order_grid.size() * window_grid.size());
  for (std::size_t i = 0; i < order_grid.size(); ++i) {
    for (std::size_t j = 0; j < window_grid.size(); ++j) {
      auto& cell = result.cells[i * window_grid.size() + j];
      cell.order = order_grid[i];
      cell.window = window_grid[j];
    }
  }

  par::for_each_index(result.cells.size(), [&](std::size_t c) {
    TuneCell& cell = result.cells[c];
    try {
      if (cell.window > train_end) throw RangeError("window exceeds available training data");
      ForecastModel m =
          fit_range(trace, train_end - cell.window, train_end, {{period, cell.order}}, holidays);
      std::vector<double> apes(validation_len);
      double abs_err = 0.0;
      for (std::size_t v = 0; v < validation_len; ++v) {
        std::int64_t t = static_cast<std::int64_t>(train_end + v);
        double yhat = predict(m, t).y;
        double actual = static_cast<double>(trace.counts[static_cast<std::size_t>(t)]);
        double err = std::fabs(yhat - actual);
        abs_err += err;
        apes[v] = err / std::max(1.0, actual);
      }
      cell.mae = abs_err / static_cast<double>(validation_len);
      cell.p95_ape = math::quantile_type7(apes, 0.95);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  const TuneCell* best = nullptr;
  for (const auto& cell : result.cells) {
    // Cells are ordered by (order, window), so strict < encodes the tie-break.
    if (cell.ok && (!best || cell.p95_ape < best->p95_ape)) best = &cell;
  }
  if (!best) throw FitError("tune: every grid cell failed");
  result.order = best->order;
  result.window = best->window;
  result.p95_ape = best->p95_ape;
  return result;
}

std::vector<Holiday> load_holidays(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::vector<Holiday> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    auto fields = csv::split(line);
    Holiday h;
    h.epoch_day = csv::parse_int(fields[0], line_no, path);
    if (fields.size() > 1 && !fields[1].empty()) {
      h.window_days = static_cast<int>(csv::parse_int(fields[1], line_no, path));
      if (h.window_days < 1) {
        throw ParseError(path + ": line " + std::to_string(line_no) + ": window_days must be >= 1");
      }
    }
    out.push_back(h);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (out[i].epoch_day == out[j].epoch_day) {
        throw ParseError(path + ": duplicate holiday day " + std::to_string(out[i].epoch_day));
      }
    }
  }
  return out;
}

namespace {
using nlohmann::json;
}

std::string to_json(const ForecastModel& m) {
  json j;
  j["trend"] = {{"capacity", m.trend.capacity},
                {"growth_rate", m.trend.growth_rate},
                {"offset", m.trend.offset}};
  j["seasonal"] = json::array();
  for (const auto& s : m.seasonal) {
    j["seasonal"].push_back({{"period", s.period}, {"order", s.order}, {"a", s.a}, {"b", s.b}});
  }
  j["holidays"] = json::array();
  for (const auto& e : m.holidays) {
    j["holidays"].push_back({{"epoch_day", e.holiday.epoch_day},
                             {"window_days", e.holiday.window_days},
                             {"kappa", e.kappa}});
  }
  j["residual_quantiles"] = {{"q05", m.resid_q05}, {"q95", m.resid_q95}};
  j["window"] = {{"start", m.window_start}, {"end", m.window_end}};
  j["frame"] = {{"start_epoch", m.start_epoch}, {"resolution_s", m.resolution_s}};
  j["t_forecast_s"] = m.t_forecast_s;
  return j.dump(2);
}

ForecastModel forecast_model_from_json(const std::string& text) {
  json j = json::parse(text);
  ForecastModel m;
  m.trend.capacity = j.at("trend").at("capacity").get<double>();
  m.trend.growth_rate = j.at("trend").at("growth_rate").get<double>();
  m.trend.offset = j.at("trend").at("offset").get<double>();
  for (const auto& s : j.at("seasonal")) {
    SeasonalityParams block;
    block.period = s.at("period").get<double>();
    block.order = s.at("order").get<int>();
    block.a = s.at("a").get<std::vector<double>>();
    block.b = s.at("b").get<std::vector<double>>();
    m.seasonal.push_back(std::move(block));
  }
  for (const auto& e : j.at("holidays")) {
    m.holidays.push_back(HolidayEffect{
        Holiday{e.at("epoch_day").get<std::int64_t>(), e.at("window_days").get<int>()},
        e.at("kappa").get<double>()});
  }
  m.resid_q05 = j.at("residual_quantiles").at("q05").get<double>();
  m.resid_q95 = j.at("residual_quantiles").at("q95").get<double>();
  m.window_start = j.at("window").at("start").get<std::int64_t>();
  m.window_end = j.at("window").at("end").get<std::int64_t>();
  m.start_epoch = j.at("frame").at("start_epoch").get<std::int64_t>();
  m.resolution_s = j.at("frame").at("resolution_s").get<int>();
  m.t_forecast_s = j.at("t_forecast_s").get<double>();
  return m;
}

}  // namespace slosim
