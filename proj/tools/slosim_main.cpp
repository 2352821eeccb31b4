// slosim: trace-driven SLO-aware autoscaling simulator.
//
// Subcommands:
//   profile   fit execution-time distributions per core count
//   forecast  rolling workload forecasts with error metrics
//   simulate  replay a trace against the provisioned virtual cluster
//   synth     generate a synthetic workload trace
//
// Exit codes: 0 ok, 1 threshold not met, 2 input or fit error, 3 infeasible SLO.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "slosim/compensator.hpp"
#include "slosim/config.hpp"
#include "slosim/csv.hpp"
#include "slosim/errors.hpp"
#include "slosim/estimator.hpp"
#include "slosim/forecaster.hpp"
#include "slosim/mathfn.hpp"
#include "slosim/parallel.hpp"
#include "slosim/profiler.hpp"
#include "slosim/report.hpp"
#include "slosim/simulator.hpp"
#include "slosim/trace.hpp"

using namespace slosim;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
};

Config load_config(const CommonArgs& args) {
  Config cfg =
      args.config_path.empty() ? Config::from_string("") : Config::from_file(args.config_path);
  for (const auto& kv : args.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(csv::trim(kv.substr(0, eq)), csv::trim(kv.substr(eq + 1)));
  }
  return cfg;
}

std::vector<double> parse_tuple(const std::string& text, std::size_t arity,
                                const std::string& what) {
  auto fields = csv::split(text, ':');
  if (fields.size() != arity) {
    throw ConfigError(what + ": expected " + std::to_string(arity) + " ':'-separated values");
  }
  std::vector<double> out;
  for (const auto& f : fields) out.push_back(csv::parse_double(f, 0, what));
  return out;
}

SyntheticSpec synthetic_from_config(const Config& cfg) {
  SyntheticSpec spec;
  spec.base_level = cfg.get_double("synthetic.base", 0.0);
  spec.length = static_cast<std::size_t>(cfg.get_int("synthetic.length"));
  spec.noise_sigma = cfg.get_double("synthetic.noise_sigma", 0.0);
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("synthetic.seed", 0));
  spec.start_epoch = cfg.get_int("synthetic.start_epoch", 0);
  if (cfg.has("synthetic.trend")) {
    auto t = parse_tuple(cfg.get_string("synthetic.trend"), 3, "synthetic.trend");
    spec.trend = TrendParams{t[0], t[1], t[2]};
  }
  if (cfg.has("synthetic.harmonics")) {
    for (const auto& part : csv::split(cfg.get_string("synthetic.harmonics"), ';')) {
      if (part.empty()) continue;
      auto h = parse_tuple(part, 3, "synthetic.harmonics");
      spec.harmonics.push_back(Harmonic{h[0], h[1], h[2]});
    }
  }
  return spec;
}

WorkloadTrace trace_from_config(const Config& cfg) {
  if (cfg.has("trace.csv")) {
    LoadReport rep;
    auto trace = load_trace(cfg.get_path("trace.csv"),
                            TraceSchema{cfg.get_string("trace.timestamp_column", "timestamp"),
                                        cfg.get_string("trace.count_column", "count")},
                            &rep);
    if (rep.gaps_filled > 0) {
      std::cerr << "note: " << rep.gaps_filled << " missing minutes zero-filled\n";
    }
    return trace;
  }
  if (cfg.has("synthetic.length")) return generate_synthetic(synthetic_from_config(cfg));
  throw ConfigError("config needs either trace.csv or a synthetic.* block");
}

TraceWindow window_from_config(const Config& cfg, const WorkloadTrace& trace) {
  std::size_t n = trace.size();
  std::size_t train =
      static_cast<std::size_t>(cfg.get_int("split.train", static_cast<long long>(n * 6 / 10)));
  std::size_t validation =
      static_cast<std::size_t>(cfg.get_int("split.validation", static_cast<long long>(n / 20)));
  long long rest = static_cast<long long>(n) - static_cast<long long>(train + validation);
  std::size_t test =
      static_cast<std::size_t>(cfg.get_int("split.test", std::max<long long>(0, rest)));
  return split(trace, train, validation, test);
}

SloSpec slo_from_config(const Config& cfg) {
  SloSpec slo;
  slo.lambda_s = cfg.get_double("slo.lambda_s");
  slo.percentile = cfg.get_double("slo.percentile", 0.95);
  slo.min_mem_gb = cfg.get_double("slo.min_mem_gb", 0.0);
  if (!(slo.lambda_s > 0.0)) throw ConfigError("slo.lambda_s must be > 0");
  if (!(slo.percentile > 0.0 && slo.percentile < 1.0)) {
    throw ConfigError("slo.percentile must lie in (0,1)");
  }
  return slo;
}

ExecutionProfile profile_from_config(const Config& cfg) {
  ExecutionProfile profile;
  if (cfg.has("profile.json")) {
    profile = load_profile(cfg.get_path("profile.json"));
  } else if (cfg.has("samples.csv")) {
    auto samples =
        load_samples(cfg.get_path("samples.csv"), cfg.get_string("service.name", "service"));
    ProfileOptions opt;
    opt.min_samples = static_cast<std::size_t>(cfg.get_int("profile.min_samples", 30));
    profile = build_profile(
        cfg.get_string("service.name", "service"), samples,
        cfg.get_double("slo.percentile", 0.95), cfg.get_double("slo.min_mem_gb", 0.0),
        SetupTimes{cfg.get_double("setup.t_vm_s", 0.0), cfg.get_double("setup.t_cd_s", 0.0),
                   cfg.get_double("setup.t_ml_s", 0.0), cfg.get_double("setup.t_mu_s", 0.0)},
        opt);
  } else {
    throw ConfigError("config needs profile.json or samples.csv");
  }
  // Explicit setup keys override whatever the profile carries.
  if (cfg.has("setup.t_vm_s")) profile.setup.vm_s = cfg.get_double("setup.t_vm_s");
  if (cfg.has("setup.t_cd_s")) profile.setup.cd_s = cfg.get_double("setup.t_cd_s");
  if (cfg.has("setup.t_ml_s")) profile.setup.ml_s = cfg.get_double("setup.t_ml_s");
  if (cfg.has("setup.t_mu_s")) profile.setup.mu_s = cfg.get_double("setup.t_mu_s");
  if (cfg.has("slo.min_mem_gb")) profile.min_mem_gb = cfg.get_double("slo.min_mem_gb");
  return profile;
}

std::vector<Holiday> holidays_from_config(const Config& cfg) {
  if (!cfg.has("holidays.file")) return {};
  return load_holidays(cfg.get_path("holidays.file"));
}

struct ForecastSetup {
  ForecastModel model;
  CompensatorModel compensator;
  std::size_t ring = 5;
  int horizon = 0;
  int retrain_interval = 60;
};

// Fits the rolling forecaster on the window ending at the test start and, when
// requested, trains the compensator on the preceding segment's forecast errors.
ForecastSetup fit_forecaster(const Config& cfg, const WorkloadTrace& trace,
                             const TraceWindow& window, const ExecutionProfile& profile) {
  ForecastSetup out;
  double period = cfg.get_double("forecaster.period", 1440.0);
  int order = static_cast<int>(cfg.get_int("forecaster.order", 10));
  std::size_t w =
      static_cast<std::size_t>(cfg.get_int("forecaster.window", static_cast<long long>(window.train_len)));
  std::size_t test_start = window.validation_end();
  if (w > test_start) throw ConfigError("forecaster.window exceeds the data before the test split");
  auto holidays = holidays_from_config(cfg);

  out.model = fit_range(trace, test_start - w, test_start, {{period, order}}, holidays);
  out.ring = static_cast<std::size_t>(cfg.get_int("compensator.ring", 5));
  out.retrain_interval = static_cast<int>(cfg.get_int("forecaster.retrain_interval", 60));
  out.horizon = setup_horizon_intervals(profile.setup, cfg.get_double("provisioner.t_forecast_s", 0.0),
                                        cfg.get_double("provisioner.tick_interval_s", 60.0));

  CompKind kind = comp_kind_from_name(cfg.get_string("compensator.kind", "identity"));
  out.compensator.kind = CompKind::Identity;
  out.compensator.ring_capacity = out.ring;
  if (kind != CompKind::Identity) {
    std::size_t train_points =
        static_cast<std::size_t>(cfg.get_int("compensator.train_points", 3000));
    if (test_start < train_points + w) {
      throw ConfigError("not enough history before the test split to train the compensator");
    }
    std::size_t comp_begin = test_start - train_points;
    auto comp_model = fit_range(trace, comp_begin - w, comp_begin, {{period, order}}, holidays);
    auto dataset = build_training_set(trace, comp_model, comp_begin, test_start, out.ring);
    out.compensator = train(dataset, kind);
  }
  return out;
}

SimScenario scenario_from_config(const Config& cfg, const WorkloadTrace& trace,
                                 const TraceWindow& window, const ExecutionProfile& profile,
                                 const FlavorCatalog& catalog, bool oracle) {
  SimScenario sc;
  sc.trace = &trace;
  sc.arrivals_begin = window.validation_end();
  sc.arrivals_end = window.test_end();
  sc.profile = &profile;
  sc.catalog = &catalog;
  sc.slo = slo_from_config(cfg);
  sc.prov.tick_interval_s = cfg.get_double("provisioner.tick_interval_s", 60.0);
  sc.prov.tau_vm_s = cfg.get_double("lease.tau_vm_s", 3600.0);
  sc.prov.setup = profile.setup;
  sc.prov.t_forecast_s = cfg.get_double("provisioner.t_forecast_s", 0.0);
  sc.prov.full_recall = cfg.get_bool("provisioner.full_recall", true);
  sc.vertical.enabled = cfg.get_bool("vertical.enabled", true);
  sc.vertical.margin = cfg.get_double("vertical.margin", 0.7);
  sc.vertical.interference = cfg.get_double("vertical.interference", 1.2);
  sc.seed = static_cast<std::uint64_t>(cfg.get_int("sim.seed", 0));
  sc.warmup_intervals = static_cast<int>(cfg.get_int("sim.warmup_intervals", -1));
  sc.oracle_forecast = oracle;
  sc.retrain_interval_ticks = static_cast<int>(cfg.get_int("forecaster.retrain_interval", 60));
  sc.ring_capacity = static_cast<std::size_t>(cfg.get_int("compensator.ring", 5));
  return sc;
}

int cmd_profile(const std::string& samples_path, const std::string& service, double percentile,
                double min_mem, double t_vm, double t_cd, double t_ml, double t_mu,
                long long min_samples, const std::string& out_path) {
  auto samples = load_samples(samples_path, service);
  ProfileOptions opt;
  opt.min_samples = static_cast<std::size_t>(min_samples);
  auto profile = build_profile(service, samples, percentile, min_mem,
                               SetupTimes{t_vm, t_cd, t_ml, t_mu}, opt);
  save_profile(profile, out_path);
  std::printf("%-8s %-12s %-12s %-12s\n", "cores", "family", "ks", "t_p_s");
  for (const auto& [cores, pc] : profile.per_core) {
    std::printf("%-8d %-12s %-12.6f %-12.6f\n", cores,
                dist::family_name(pc.fitted.family).c_str(), pc.fitted.ks,
                pc.percentile_latency);
  }
  for (const auto& w : profile.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "profile written to " << out_path << "\n";
  return 0;
}

int cmd_synth(const CommonArgs& args, const std::string& out_path) {
  Config cfg = load_config(args);
  auto trace = generate_synthetic(synthetic_from_config(cfg));
  write_trace(trace, out_path);
  std::cout << "synthetic trace of " << trace.size() << " intervals written to " << out_path
            << "\n";
  return 0;
}

int cmd_forecast(const CommonArgs& args, bool tune_flag) {
  Config cfg = load_config(args);
  auto trace = trace_from_config(cfg);
  auto window = window_from_config(cfg, trace);
  OutputDir out(args.out_dir);

  double period = cfg.get_double("forecaster.period", 1440.0);
  auto holidays = holidays_from_config(cfg);

  if (tune_flag) {
    std::vector<int> n_grid;
    for (double v : cfg.has("forecaster.n_grid")
                        ? cfg.get_list("forecaster.n_grid")
                        : std::vector<double>{10, 15, 20, 25, 30}) {
      n_grid.push_back(static_cast<int>(v));
    }
    std::vector<std::size_t> w_grid;
    if (cfg.has("forecaster.w_grid")) {
      for (double v : cfg.get_list("forecaster.w_grid")) {
        w_grid.push_back(static_cast<std::size_t>(v));
      }
    } else {
      w_grid = {window.train_len / 2, window.train_len * 3 / 4, window.train_len};
    }
    auto result = tune(trace, window.train_end(), window.validation_len, n_grid, w_grid, period,
                       holidays);
    std::ostringstream csv_text;
    csv_text << "order,window,ok,p95_ape,mae,error\n";
    for (const auto& c : result.cells) {
      csv_text << c.order << "," << c.window << "," << (c.ok ? 1 : 0) << "," << c.p95_ape << ","
               << c.mae << "," << c.error << "\n";
    }
    out.write("tune_report.csv", csv_text.str());
    cfg.set("forecaster.order", std::to_string(result.order));
    cfg.set("forecaster.window", std::to_string(result.window));
    std::cout << "tuned: order " << result.order << ", window " << result.window << " (p95 APE "
              << result.p95_ape << ")\n";
  }

  // Horizon needs setup times: profile is optional for forecasting, so fall
  // back to explicit setup.* keys or a one-interval horizon.
  ExecutionProfile profile;
  profile.setup = SetupTimes{cfg.get_double("setup.t_vm_s", 0.0), cfg.get_double("setup.t_cd_s", 0.0),
                             cfg.get_double("setup.t_ml_s", 0.0), cfg.get_double("setup.t_mu_s", 0.0)};
  auto setup = fit_forecaster(cfg, trace, window, profile);
  int horizon = std::max(1, setup.horizon);

  std::size_t test_start = window.validation_end();
  std::size_t test_end = window.test_end();
  ForecastModel model = setup.model;
  ErrorRing ring(setup.ring);
  std::map<std::int64_t, Forecast> issued;
  std::ostringstream fcsv;
  fcsv << "t,actual,raw,raw_low,raw_upp,compensated\n";
  std::vector<double> err_raw, err_comp, ape_raw, ape_comp;

  long long step = 0;
  for (std::int64_t s = static_cast<std::int64_t>(test_start) - horizon;
       s + horizon < static_cast<std::int64_t>(test_end); ++s, ++step) {
    if (setup.retrain_interval > 0 && step > 0 && step % setup.retrain_interval == 0 &&
        s > model.window_end &&
        s >= static_cast<std::int64_t>(model.window_end - model.window_start)) {
      model = retrain_rolling(model, trace, static_cast<std::size_t>(s));
    }
    auto prev = issued.find(s - 1);
    if (prev != issued.end()) {
      push_error(ring, static_cast<double>(trace.counts[static_cast<std::size_t>(s - 1)]),
                 prev->second.y);
    }
    std::int64_t target = s + horizon;
    Forecast f = predict(model, target);
    issued[target] = f;
    double comp_y = compensate(setup.compensator, f, ring).y;
    if (target >= static_cast<std::int64_t>(test_start)) {
      double actual = static_cast<double>(trace.counts[static_cast<std::size_t>(target)]);
      fcsv << target << "," << actual << "," << f.y << "," << f.y_low << "," << f.y_upp << ","
           << comp_y << "\n";
      err_raw.push_back(std::fabs(f.y - actual));
      err_comp.push_back(std::fabs(comp_y - actual));
      ape_raw.push_back(err_raw.back() / std::max(1.0, actual));
      ape_comp.push_back(err_comp.back() / std::max(1.0, actual));
    }
  }
  out.write("forecast.csv", fcsv.str());

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  double mae_raw = mean(err_raw), mae_comp = mean(err_comp);
  std::ostringstream metrics;
  metrics << "{\n"
          << "  \"mae_raw\": " << mae_raw << ",\n"
          << "  \"mae_compensated\": " << mae_comp << ",\n"
          << "  \"p95_ape_raw\": " << math::quantile_type7(ape_raw, 0.95) << ",\n"
          << "  \"p95_ape_compensated\": " << math::quantile_type7(ape_comp, 0.95) << ",\n"
          << "  \"points\": " << err_raw.size() << "\n}\n";
  out.write("metrics.json", metrics.str());

  // Cumulative APE distributions (sorted independently per series).
  std::sort(ape_raw.begin(), ape_raw.end());
  std::sort(ape_comp.begin(), ape_comp.end());
  std::ostringstream cum;
  cum << "cum_fraction,ape_raw,ape_compensated\n";
  for (std::size_t i = 0; i < ape_raw.size(); ++i) {
    cum << (static_cast<double>(i + 1) / static_cast<double>(ape_raw.size())) << "," << ape_raw[i]
        << "," << ape_comp[i] << "\n";
  }
  out.write("cumulative_ape.csv", cum.str());
  out.finalize();
  std::cout << "mae raw " << mae_raw << ", compensated " << mae_comp << "; outputs in "
            << args.out_dir << "\n";
  return 0;
}

int cmd_simulate(const CommonArgs& args, bool oracle, bool sweep, double require_compliance) {
  Config cfg = load_config(args);
  auto trace = trace_from_config(cfg);
  auto window = window_from_config(cfg, trace);
  auto profile = profile_from_config(cfg);
  auto catalog = load_catalog(cfg.get_path("catalog.csv"));
  OutputDir out(args.out_dir);

  SimScenario sc = scenario_from_config(cfg, trace, window, profile, catalog, oracle);
  ForecastSetup fsetup;
  if (!oracle) {
    fsetup = fit_forecaster(cfg, trace, window, profile);
    sc.model = fsetup.model;
    sc.compensator = fsetup.compensator;
    sc.ring_capacity = fsetup.ring;
  }

  auto report = run(sc);
  out.write("report.json", report_summary_json(report));
  out.write("requests.csv", requests_csv(report));
  out.write("ticks.csv", ticks_csv(report));
  out.write("timeseries.svg", timeseries_svg(report));

  if (sweep) {
    // One simulation per single-flavor policy plus the greedy selection.
    struct Row {
      std::string policy;
      bool feasible = false;
      double cost = 0.0;
      double compliance = 0.0;
    };
    std::vector<Row> rows(catalog.size());
    std::vector<FlavorCatalog> singles(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      singles[i] = FlavorCatalog{{catalog.at(i)}};
    }
    par::for_each_index(catalog.size(), [&](std::size_t i) {
      rows[i].policy = catalog.at(i).name;
      try {
        SimScenario single = sc;
        single.catalog = &singles[i];
        auto r = run(single);
        rows[i].feasible = true;
        rows[i].cost = r.total_cost;
        rows[i].compliance = r.slo_compliance;
      } catch (const InfeasibleSloError&) {
        rows[i].feasible = false;
      }
    });
    std::ostringstream sweep_csv;
    sweep_csv << "policy,feasible,total_cost,slo_compliance,savings_of_greedy\n";
    sweep_csv << "greedy,1," << report.total_cost << "," << report.slo_compliance << ",0\n";
    for (const auto& row : rows) {
      sweep_csv << row.policy << "," << (row.feasible ? 1 : 0) << ",";
      if (row.feasible) {
        double savings = row.cost > 0.0 ? 1.0 - report.total_cost / row.cost : 0.0;
        sweep_csv << row.cost << "," << row.compliance << "," << savings << "\n";
        std::cout << "flavor " << row.policy << ": cost " << row.cost << " (greedy saves "
                  << (savings * 100.0) << "%)\n";
      } else {
        sweep_csv << "inf,0,\n";
        std::cout << "flavor " << row.policy << ": infeasible\n";
      }
    }
    out.write("sweep_flavors.csv", sweep_csv.str());
  }

  out.finalize();
  std::cout << "compliance " << report.slo_compliance << ", total cost " << report.total_cost
            << ", outputs in " << args.out_dir << "\n";
  if (require_compliance >= 0.0 && report.slo_compliance < require_compliance) {
    std::cerr << "compliance " << report.slo_compliance << " below required "
              << require_compliance << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SLO-aware autoscaling engine and cluster simulator"};
  app.require_subcommand(1);

  // profile
  auto* profile_cmd = app.add_subcommand("profile", "fit execution-time distributions");
  std::string samples_path, service = "service", profile_out = "profile.json";
  double percentile = 0.95, min_mem = 0.0, t_vm = 0, t_cd = 0, t_ml = 0, t_mu = 0;
  long long min_samples = 30;
  profile_cmd->add_option("--samples", samples_path, "cores,latency_seconds CSV")->required();
  profile_cmd->add_option("--service", service);
  profile_cmd->add_option("--percentile", percentile);
  profile_cmd->add_option("--min-mem", min_mem, "minimum memory (GB)");
  profile_cmd->add_option("--setup-vm", t_vm, "VM deployment time (s)");
  profile_cmd->add_option("--setup-cd", t_cd, "container download time (s)");
  profile_cmd->add_option("--setup-ml", t_ml, "model load time (s)");
  profile_cmd->add_option("--setup-mu", t_mu, "model unload time (s)");
  profile_cmd->add_option("--min-samples", min_samples);
  profile_cmd->add_option("--out", profile_out);

  CommonArgs fc_args, sim_args, synth_args;
  bool tune_flag = false;
  auto* forecast_cmd = app.add_subcommand("forecast", "rolling forecasts and error metrics");
  forecast_cmd->add_option("--config", fc_args.config_path)->required();
  forecast_cmd->add_option("--set", fc_args.overrides, "override config key=value");
  forecast_cmd->add_option("--out-dir", fc_args.out_dir);
  forecast_cmd->add_flag("--tune", tune_flag, "grid-tune order and window first");

  bool oracle = false, sweep = false;
  double require_compliance = -1.0;
  auto* simulate_cmd = app.add_subcommand("simulate", "replay the trace against the cluster");
  simulate_cmd->add_option("--config", sim_args.config_path)->required();
  simulate_cmd->add_option("--set", sim_args.overrides, "override config key=value");
  simulate_cmd->add_option("--out-dir", sim_args.out_dir);
  simulate_cmd->add_flag("--oracle-forecast", oracle, "feed the provisioner future truth");
  simulate_cmd->add_flag("--sweep-flavors", sweep, "simulate every flavor plus greedy");
  simulate_cmd->add_option("--require-compliance", require_compliance,
                           "exit 1 when compliance falls below this fraction");

  std::string synth_out = "trace.csv";
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic trace");
  synth_cmd->add_option("--config", synth_args.config_path)->required();
  synth_cmd->add_option("--set", synth_args.overrides, "override config key=value");
  synth_cmd->add_option("--out", synth_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (profile_cmd->parsed()) {
      return cmd_profile(samples_path, service, percentile, min_mem, t_vm, t_cd, t_ml, t_mu,
                         min_samples, profile_out);
    }
    if (forecast_cmd->parsed()) return cmd_forecast(fc_args, tune_flag);
    if (simulate_cmd->parsed()) return cmd_simulate(sim_args, oracle, sweep, require_compliance);
    if (synth_cmd->parsed()) return cmd_synth(synth_args, synth_out);
  } catch (const InfeasibleSloError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
