#include "slosim/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "slosim/csv.hpp"
#include "slosim/errors.hpp"
#include "slosim/parallel.hpp"

namespace slosim {

dist::Fitted fit_mle(const LatencySamples& samples, dist::Family family,
                     const ProfileOptions& opt) {
  if (samples.samples.size() < opt.min_samples) {
    throw InsufficientDataError("fit_mle: " + std::to_string(samples.samples.size()) +
                                " samples below floor " + std::to_string(opt.min_samples));
  }
  return dist::fit_mle(family, samples.samples, opt.fit);
}

double ks_statistic_cdf(std::span<const double> samples,
                        const std::function<double(double)>& cdf) {
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  // The supremum is attained at a step of the empirical CDF, so it suffices
  // to check both sides of every sorted sample.
  auto [idx, d] = par::argmax_indexed(xs.size(), [&](std::size_t i) {
    double f0 = cdf(xs[i]);
    double below = static_cast<double>(i) / n;
    double above = static_cast<double>(i + 1) / n;
    return std::max(std::fabs(f0 - above), std::fabs(f0 - below));
  });
  (void)idx;
  return d;
}

double ks_statistic(std::span<const double> samples, const dist::Fitted& fitted) {
  return ks_statistic_cdf(samples, [&](double x) { return dist::cdf(fitted, x); });
}

double ks_statistic(const LatencySamples& samples, const dist::Fitted& fitted) {
  return ks_statistic(std::span<const double>(samples.samples), fitted);
}

dist::Fitted rank_and_select(const LatencySamples& samples, const ProfileOptions& opt) {
  const auto& xs = samples.samples;
  if (xs.empty()) throw ProfilingError("rank_and_select: empty sample");
  if (std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs.front(); })) {
    throw ProfilingError(
        "rank_and_select: degenerate samples (all equal); no family yields a meaningful fit");
  }

  // Families fit independently (parallel slots); selection scans in fixed
  // order so the result does not depend on completion order.
  constexpr std::size_t kN = dist::kAllFamilies.size();
  std::array<std::optional<dist::Fitted>, kN> fits;
  std::array<std::string, kN> failures;
  par::for_each_index(kN, [&](std::size_t i) {
    try {
      dist::Fitted f = fit_mle(samples, dist::kAllFamilies[i], opt);
      f.ks = ks_statistic(xs, f);
      fits[i] = std::move(f);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  const dist::Fitted* best = nullptr;
  for (std::size_t i = 0; i < kN; ++i) {
    if (!fits[i]) continue;
    const dist::Fitted& f = *fits[i];
    if (!best) {
      best = &f;
      continue;
    }
    // Rank by D_n; ties prefer fewer parameters, then family name. Enum order
    // is alphabetical, so first-wins covers the name tie-break.
    if (f.ks < best->ks ||
        (f.ks == best->ks &&
         dist::family_param_count(f.family) < dist::family_param_count(best->family))) {
      best = &f;
    }
  }
  if (!best) {
    std::ostringstream msg;
    msg << "rank_and_select: every family failed:";
    for (std::size_t i = 0; i < kN; ++i) {
      msg << " [" << dist::family_name(dist::kAllFamilies[i]) << ": " << failures[i] << "]";
    }
    throw ProfilingError(msg.str());
  }
  return *best;
}

double percentile_latency(const dist::Fitted& fitted, double q) {
  return dist::quantile(fitted, q);
}

std::vector<LatencySamples> load_samples(const std::string& path, const std::string& service) {
  csv::Table t = csv::read_file(path);
  std::size_t cores_col = t.column("cores", path);
  std::size_t lat_col = t.column("latency_seconds", path);
  std::map<int, LatencySamples> by_cores;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t line = t.line_numbers[r];
    const auto& row = t.rows[r];
    if (row.size() <= std::max(cores_col, lat_col)) {
      throw ParseError(path + ": line " + std::to_string(line) + ": too few columns");
    }
    long long cores = csv::parse_int(row[cores_col], line, path);
    double latency = csv::parse_double(row[lat_col], line, path);
    if (cores < 1) throw ParseError(path + ": line " + std::to_string(line) + ": cores must be >= 1");
    if (!(latency > 0.0)) {
      throw ParseError(path + ": line " + std::to_string(line) + ": latency must be > 0");
    }
    auto [it, fresh] = by_cores.try_emplace(static_cast<int>(cores));
    if (fresh) {
      it->second.service = service;
      it->second.cores = static_cast<int>(cores);
    }
    it->second.samples.push_back(latency);
  }
  std::vector<LatencySamples> out;
  out.reserve(by_cores.size());
  for (auto& [cores, s] : by_cores) out.push_back(std::move(s));
  return out;
}

ExecutionProfile build_profile(const std::string& service,
                               const std::vector<LatencySamples>& samples, double percentile,
                               double min_mem_gb, const SetupTimes& setup,
                               const ProfileOptions& opt) {
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw RangeError("profile percentile must lie in (0,1)");
  }
  ExecutionProfile profile;
  profile.service = service;
  profile.percentile = percentile;
  profile.min_mem_gb = min_mem_gb;
  profile.setup = setup;
  for (const auto& s : samples) {
    dist::Fitted fit = rank_and_select(s, opt);
    double tp = percentile_latency(fit, percentile);
    profile.per_core[s.cores] = PerCoreFit{std::move(fit), tp};
  }
  // Speedup should be monotone in the core count; a violation is worth a
  // warning but does not invalidate the profile.
  double prev_tp = 0.0;
  int prev_cores = 0;
  for (const auto& [cores, pc] : profile.per_core) {
    if (prev_cores > 0 && pc.percentile_latency > prev_tp) {
      std::ostringstream w;
      w << "t_p increases from " << prev_cores << " to " << cores << " cores (" << prev_tp
        << " -> " << pc.percentile_latency << " s)";
      profile.warnings.push_back(w.str());
    }
    prev_tp = pc.percentile_latency;
    prev_cores = cores;
  }
  return profile;
}

namespace {
using nlohmann::json;
}

std::string to_json(const ExecutionProfile& p) {
  json j;
  j["service"] = p.service;
  j["percentile"] = p.percentile;
  j["min_mem_gb"] = p.min_mem_gb;
  j["setup_times_s"] = {{"vm", p.setup.vm_s}, {"cd", p.setup.cd_s}, {"ml", p.setup.ml_s},
                        {"mu", p.setup.mu_s}};
  j["per_core"] = json::array();
  for (const auto& [cores, pc] : p.per_core) {
    j["per_core"].push_back({{"cores", cores},
                             {"family", dist::family_name(pc.fitted.family)},
                             {"params", pc.fitted.params},
                             {"ks", pc.fitted.ks},
                             {"t_p_s", pc.percentile_latency}});
  }
  if (!p.warnings.empty()) j["warnings"] = p.warnings;
  return j.dump(2);
}

ExecutionProfile profile_from_json(const std::string& text) {
  json j = json::parse(text);
  ExecutionProfile p;
  p.service = j.at("service").get<std::string>();
  p.percentile = j.at("percentile").get<double>();
  p.min_mem_gb = j.at("min_mem_gb").get<double>();
  const auto& st = j.at("setup_times_s");
  p.setup = SetupTimes{st.at("vm").get<double>(), st.at("cd").get<double>(),
                       st.at("ml").get<double>(), st.at("mu").get<double>()};
  for (const auto& e : j.at("per_core")) {
    PerCoreFit pc;
    pc.fitted.family = dist::family_from_name(e.at("family").get<std::string>());
    pc.fitted.params = e.at("params").get<std::vector<double>>();
    pc.fitted.ks = e.at("ks").get<double>();
    pc.percentile_latency = e.at("t_p_s").get<double>();
    p.per_core[e.at("cores").get<int>()] = std::move(pc);
  }
  if (j.contains("warnings")) p.warnings = j.at("warnings").get<std::vector<std::string>>();
  return p;
}

void save_profile(const ExecutionProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << to_json(profile) << "\n";
}

ExecutionProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return profile_from_json(ss.str());
}

}  // namespace slosim
