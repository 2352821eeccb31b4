#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "slosim/distributions.hpp"

namespace slosim {

struct LatencySamples {
  std::string service;
  int cores = 1;
  std::vector<double> samples;  // seconds, all > 0
};

struct ProfileOptions {
  std::size_t min_samples = 30;  // fitting floor
  dist::FitOptions fit;
};

struct SetupTimes {
  double vm_s = 0.0;  // VM deployment
  double cd_s = 0.0;  // container download
  double ml_s = 0.0;  // model load
  double mu_s = 0.0;  // model unload; negligible by default

  double total_setup_s() const { return vm_s + cd_s + ml_s; }
};

struct PerCoreFit {
  dist::Fitted fitted;
  double percentile_latency = 0.0;  // t_p at the profile percentile
};

// Execution-time profile of one prediction service across core counts.
// Consumers move only along profiled core counts; there is no interpolation.
struct ExecutionProfile {
  std::string service;
  double percentile = 0.95;
  double min_mem_gb = 0.0;
  SetupTimes setup;
  std::map<int, PerCoreFit> per_core;
  std::vector<std::string> warnings;

  bool has_cores(int cores) const { return per_core.count(cores) > 0; }
  double t_p(int cores) const { return per_core.at(cores).percentile_latency; }
};

// MLE fit with the sample floor enforced; see dist::fit_mle for the numerics.
dist::Fitted fit_mle(const LatencySamples& samples, dist::Family family,
                     const ProfileOptions& opt = {});

// Exact one-sample Kolmogorov-Smirnov statistic: the supremum over both sides
// of every empirical-CDF step.
double ks_statistic(const LatencySamples& samples, const dist::Fitted& fitted);
double ks_statistic(std::span<const double> samples, const dist::Fitted& fitted);
double ks_statistic_cdf(std::span<const double> samples,
                        const std::function<double(double)>& cdf);

// Fits every supported family, ranks by K-S statistic, returns the best fit
// (ties: fewer parameters, then family name). Throws ProfilingError when every
// family fails, listing the per-family reasons.
dist::Fitted rank_and_select(const LatencySamples& samples, const ProfileOptions& opt = {});

// Inverse CDF of the fitted family at q; throws RangeError outside (0,1).
double percentile_latency(const dist::Fitted& fitted, double q);

// Groups rows of a `cores,latency_seconds` CSV by core count.
std::vector<LatencySamples> load_samples(const std::string& path, const std::string& service);

ExecutionProfile build_profile(const std::string& service,
                               const std::vector<LatencySamples>& samples, double percentile,
                               double min_mem_gb, const SetupTimes& setup,
                               const ProfileOptions& opt = {});

std::string to_json(const ExecutionProfile& profile);
ExecutionProfile profile_from_json(const std::string& text);
void save_profile(const ExecutionProfile& profile, const std::string& path);
ExecutionProfile load_profile(const std::string& path);

}  // namespace slosim
