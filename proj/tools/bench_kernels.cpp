// Benchmark of the OpenMP kernels against their serial reference. Both paths
// share the fixed-chunk combine order, so the outputs are asserted identical
// before any timing is reported.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "slosim/compensator.hpp"
#include "slosim/distributions.hpp"
#include "slosim/forecaster.hpp"
#include "slosim/parallel.hpp"
#include "slosim/profiler.hpp"
#include "slosim/rng.hpp"
#include "slosim/trace.hpp"

using namespace slosim;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const std::string& name, double serial_s, double parallel_s) {
  std::printf("%-28s %10.4f ms %10.4f ms %8.2fx\n", name.c_str(), serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main() {
  std::printf("threads available: %d (OpenMP %s)\n\n", par::max_threads(),
              par::openmp_available() ? "on" : "off");
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  Rng rng(1, 0);
  std::vector<double> samples(2'000'000);
  for (auto& x : samples) x = 0.05 + rng.next_u01();

  {
    dist::Fitted law{dist::Family::Gamma, {2.0, 0.3}};
    double a = 0, b = 0;
    auto serial = [&] {
      par::ScopedSerial s;
      a = dist::log_likelihood(law, samples);
    };
    auto parallel = [&] { b = dist::log_likelihood(law, samples); };
    double ts = time_of(serial, 3), tp = time_of(parallel, 3);
    if (a != b) {
      std::fprintf(stderr, "FATAL: log-likelihood paths differ\n");
      return 1;
    }
    row("gamma log-likelihood", ts, tp);
  }

  {
    dist::Fitted law{dist::Family::Weibull, {1.4, 0.8}};
    double a = 0, b = 0;
    auto serial = [&] {
      par::ScopedSerial s;
      a = ks_statistic(samples, law);
    };
    auto parallel = [&] { b = ks_statistic(samples, law); };
    double ts = time_of(serial, 3), tp = time_of(parallel, 3);
    if (a != b) {
      std::fprintf(stderr, "FATAL: K-S paths differ\n");
      return 1;
    }
    row("K-S statistic scan", ts, tp);
  }

  {
    std::vector<double> sub(samples.begin(), samples.begin() + 200'000);
    dist::Fitted a, b;
    auto serial = [&] {
      par::ScopedSerial s;
      a = dist::fit_mle(dist::Family::Weibull, sub);
    };
    auto parallel = [&] { b = dist::fit_mle(dist::Family::Weibull, sub); };
    double ts = time_of(serial, 3), tp = time_of(parallel, 3);
    if (a.params != b.params) {
      std::fprintf(stderr, "FATAL: weibull MLE paths differ\n");
      return 1;
    }
    row("weibull MLE (Newton)", ts, tp);
  }

  {
    SyntheticSpec spec;
    spec.base_level = 100.0;
    spec.trend = TrendParams{80.0, 0.002, 2000.0};
    spec.harmonics = {{1440.0, 30.0, 10.0}};
    spec.noise_sigma = 4.0;
    spec.seed = 9;
    spec.length = 6000;
    auto trace = generate_synthetic(spec);
    std::string a, b;
    auto serial = [&] {
      par::ScopedSerial s;
      a = to_json(fit_range(trace, 0, 6000, {{1440.0, 20}}));
    };
    auto parallel = [&] { b = to_json(fit_range(trace, 0, 6000, {{1440.0, 20}})); };
    double ts = time_of(serial, 2), tp = time_of(parallel, 2);
    // t_forecast_s carries wall time; strip it before comparing.
    auto strip = [](std::string s) {
      auto pos = s.find("\"t_forecast_s\"");
      if (pos != std::string::npos) s.erase(pos, s.find('\n', pos) - pos);
      return s;
    };
    if (strip(a) != strip(b)) {
      std::fprintf(stderr, "FATAL: forecaster fit paths differ\n");
      return 1;
    }
    row("forecaster fit (W=6000,N=20)", ts, tp);
  }

  {
    Rng drng(3, 1);
    Dataset data;
    data.n_features = 8;
    for (int r = 0; r < 3000; ++r) {
      double y = 100.0 * drng.next_u01();
      data.x.push_back(y);
      data.x.push_back(y + 5.0);
      data.x.push_back(y - 5.0);
      for (int e = 0; e < 5; ++e) data.x.push_back(30.0 * drng.next_u01() - 15.0);
      data.y.push_back(y + (data.x[static_cast<std::size_t>(r) * 8 + 3] > 5.0 ? 25.0 : 0.0));
    }
    std::string a, b;
    auto serial = [&] {
      par::ScopedSerial s;
      a = to_json(train(data, CompKind::BoostedTrees));
    };
    auto parallel = [&] { b = to_json(train(data, CompKind::BoostedTrees)); };
    double ts = time_of(serial, 2), tp = time_of(parallel, 2);
    if (a != b) {
      std::fprintf(stderr, "FATAL: boosted-tree paths differ\n");
      return 1;
    }
    row("boosted trees (3000x8)", ts, tp);
  }

  std::printf("\nall kernel outputs bit-identical across paths\n");
  return 0;
}
