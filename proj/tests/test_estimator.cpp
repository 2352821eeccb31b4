#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "slosim/errors.hpp"
#include "slosim/estimator.hpp"
#include "slosim/rng.hpp"

using namespace slosim;

namespace {

// Profile with exact t_p values pinned per core count (normal with tiny
// sigma so the q95 is within fp noise of mu).
ExecutionProfile profile_with_tp(std::map<int, double> tp_by_cores, double min_mem = 2.0) {
  ExecutionProfile p;
  p.service = "svc";
  p.min_mem_gb = min_mem;
  for (auto [cores, tp] : tp_by_cores) {
    PerCoreFit pc;
    pc.fitted = {dist::Family::Normal, {tp, 1e-9}};
    pc.percentile_latency = tp;
    p.per_core[cores] = pc;
  }
  return p;
}

}  // namespace

TEST_CASE("requests_per_vm floor semantics") {
  auto profile = profile_with_tp({{2, 0.5}, {4, 2.5}});
  SloSpec slo{2.0, 0.95, 2.0};
  CHECK(requests_per_vm({"a", 2, 4.0, 1.0}, profile, slo) == 4);   // floor(2/0.5)
  CHECK(requests_per_vm({"b", 2, 1.0, 1.0}, profile, slo) == 0);   // mem below min_mem
  CHECK(requests_per_vm({"c", 4, 4.0, 1.0}, profile, slo) == 0);   // t_p > lambda
  CHECK(requests_per_vm({"d", 8, 4.0, 1.0}, profile, slo) == 0);   // unprofiled cores
}

TEST_CASE("select_flavor minimizes cost per request") {
  auto profile = profile_with_tp({{2, 0.5}, {4, 1.0}});
  SloSpec slo{2.0, 0.95, 2.0};
  FlavorCatalog catalog{{{"A", 2, 4.0, 4.0}, {"B", 4, 4.0, 3.0}}};
  // A: n_req 4, cpr 1.0; B: n_req 2, cpr 1.5.
  auto choice = select_flavor(catalog, profile, slo);
  CHECK(choice.index == 0);
  CHECK(choice.n_req == 4);
  CHECK(choice.cpr == doctest::Approx(1.0));
}

TEST_CASE("cpr ties prefer the smaller deployment cost, then the first index") {
  auto profile = profile_with_tp({{2, 0.5}, {4, 1.0}});
  SloSpec slo{2.0, 0.95, 2.0};
  // A: n_req 4, cost 4, cpr 1.0; B: n_req 2, cost 2, cpr 1.0 -> B (cheaper).
  FlavorCatalog catalog{{{"A", 2, 4.0, 4.0}, {"B", 4, 4.0, 2.0}}};
  CHECK(select_flavor(catalog, profile, slo).index == 1);

  // Full tie: identical cpr and cost -> first index.
  FlavorCatalog twin{{{"A", 2, 4.0, 4.0}, {"B", 2, 4.0, 4.0}}};
  CHECK(select_flavor(twin, profile, slo).index == 0);
}

TEST_CASE("infeasible catalogs raise with per-flavor reasons") {
  auto profile = profile_with_tp({{2, 2.5}});
  SloSpec slo{2.0, 0.95, 2.0};
  FlavorCatalog catalog{{{"slow", 2, 4.0, 1.0}, {"tiny", 2, 1.0, 1.0}}};
  CHECK_THROWS_WITH_AS(select_flavor(catalog, profile, slo), doctest::Contains("slow"),
                       InfeasibleSloError);
  auto feas = flavor_feasibility(catalog, profile, slo);
  CHECK(feas[0].reason == "t_p exceeds the SLO bound");
  CHECK(feas[1].reason == "memory below min_mem");
}

TEST_CASE("vm_count ceiling semantics") {
  CHECK(vm_count(10.0, 4) == 3);
  CHECK(vm_count(0.0, 4) == 0);
  CHECK(vm_count(8.0, 4) == 2);
  CHECK_THROWS_AS(vm_count(5.0, 0), RangeError);
  CHECK_THROWS_AS(vm_count(-1.0, 2), RangeError);
}

TEST_CASE("exact divisibility satisfies the additive-factor bound with slack") {
  auto profile = profile_with_tp({{2, 0.5}});
  SloSpec slo{2.0, 0.95, 2.0};
  FlavorCatalog catalog{{{"A", 2, 4.0, 1.0}}};
  auto res = estimate(catalog, profile, slo, 8.0);
  CHECK(res.alpha == 2);
  CHECK(res.greedy_cost == doctest::Approx(2.0));
  CHECK(res.greedy_cost < res.lower_bound_cost + catalog.at(res.i_star).cost);
}

TEST_CASE("brute-force oracle: mixed flavors can beat the greedy single flavor") {
  // A: cost 5, n_req 3 (t_p 0.6 < 2/3); B: cost 2, n_req 1.
  auto profile = profile_with_tp({{2, 0.6}, {1, 1.9}});
  SloSpec slo{2.0, 0.95, 1.0};
  FlavorCatalog catalog{{{"A", 2, 4.0, 5.0}, {"B", 1, 4.0, 2.0}}};
  auto res = estimate(catalog, profile, slo, 4.0);
  CHECK(res.i_star == 0);  // cpr A = 1.667 < cpr B = 2.0
  CHECK(res.alpha == 2);
  CHECK(res.greedy_cost == doctest::Approx(10.0));
  double optimal = brute_force_optimal(catalog, profile, slo, 4);
  CHECK(optimal == doctest::Approx(7.0));  // 1 x A + 1 x B
  CHECK(res.greedy_cost < res.lower_bound_cost + catalog.at(res.i_star).cost);
  CHECK(res.lower_bound_cost + catalog.at(res.i_star).cost == doctest::Approx(4.0 / 3.0 * 5.0 + 5.0));
}

TEST_CASE("brute force degenerate cases") {
  auto profile = profile_with_tp({{2, 0.5}});
  SloSpec slo{2.0, 0.95, 2.0};
  FlavorCatalog catalog{{{"A", 2, 4.0, 1.5}}};
  CHECK(brute_force_optimal(catalog, profile, slo, 0) == 0.0);
  // Single feasible flavor: the oracle equals the greedy result exactly.
  auto res = estimate(catalog, profile, slo, 10.0);
  CHECK(brute_force_optimal(catalog, profile, slo, 10) == doctest::Approx(res.greedy_cost));
}

TEST_CASE("oracle scale guard") {
  auto profile = profile_with_tp({{1, 1.9}, {2, 1.9}, {4, 1.9}, {8, 1.9}});
  SloSpec slo{2.0, 0.95, 1.0};
  FlavorCatalog catalog{{{"a", 1, 4, 1}, {"b", 2, 4, 1}, {"c", 4, 4, 1}, {"d", 8, 4, 1}}};
  CHECK_THROWS_AS(brute_force_optimal(catalog, profile, slo, 1000, 1e6), OracleScaleError);
}

TEST_CASE("randomized instances: additive bound holds and greedy >= oracle") {
  Rng rng(2024, 0);
  for (int inst = 0; inst < 100; ++inst) {
    std::size_t m = 1 + static_cast<std::size_t>(rng.next_u64() % 6);
    FlavorCatalog catalog;
    std::map<int, double> tps;
    for (std::size_t i = 0; i < m; ++i) {
      int cores = static_cast<int>(i) + 1;
      tps[cores] = 0.1 + 1.9 * rng.next_u01();
      catalog.flavors.push_back(
          {"f" + std::to_string(i), cores, 4.0, 0.5 + 9.5 * rng.next_u01()});
    }
    auto profile = profile_with_tp(tps);
    SloSpec slo{2.0, 0.95, 1.0};
    long long y = static_cast<long long>(rng.next_u64() % 40);

    EstimationResult res;
    try {
      res = estimate(catalog, profile, slo, static_cast<double>(y));
    } catch (const InfeasibleSloError&) {
      continue;
    }
    CHECK(res.greedy_cost < res.lower_bound_cost + catalog.at(res.i_star).cost);
    try {
      double optimal = brute_force_optimal(catalog, profile, slo, y, 2e6);
      CHECK(res.greedy_cost >= optimal - 1e-9);
    } catch (const OracleScaleError&) {
    }
  }
}

TEST_CASE("flavor choice is independent of the workload; alpha is monotone") {
  auto profile = profile_with_tp({{2, 0.45}, {4, 0.3}, {8, 0.21}});
  SloSpec slo{2.0, 0.95, 2.0};
  FlavorCatalog catalog{{{"s", 2, 4.0, 0.8}, {"m", 4, 8.0, 1.4}, {"l", 8, 16.0, 3.0}}};
  auto base = select_flavor(catalog, profile, slo);
  long long prev_alpha = 0;
  for (double y = 0.0; y < 300.0; y += 7.3) {
    auto res = estimate(catalog, profile, slo, y);
    CHECK(res.i_star == base.index);
    CHECK(res.alpha >= prev_alpha);
    prev_alpha = res.alpha;
  }
}

TEST_CASE("catalog CSV loader validates") {
  {
    std::ofstream out("catalog_test.csv");
    out << "name,cores,mem_gb,cost_per_period\nt3.small,2,2,0.0208\nt3.xlarge,4,16,0.1664\n";
  }
  auto catalog = load_catalog("catalog_test.csv");
  std::remove("catalog_test.csv");
  CHECK(catalog.size() == 2);
  CHECK(catalog.at(0).name == "t3.small");
  CHECK(catalog.at(1).cores == 4);

  {
    std::ofstream out("catalog_dup.csv");
    out << "name,cores,mem_gb,cost_per_period\nx,2,2,0.1\nx,4,4,0.2\n";
  }
  CHECK_THROWS_AS(load_catalog("catalog_dup.csv"), ParseError);
  std::remove("catalog_dup.csv");
}
