#pragma once

#include <string>
#include <vector>

#include "slosim/profiler.hpp"

namespace slosim {

struct VmFlavor {
  std::string name;
  int cores = 1;
  double mem_gb = 0.0;
  double cost = 0.0;  // per lease period
};

struct FlavorCatalog {
  std::vector<VmFlavor> flavors;

  std::size_t size() const { return flavors.size(); }
  const VmFlavor& at(std::size_t i) const { return flavors[i]; }
};

// CSV: name,cores,mem_gb,cost_per_period
FlavorCatalog load_catalog(const std::string& path);

struct SloSpec {
  double lambda_s = 0.0;  // latency bound
  double percentile = 0.95;
  double min_mem_gb = 0.0;
};

// Requests one VM serves sequentially within one lambda window while each
// meets the SLO; 0 encodes infeasible (memory, latency, or unprofiled cores).
int requests_per_vm(const VmFlavor& flavor, const ExecutionProfile& profile, const SloSpec& slo);

struct FlavorFeasibility {
  std::size_t index = 0;
  int n_req = 0;
  double cpr = 0.0;
  std::string reason;  // empty when feasible
};

std::vector<FlavorFeasibility> flavor_feasibility(const FlavorCatalog& catalog,
                                                  const ExecutionProfile& profile,
                                                  const SloSpec& slo);

struct FlavorChoice {
  std::size_t index = 0;
  int n_req = 0;
  double cpr = 0.0;
};

// Greedy selection: minimum cost per request; ties prefer the smaller
// deployment cost, then the smaller index. Throws InfeasibleSloError with the
// per-flavor reasons when nothing qualifies.
FlavorChoice select_flavor(const FlavorCatalog& catalog, const ExecutionProfile& profile,
                           const SloSpec& slo);

// ceil(y' / n_req); zero workload needs zero VMs.
long long vm_count(double y_prime, int n_req);

struct EstimationResult {
  std::size_t i_star = 0;
  int n_req = 0;
  double cpr = 0.0;
  long long alpha = 0;
  double lower_bound_cost = 0.0;  // rational optimum (y'/n_req) * cost
  double greedy_cost = 0.0;       // alpha * cost; < lower bound + cost by the ceil argument
};

EstimationResult estimate(const FlavorCatalog& catalog, const ExecutionProfile& profile,
                          const SloSpec& slo, double y_prime);

// Exhaustive mixed-flavor optimum; the test oracle for the greedy heuristic.
// Throws OracleScaleError when the enumeration space exceeds max_space.
double brute_force_optimal(const FlavorCatalog& catalog, const ExecutionProfile& profile,
                           const SloSpec& slo, long long y_prime, double max_space = 1e7);

}  // namespace slosim
