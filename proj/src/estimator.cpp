#include "slosim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "slosim/csv.hpp"
#include "slosim/errors.hpp"

namespace slosim {

FlavorCatalog load_catalog(const std::string& path) {
  csv::Table t = csv::read_file(path);
  std::size_t name_col = t.column("name", path);
  std::size_t cores_col = t.column("cores", path);
  std::size_t mem_col = t.column("mem_gb", path);
  std::size_t cost_col = t.column("cost_per_period", path);
  FlavorCatalog catalog;
  std::set<std::string> names;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t line = t.line_numbers[r];
    const auto& row = t.rows[r];
    if (row.size() <= std::max({name_col, cores_col, mem_col, cost_col})) {
      throw ParseError(path + ": line " + std::to_string(line) + ": too few columns");
    }
    VmFlavor f;
    f.name = row[name_col];
    f.cores = static_cast<int>(csv::parse_int(row[cores_col], line, path));
    f.mem_gb = csv::parse_double(row[mem_col], line, path);
    f.cost = csv::parse_double(row[cost_col], line, path);
    if (f.cores < 1 || !(f.mem_gb > 0.0) || !(f.cost > 0.0)) {
      throw ParseError(path + ": line " + std::to_string(line) + ": invalid flavor fields");
    }
    if (!names.insert(f.name).second) {
      throw ParseError(path + ": line " + std::to_string(line) + ": duplicate flavor name '" +
                       f.name + "'");
    }
    catalog.flavors.push_back(std::move(f));
  }
  if (catalog.flavors.empty()) throw ParseError(path + ": no flavors");
  return catalog;
}

int requests_per_vm(const VmFlavor& flavor, const ExecutionProfile& profile, const SloSpec& slo) {
  if (flavor.mem_gb < profile.min_mem_gb || flavor.mem_gb < slo.min_mem_gb) return 0;
  if (!profile.has_cores(flavor.cores)) return 0;
  double tp = profile.t_p(flavor.cores);
  if (!(tp > 0.0)) return 0;
  return static_cast<int>(std::floor(slo.lambda_s / tp));
}

std::vector<FlavorFeasibility> flavor_feasibility(const FlavorCatalog& catalog,
                                                  const ExecutionProfile& profile,
                                                  const SloSpec& slo) {
  std::vector<FlavorFeasibility> out;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const VmFlavor& f = catalog.at(i);
    FlavorFeasibility fe;
    fe.index = i;
    if (f.mem_gb < profile.min_mem_gb || f.mem_gb < slo.min_mem_gb) {
      fe.reason = "memory below min_mem";
    } else if (!profile.has_cores(f.cores)) {
      fe.reason = "unprofiled core count " + std::to_string(f.cores);
    } else {
      fe.n_req = requests_per_vm(f, profile, slo);
      if (fe.n_req < 1) {
        fe.reason = "t_p exceeds the SLO bound";
      } else {
        fe.cpr = f.cost / fe.n_req;
      }
    }
    out.push_back(std::move(fe));
  }
  return out;
}

FlavorChoice select_flavor(const FlavorCatalog& catalog, const ExecutionProfile& profile,
                           const SloSpec& slo) {
  FlavorChoice best;
  double best_cpr = std::numeric_limits<double>::infinity();
  double best_cost = std::numeric_limits<double>::infinity();
  bool found = false;
  auto feas = flavor_feasibility(catalog, profile, slo);
  for (const auto& fe : feas) {
    if (fe.n_req < 1) continue;
    double cost = catalog.at(fe.index).cost;
    // Strict comparisons keep the first flavor on full ties.
    if (fe.cpr < best_cpr || (fe.cpr == best_cpr && cost < best_cost)) {
      best = FlavorChoice{fe.index, fe.n_req, fe.cpr};
      best_cpr = fe.cpr;
      best_cost = cost;
      found = true;
    }
  }
  if (!found) {
    std::ostringstream msg;
    msg << "no flavor can satisfy the SLO:";
    for (const auto& fe : feas) {
      msg << " [" << catalog.at(fe.index).name << ": " << fe.reason << "]";
    }
    throw InfeasibleSloError(msg.str());
  }
  return best;
}

long long vm_count(double y_prime, int n_req) {
  if (n_req < 1) throw RangeError("vm_count: n_req must be >= 1");
  if (y_prime < 0.0) throw RangeError("vm_count: workload must be >= 0");
  if (y_prime == 0.0) return 0;
  return static_cast<long long>(std::ceil(y_prime / static_cast<double>(n_req)));
}

EstimationResult estimate(const FlavorCatalog& catalog, const ExecutionProfile& profile,
                          const SloSpec& slo, double y_prime) {
  FlavorChoice choice = select_flavor(catalog, profile, slo);
  EstimationResult res;
  res.i_star = choice.index;
  res.n_req = choice.n_req;
  res.cpr = choice.cpr;
  res.alpha = vm_count(y_prime, choice.n_req);
  double cost = catalog.at(choice.index).cost;
  res.lower_bound_cost = y_prime / static_cast<double>(choice.n_req) * cost;
  res.greedy_cost = static_cast<double>(res.alpha) * cost;
  return res;
}

namespace {

void enumerate(const std::vector<std::pair<double, int>>& options,  // (cost, n_req)
               const std::vector<long long>& bounds, std::size_t i, long long capacity,
               double cost, long long target, double& best) {
  if (capacity >= target) {
    best = std::min(best, cost);
    return;
  }
  if (i == options.size()) return;
  if (cost >= best) return;  // cannot improve: costs are positive
  for (long long a = 0; a <= bounds[i]; ++a) {
    enumerate(options, bounds, i + 1, capacity + a * options[i].second,
              cost + static_cast<double>(a) * options[i].first, target, best);
  }
}

}  // namespace

double brute_force_optimal(const FlavorCatalog& catalog, const ExecutionProfile& profile,
                           const SloSpec& slo, long long y_prime, double max_space) {
  if (y_prime < 0) throw RangeError("brute_force_optimal: workload must be >= 0");
  if (y_prime == 0) return 0.0;
  std::vector<std::pair<double, int>> options;
  std::vector<long long> bounds;
  double space = 1.0;
  for (const auto& f : catalog.flavors) {
    int n_req = requests_per_vm(f, profile, slo);
    if (n_req < 1) continue;
    long long bound = (y_prime + n_req - 1) / n_req;
    options.emplace_back(f.cost, n_req);
    bounds.push_back(bound);
    space *= static_cast<double>(bound + 1);
  }
  if (options.empty()) throw InfeasibleSloError("brute_force_optimal: no feasible flavor");
  if (space > max_space) {
    throw OracleScaleError("brute_force_optimal: search space " + std::to_string(space) +
                           " exceeds limit");
  }
  double best = std::numeric_limits<double>::infinity();
  enumerate(options, bounds, 0, 0, 0.0, y_prime, best);
  return best;
}

}  // namespace slosim
