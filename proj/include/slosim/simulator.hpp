#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "slosim/compensator.hpp"
#include "slosim/estimator.hpp"
#include "slosim/forecaster.hpp"
#include "slosim/provisioner.hpp"
#include "slosim/trace.hpp"

namespace slosim {

struct VerticalPolicy {
  bool enabled = true;
  double margin = 0.7;             // release a core when window p95 < margin * lambda
  double interference = 1.2;       // service multiplier with co-located batch jobs
  double check_interval_s = 5.0;
};

struct RequestRecord {
  long long id = 0;
  double arrival_s = 0.0;
  double start_s = -1.0;
  double end_s = -1.0;
  int vm = -1;
  double latency_s = -1.0;
  double service_s = 0.0;
  bool slo_hit = false;
  bool served = false;
  bool interfered = false;
};

struct TickRecord {
  TickActions actions;
  double forecast_per_interval = 0.0;
  double actual_per_interval = -1.0;  // -1 outside the arrival segment
  int warm_vms = 0;
  int live_vms = 0;
  int total_active_cores = 0;
};

struct SimulationReport {
  std::vector<RequestRecord> requests;
  std::vector<TickRecord> ticks;
  long long slo_hits = 0;
  long long slo_misses = 0;
  double slo_compliance = 1.0;
  double total_cost = 0.0;
  double core_seconds_released = 0.0;
  double p50_latency_s = 0.0;
  double p95_latency_s = 0.0;
  double p99_latency_s = 0.0;
  double horizon_end_s = 0.0;
  std::uint64_t state_transitions = 0;
  std::uint64_t illegal_transitions = 0;
  std::size_t vms_deployed = 0;
  std::vector<DeploymentRecord> deployments;
};

struct SimScenario {
  const WorkloadTrace* trace = nullptr;
  std::size_t arrivals_begin = 0;  // replayed segment [begin, end)
  std::size_t arrivals_end = 0;
  const ExecutionProfile* profile = nullptr;
  const FlavorCatalog* catalog = nullptr;
  SloSpec slo;
  ProvisionerConfig prov;
  VerticalPolicy vertical;
  std::uint64_t seed = 0;

  // Provisioning lead before the first arrival; -1 uses the setup horizon.
  int warmup_intervals = -1;

  bool oracle_forecast = false;            // feed the provisioner future truth
  std::optional<ForecastModel> model;      // required unless oracle_forecast
  CompensatorModel compensator;            // identity by default
  std::size_t ring_capacity = 5;
  int retrain_interval_ticks = 60;         // rolling refit cadence; 0 = never
  double drain_cap_s = 86400.0;            // bound on the post-trace drain
};

// Least-loaded pick over (vm id, queued + in-flight) pairs; ties take the
// lowest id. Empty input means no warm VM is available.
std::optional<int> pick_least_loaded(const std::vector<std::pair<int, int>>& vm_loads);

// One reactive scaler evaluation for a warm VM. Doubles (snapped up to a
// profiled count) on any miss in the window; steps one profiled count down
// when the window p95 sits below margin * lambda. profiled must be sorted.
int vertical_adjust(int active_cores, int flavor_cores, const std::vector<int>& profiled,
                    bool any_miss, bool have_window, double window_p95, double lambda_s,
                    double margin);

// Lease-period billing: every deployment pays ceil(span / tau) periods, parked
// time included; records still alive bill through horizon_end.
double account_cost(const std::vector<DeploymentRecord>& log, const FlavorCatalog& catalog,
                    double tau_vm_s, double horizon_end_s);

// Deterministic replay of the trace segment against the provisioned cluster:
// uniform intra-minute arrivals, least-loaded dispatch, per-VM FIFO service
// sampled from the fitted profile, reactive vertical scaling, SLO and cost
// accounting. (trace, scenario, seed) fully determine the report.
SimulationReport run(const SimScenario& scenario);

}  // namespace slosim
