#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "slosim/estimator.hpp"
#include "slosim/profiler.hpp"

namespace slosim {

enum class VmState { VmCold, VmWarm, ContainerCold, ContainerWarm };

const char* vm_state_name(VmState s);

// Lifecycle edge set: deploy (t_vm), container download (t_cd), model load
// (t_ml), model unload (t_mu), and termination from any state.
bool legal_transition(VmState from, VmState to);

struct VmInstance {
  int id = 0;
  std::size_t flavor = 0;
  VmState state = VmState::VmCold;
  double state_since = 0.0;
  double deploy_time = 0.0;
  double lease_expiry = 0.0;  // deploy_time + tau_vm, never renewed
  int active_cores = 1;
  bool serving_batch = false;  // parked VM hosting background batch jobs
  bool draining = false;       // expired mid-request; terminates when idle

  // At most one in-flight transition completion per VM.
  bool has_pending = false;
  VmState pending_state = VmState::VmCold;
  double pending_at = 0.0;
};

struct DeploymentRecord {
  int id = 0;
  std::size_t flavor = 0;
  double deploy_time = 0.0;
  double end_time = -1.0;  // -1 while alive
};

// Time-keyed action books mirroring the provisioning loop: container
// downloads, model loads, and lease expirations.
struct ActionRegistry {
  std::multimap<double, int> container_download;
  std::multimap<double, int> model_load;
  std::multimap<double, int> vm_expire;
};

class IllegalTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// VM pool with guarded state transitions and conservation accounting. Every
// mutation goes through transition(); an edge outside the lifecycle set
// throws and is counted.
class Cluster {
 public:
  int deploy(std::size_t flavor, int cores, double now, double tau_vm_s);
  void transition(int id, VmState to, double now);
  void set_pending(int id, VmState to, double at);
  void cancel_pending(int id);
  void apply_pending_due(double now);  // in (time, id) order
  void terminate(int id, double now);  // unloads first when warm

  bool alive(int id) const { return vms_.count(id) > 0; }
  VmInstance& vm(int id) { return vms_.at(id); }
  const VmInstance& vm(int id) const { return vms_.at(id); }
  const std::map<int, VmInstance>& vms() const { return vms_; }

  std::vector<int> warm_ids() const;  // ContainerWarm, not draining
  std::size_t live_count() const { return vms_.size(); }
  int total_active_cores() const;
  double earliest_pending() const;

  const std::vector<DeploymentRecord>& deployment_log() const { return log_; }
  std::uint64_t transition_count() const { return transitions_; }
  std::uint64_t illegal_attempts() const { return illegal_; }
  std::size_t deployed_total() const { return deployed_total_; }
  std::size_t terminated_total() const { return terminated_total_; }

 private:
  std::map<int, VmInstance> vms_;
  std::vector<DeploymentRecord> log_;
  std::map<int, std::size_t> log_index_;
  int next_id_ = 0;
  std::uint64_t transitions_ = 0;
  std::uint64_t illegal_ = 0;
  std::size_t deployed_total_ = 0;
  std::size_t terminated_total_ = 0;

  void check_conservation() const;
};

struct ProvisionerConfig {
  double tick_interval_s = 60.0;
  double tau_vm_s = 3600.0;
  SetupTimes setup;
  double t_forecast_s = 0.0;
  // Recall the whole parked set on any deploy step (the provisioning loop's
  // literal behavior); false recalls only as many as the target needs.
  bool full_recall = true;
};

struct TickActions {
  long long tick = 0;
  double now_s = 0.0;
  double forecast = 0.0;  // workload per SLO window
  long long alpha = 0;
  long long delta = 0;
  int deploys = 0;
  int recalls = 0;
  int parks = 0;
  int parks_deferred = 0;
  int expiries = 0;
  bool degraded = false;  // forecast unavailable; previous alpha reused
};

// Whole intervals covered by t_vm + t_cd + t_ml + t_forecast.
int setup_horizon_intervals(const SetupTimes& setup, double t_forecast_s, double interval_s);

// Tick-driven provisioning: computes the VM demand from the forecast, deploys
// ahead by the setup horizon, recalls or parks against the scaled set, and
// executes due registry actions. One logical actor; a tick runs to completion.
class Provisioner {
 public:
  Provisioner(ProvisionerConfig config, FlavorCatalog catalog, ExecutionProfile profile,
              SloSpec slo);

  // forecast_y_window: compensated workload for now + horizon, in requests per
  // SLO window; nullopt marks the tick degraded. busy: VM ids mid-request.
  TickActions tick(double now, std::optional<double> forecast_y_window,
                   const std::set<int>& busy = {});

  // Fires download / model-load registry entries and pending completions due
  // by `now`; called by the simulator between ticks for exact-time readiness.
  void advance_to(double now);

  // Drained request completed; finishes a deferred termination.
  void notify_idle(int id, double now);

  std::vector<int> scale_up(int k, double now);
  std::vector<int> scale_down(int k, double now, const std::set<int>& busy);

  int horizon_intervals() const { return horizon_intervals_; }
  double horizon_s() const { return horizon_intervals_ * config_.tick_interval_s; }
  bool has_choice() const { return choice_.has_value(); }
  const FlavorChoice& choice() const { return *choice_; }
  const ProvisionerConfig& config() const { return config_; }
  const FlavorCatalog& catalog() const { return catalog_; }
  const ExecutionProfile& profile() const { return profile_; }

  Cluster& cluster() { return cluster_; }
  const Cluster& cluster() const { return cluster_; }
  const std::set<int>& scaled_vms() const { return scaled_vms_; }
  const ActionRegistry& registry() const { return registry_; }
  long long prev_step_vm_count() const { return prev_step_vm_count_; }

 private:
  int execute_expiries(double now, const std::set<int>& busy);
  int deploy_one(double now);

  ProvisionerConfig config_;
  FlavorCatalog catalog_;
  ExecutionProfile profile_;
  SloSpec slo_;
  int horizon_intervals_ = 0;

  Cluster cluster_;
  ActionRegistry registry_;
  std::set<int> scaled_vms_;
  std::optional<FlavorChoice> choice_;
  long long prev_step_vm_count_ = 0;
  long long prev_alpha_ = 0;
  long long tick_index_ = 0;
};

}  // namespace slosim
