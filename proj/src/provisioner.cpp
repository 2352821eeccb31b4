#include "slosim/provisioner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slosim/errors.hpp"

namespace slosim {

const char* vm_state_name(VmState s) {
  switch (s) {
    case VmState::VmCold: return "vm_cold";
    case VmState::VmWarm: return "vm_warm";
    case VmState::ContainerCold: return "container_cold";
    case VmState::ContainerWarm: return "container_warm";
  }
  return "?";
}

bool legal_transition(VmState from, VmState to) {
  if (to == VmState::VmCold) return true;  // termination from any state
  switch (from) {
    case VmState::VmCold: return to == VmState::VmWarm;
    case VmState::VmWarm: return to == VmState::ContainerCold;
    case VmState::ContainerCold: return to == VmState::ContainerWarm;
    case VmState::ContainerWarm: return to == VmState::ContainerCold;
  }
  return false;
}

int Cluster::deploy(std::size_t flavor, int cores, double now, double tau_vm_s) {
  VmInstance vm;
  vm.id = next_id_++;
  vm.flavor = flavor;
  vm.state = VmState::VmCold;
  vm.state_since = now;
  vm.deploy_time = now;
  vm.lease_expiry = now + tau_vm_s;
  vm.active_cores = cores;
  vms_.emplace(vm.id, vm);
  log_index_[vm.id] = log_.size();
  log_.push_back(DeploymentRecord{vm.id, flavor, now, -1.0});
  ++deployed_total_;
  check_conservation();
  return vm.id;
}

void Cluster::transition(int id, VmState to, double now) {
  VmInstance& vm = vms_.at(id);
  if (!legal_transition(vm.state, to)) {
    ++illegal_;
    throw IllegalTransition(std::string("illegal transition ") + vm_state_name(vm.state) +
                            " -> " + vm_state_name(to) + " for vm " + std::to_string(id));
  }
  vm.state = to;
  vm.state_since = now;
  ++transitions_;
}

void Cluster::set_pending(int id, VmState to, double at) {
  VmInstance& vm = vms_.at(id);
  vm.has_pending = true;
  vm.pending_state = to;
  vm.pending_at = at;
}

void Cluster::cancel_pending(int id) { vms_.at(id).has_pending = false; }

double Cluster::earliest_pending() const {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& [id, vm] : vms_) {
    if (vm.has_pending) t = std::min(t, vm.pending_at);
  }
  return t;
}

void Cluster::apply_pending_due(double now) {
  for (;;) {
    int best = -1;
    double at = std::numeric_limits<double>::infinity();
    for (const auto& [id, vm] : vms_) {
      if (vm.has_pending && vm.pending_at <= now &&
          (vm.pending_at < at || (vm.pending_at == at && id < best))) {
        best = id;
        at = vm.pending_at;
      }
    }
    if (best < 0) break;
    VmInstance& vm = vms_.at(best);
    vm.has_pending = false;
    transition(best, vm.pending_state, vm.pending_at);
  }
}

void Cluster::terminate(int id, double now) {
  VmInstance& vm = vms_.at(id);
  if (vm.state == VmState::ContainerWarm) {
    transition(id, VmState::ContainerCold, now);  // model unload (t_mu)
  }
  transition(id, VmState::VmCold, now);
  log_[log_index_.at(id)].end_time = now;
  vms_.erase(id);
  log_index_.erase(id);
  ++terminated_total_;
  check_conservation();
}

std::vector<int> Cluster::warm_ids() const {
  std::vector<int> out;
  for (const auto& [id, vm] : vms_) {
    if (vm.state == VmState::ContainerWarm && !vm.draining) out.push_back(id);
  }
  return out;
}

int Cluster::total_active_cores() const {
  int total = 0;
  for (const auto& [id, vm] : vms_) {
    if (vm.state == VmState::ContainerWarm) total += vm.active_cores;
  }
  return total;
}

void Cluster::check_conservation() const {
  if (deployed_total_ != vms_.size() + terminated_total_) {
    throw std::logic_error("cluster conservation violated: deployed != live + terminated");
  }
}

int setup_horizon_intervals(const SetupTimes& setup, double t_forecast_s, double interval_s) {
  double total = setup.total_setup_s() + t_forecast_s;
  if (total <= 0.0) return 0;
  return static_cast<int>(std::ceil(total / interval_s - 1e-12));
}

Provisioner::Provisioner(ProvisionerConfig config, FlavorCatalog catalog,
                         ExecutionProfile profile, SloSpec slo)
    : config_(std::move(config)),
      catalog_(std::move(catalog)),
      profile_(std::move(profile)),
      slo_(slo) {
  horizon_intervals_ =
      setup_horizon_intervals(config_.setup, config_.t_forecast_s, config_.tick_interval_s);
}

void Provisioner::advance_to(double now) {
  // Fire registry entries and pending completions in global time order so
  // zero-duration stages chain correctly within one call.
  for (;;) {
    double t_dl = registry_.container_download.empty()
                      ? std::numeric_limits<double>::infinity()
                      : registry_.container_download.begin()->first;
    double t_ml = registry_.model_load.empty() ? std::numeric_limits<double>::infinity()
                                               : registry_.model_load.begin()->first;
    double t_pd = cluster_.earliest_pending();
    double t = std::min({t_dl, t_ml, t_pd});
    if (t > now) break;

    if (t_dl == t) {
      auto it = registry_.container_download.begin();
      int id = it->second;
      registry_.container_download.erase(it);
      if (cluster_.alive(id) && cluster_.vm(id).state == VmState::VmCold) {
        cluster_.transition(id, VmState::VmWarm, t);  // deploy finished, download starts
      }
      continue;
    }
    if (t_ml == t) {
      auto it = registry_.model_load.begin();
      int id = it->second;
      registry_.model_load.erase(it);
      if (cluster_.alive(id) && cluster_.vm(id).state == VmState::VmWarm) {
        cluster_.transition(id, VmState::ContainerCold, t);  // download finished, load starts
        cluster_.set_pending(id, VmState::ContainerWarm, t + config_.setup.ml_s);
      }
      continue;
    }
    cluster_.apply_pending_due(t);
  }
}

int Provisioner::deploy_one(double now) {
  const VmFlavor& flavor = catalog_.at(choice_->index);
  int id = cluster_.deploy(choice_->index, flavor.cores, now, config_.tau_vm_s);
  registry_.container_download.emplace(now + config_.setup.vm_s, id);
  registry_.model_load.emplace(now + config_.setup.vm_s + config_.setup.cd_s, id);
  registry_.vm_expire.emplace(now + config_.tau_vm_s, id);
  return id;
}

std::vector<int> Provisioner::scale_up(int k, double now) {
  if (k < 0 || static_cast<std::size_t>(k) > scaled_vms_.size()) {
    throw std::logic_error("scale_up: k exceeds the scaled set");
  }
  std::vector<int> reloaded;
  auto it = scaled_vms_.begin();
  for (int i = 0; i < k; ++i) {
    int id = *it;
    it = scaled_vms_.erase(it);
    VmInstance& vm = cluster_.vm(id);
    vm.serving_batch = false;  // batch jobs evicted
    if (vm.has_pending && vm.pending_state == VmState::ContainerCold) {
      // Unload still in flight (t_mu > 0); the model never left memory.
      cluster_.cancel_pending(id);
    } else {
      vm.active_cores = catalog_.at(vm.flavor).cores;  // fresh reload gets all cores
      cluster_.set_pending(id, VmState::ContainerWarm, now + config_.setup.ml_s);
    }
    reloaded.push_back(id);
  }
  return reloaded;
}

std::vector<int> Provisioner::scale_down(int k, double now, const std::set<int>& busy) {
  std::vector<int> parked;
  for (auto& [id, vm] : cluster_.vms()) {
    if (static_cast<int>(parked.size()) >= k) break;
    if (vm.state != VmState::ContainerWarm || vm.draining || busy.count(id)) continue;
    parked.push_back(id);
  }
  for (int id : parked) {
    VmInstance& vm = cluster_.vm(id);
    if (config_.setup.mu_s > 0.0) {
      cluster_.set_pending(id, VmState::ContainerCold, now + config_.setup.mu_s);
    } else {
      cluster_.transition(id, VmState::ContainerCold, now);
    }
    vm.serving_batch = true;  // recallable, batch-eligible in the background
    scaled_vms_.insert(id);
  }
  return parked;
}

int Provisioner::execute_expiries(double now, const std::set<int>& busy) {
  std::vector<int> due;
  while (!registry_.vm_expire.empty() && registry_.vm_expire.begin()->first <= now) {
    int id = registry_.vm_expire.begin()->second;
    registry_.vm_expire.erase(registry_.vm_expire.begin());
    if (cluster_.alive(id)) due.push_back(id);
  }
  int count = 0;
  for (int id : due) {
    scaled_vms_.erase(id);
    if (busy.count(id)) {
      // Drain first: the in-flight request finishes inside the tick, then the
      // VM terminates via notify_idle. It stops taking new work immediately.
      cluster_.vm(id).draining = true;
    } else {
      cluster_.cancel_pending(id);
      cluster_.terminate(id, now);
    }
    ++count;
  }
  return count;
}

void Provisioner::notify_idle(int id, double now) {
  if (cluster_.alive(id) && cluster_.vm(id).draining) {
    cluster_.cancel_pending(id);
    cluster_.terminate(id, now);
  }
}

TickActions Provisioner::tick(double now, std::optional<double> forecast_y_window,
                              const std::set<int>& busy) {
  advance_to(now);

  TickActions log;
  log.tick = tick_index_++;
  log.now_s = now;

  long long alpha = prev_alpha_;
  if (forecast_y_window) {
    if (forecast_y_window < 0.0) throw RangeError("tick: negative forecast");
    if (!choice_) choice_ = select_flavor(catalog_, profile_, slo_);  // first-run only
    alpha = vm_count(*forecast_y_window, choice_->n_req);
    log.forecast = *forecast_y_window;
  } else {
    log.degraded = true;
  }
  log.alpha = alpha;

  // Leases ending inside the one-interval window at the setup horizon: each
  // expiry is seen exactly once, t'_setup ahead, and adds to the demand so the
  // replacement is deployed in time (never renewed in place).
  double h_end = now + horizon_s();
  double h_begin = h_end - config_.tick_interval_s;
  long long expire_count = 0;
  for (const auto& [id, vm] : cluster_.vms()) {
    if (vm.lease_expiry > h_begin && vm.lease_expiry <= h_end) ++expire_count;
  }

  long long delta = (alpha - prev_step_vm_count_) + expire_count;
  log.delta = delta;

  if (delta > 0) {
    for (long long i = 0; i < delta; ++i) deploy_one(now);
    log.deploys = static_cast<int>(delta);
    int recalls = static_cast<int>(scaled_vms_.size());
    if (!config_.full_recall) {
      long long live_warm_bound =
          static_cast<long long>(cluster_.live_count()) - static_cast<long long>(scaled_vms_.size());
      long long needed = alpha - live_warm_bound;
      recalls = static_cast<int>(std::clamp<long long>(
          needed, 0, static_cast<long long>(scaled_vms_.size())));
    }
    log.recalls = static_cast<int>(scale_up(recalls, now).size());
  } else {
    long long delta_prime = delta + static_cast<long long>(scaled_vms_.size());
    if (delta_prime >= 0) {
      log.recalls = static_cast<int>(scale_up(static_cast<int>(delta_prime), now).size());
    } else {
      int want = static_cast<int>(-delta_prime);
      log.parks = static_cast<int>(scale_down(want, now, busy).size());
      log.parks_deferred = want - log.parks;
    }
  }

  log.expiries = execute_expiries(now, busy);
  prev_step_vm_count_ = alpha;
  prev_alpha_ = alpha;
  return log;
}

}  // namespace slosim
