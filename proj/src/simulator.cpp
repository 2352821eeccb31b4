#include "slosim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>

#include "slosim/errors.hpp"
#include "slosim/mathfn.hpp"
#include "slosim/rng.hpp"

namespace slosim {

std::optional<int> pick_least_loaded(const std::vector<std::pair<int, int>>& vm_loads) {
  std::optional<int> best;
  int best_load = 0;
  for (const auto& [id, load] : vm_loads) {
    if (!best || load < best_load || (load == best_load && id < *best)) {
      best = id;
      best_load = load;
    }
  }
  return best;
}

int vertical_adjust(int active_cores, int flavor_cores, const std::vector<int>& profiled,
                    bool any_miss, bool have_window, double window_p95, double lambda_s,
                    double margin) {
  if (any_miss) {
    int target = 2 * active_cores;
    for (int p : profiled) {
      if (p <= flavor_cores && p >= target) return std::max(p, active_cores);
    }
    int best = active_cores;
    for (int p : profiled) {
      if (p <= flavor_cores && p > best) best = p;
    }
    return best;
  }
  if (have_window && window_p95 < margin * lambda_s) {
    int best = active_cores;
    for (int p : profiled) {
      if (p < active_cores) best = p;  // ascending scan keeps the largest below
    }
    return best;
  }
  return active_cores;
}

double account_cost(const std::vector<DeploymentRecord>& log, const FlavorCatalog& catalog,
                    double tau_vm_s, double horizon_end_s) {
  double total = 0.0;
  for (const auto& rec : log) {
    double end = rec.end_time >= 0.0 ? rec.end_time : horizon_end_s;
    double span = std::max(0.0, end - rec.deploy_time);
    double periods = std::max(1.0, std::ceil(span / tau_vm_s - 1e-12));
    total += periods * catalog.at(rec.flavor).cost;
  }
  return total;
}

namespace {

struct VmRuntime {
  std::deque<long long> queue;
  long long in_service = -1;
  Rng rng;
  std::vector<std::pair<double, double>> window;  // (end, latency) since last scaler check

  explicit VmRuntime(std::uint64_t seed, int vm_id) : rng(seed, static_cast<std::uint64_t>(vm_id)) {}
  int load() const { return static_cast<int>(queue.size()) + (in_service >= 0 ? 1 : 0); }
};

struct Completion {
  double time;
  int vm;
  bool operator>(const Completion& o) const {
    return time > o.time || (time == o.time && vm > o.vm);
  }
};

class Simulation {
 public:
  explicit Simulation(const SimScenario& sc)
      : sc_(sc),
        trace_(*sc.trace),
        prov_(sc.prov, *sc.catalog, *sc.profile, sc.slo),
        comp_ring_(sc.ring_capacity) {
    for (const auto& [cores, fit] : sc.profile->per_core) profiled_.push_back(cores);
    if (sc.model) model_ = *sc.model;
  }

  SimulationReport run();

 private:
  VmRuntime& runtime(int id) {
    auto it = rt_.find(id);
    if (it == rt_.end()) it = rt_.emplace(id, VmRuntime(sc_.seed, id)).first;
    return it->second;
  }

  void start_service(int id, long long req, double now) {
    VmRuntime& r = runtime(id);
    RequestRecord& rec = requests_[static_cast<std::size_t>(req)];
    const VmInstance& vm = prov_.cluster().vm(id);
    if (!sc_.profile->has_cores(vm.active_cores)) {
      throw ConfigError("simulation abort: unprofiled active core count " +
                        std::to_string(vm.active_cores));
    }
    double u = r.rng.next_u01();
    double base = dist::sample(sc_.profile->per_core.at(vm.active_cores).fitted, u);
    bool interfered = vm.active_cores < sc_.catalog->at(vm.flavor).cores;
    double service = base * (interfered ? sc_.vertical.interference : 1.0);
    rec.start_s = now;
    rec.vm = id;
    rec.service_s = service;
    rec.interfered = interfered;
    r.in_service = req;
    completions_.push(Completion{now + service, id});
  }

  bool vm_serving_eligible(int id) const {
    const auto& vms = prov_.cluster().vms();
    auto it = vms.find(id);
    return it != vms.end() && it->second.state == VmState::ContainerWarm &&
           !it->second.draining;
  }

  // Starts the next request on an idle VM: own FIFO queue first, then the
  // global pending queue.
  void try_start(int id, double now) {
    VmRuntime& r = runtime(id);
    while (r.in_service < 0) {
      if (!r.queue.empty()) {
        long long req = r.queue.front();
        r.queue.pop_front();
        start_service(id, req, now);
      } else if (!global_queue_.empty() && vm_serving_eligible(id)) {
        long long req = global_queue_.front();
        global_queue_.pop_front();
        start_service(id, req, now);
      } else {
        break;
      }
    }
  }

  void kick_global(double now) {
    if (global_queue_.empty()) return;
    for (int id : prov_.cluster().warm_ids()) {
      if (global_queue_.empty()) break;
      try_start(id, now);
    }
  }

  void dispatch(long long req, double now) {
    std::vector<std::pair<int, int>> loads;
    for (int id : prov_.cluster().warm_ids()) {
      loads.emplace_back(id, runtime(id).load());
    }
    auto target = pick_least_loaded(loads);
    if (!target) {
      global_queue_.push_back(req);  // no warm VM: wait at the balancer
      return;
    }
    VmRuntime& r = runtime(*target);
    if (r.in_service < 0) {
      start_service(*target, req, now);
    } else {
      r.queue.push_back(req);
    }
  }

  void complete(int id, double now) {
    VmRuntime& r = runtime(id);
    RequestRecord& rec = requests_[static_cast<std::size_t>(r.in_service)];
    rec.end_s = now;
    rec.latency_s = now - rec.arrival_s;
    rec.served = true;
    rec.slo_hit = rec.latency_s <= sc_.slo.lambda_s;
    (rec.slo_hit ? hits_ : misses_)++;
    r.window.emplace_back(now, rec.latency_s);
    r.in_service = -1;
    prov_.notify_idle(id, now);  // draining VMs terminate here
    if (prov_.cluster().alive(id)) {
      try_start(id, now);
    }
    requeue_orphans(id, now);
  }

  // Requests queued on a VM that can no longer serve go back to the balancer,
  // ahead of later arrivals.
  void requeue_orphans(int id, double now) {
    (void)now;
    auto it = rt_.find(id);
    if (it == rt_.end()) return;
    VmRuntime& r = it->second;
    bool gone = !prov_.cluster().alive(id);
    bool drains = !gone && prov_.cluster().vm(id).draining;
    if (!gone && !drains) return;
    while (!r.queue.empty()) {
      global_queue_.push_front(r.queue.back());
      r.queue.pop_back();
    }
  }

  std::optional<double> forecast_for_tick(long long minute);
  void provisioner_tick(double now, long long minute);
  void scaler_tick(double now);

  const SimScenario& sc_;
  const WorkloadTrace& trace_;
  Provisioner prov_;
  std::vector<int> profiled_;

  std::vector<RequestRecord> requests_;
  std::map<int, VmRuntime> rt_;
  std::deque<long long> global_queue_;
  std::priority_queue<Completion, std::vector<Completion>, std::greater<Completion>> completions_;

  ForecastModel model_;
  ErrorRing comp_ring_;
  std::map<long long, double> issued_;  // target minute -> raw forecast

  std::vector<TickRecord> ticks_;
  long long hits_ = 0;
  long long misses_ = 0;
  double released_ = 0.0;
};

std::optional<double> Simulation::forecast_for_tick(long long minute) {
  long long target = minute + prov_.horizon_intervals();
  if (sc_.oracle_forecast) {
    double y = target >= 0 && static_cast<std::size_t>(target) < trace_.size()
                   ? static_cast<double>(trace_.counts[static_cast<std::size_t>(target)])
                   : 0.0;
    return y;
  }
  long long prev = minute - 1;
  if (prev >= 0 && static_cast<std::size_t>(prev) < trace_.size()) {
    auto it = issued_.find(prev);
    if (it != issued_.end()) {
      push_error(comp_ring_, static_cast<double>(trace_.counts[static_cast<std::size_t>(prev)]),
                 it->second);
      issued_.erase(it);
    }
  }
  std::size_t w = static_cast<std::size_t>(model_.window_end - model_.window_start);
  if (sc_.retrain_interval_ticks > 0 && ticks_.size() > 0 &&
      ticks_.size() % static_cast<std::size_t>(sc_.retrain_interval_ticks) == 0 &&
      minute > model_.window_end && static_cast<std::size_t>(minute) >= w &&
      static_cast<std::size_t>(minute) <= trace_.size()) {
    model_ = retrain_rolling(model_, trace_, static_cast<std::size_t>(minute));
  }
  if (target < model_.window_end) return std::nullopt;
  Forecast f = predict(model_, target);
  issued_[target] = f.y;
  return compensate(sc_.compensator, f, comp_ring_).y;
}

void Simulation::provisioner_tick(double now, long long minute) {
  std::optional<double> y_itv = forecast_for_tick(minute);
  std::optional<double> y_window;
  if (y_itv) {
    y_window = *y_itv * sc_.slo.lambda_s / static_cast<double>(trace_.resolution_s);
  }
  std::set<int> busy;
  for (const auto& [id, r] : rt_) {
    if (r.in_service >= 0) busy.insert(id);
  }
  TickActions actions = prov_.tick(now, y_window, busy);
  for (const auto& [id, vm] : prov_.cluster().vms()) {
    if (vm.draining) requeue_orphans(id, now);
  }
  kick_global(now);

  TickRecord rec;
  rec.actions = actions;
  rec.forecast_per_interval = y_itv.value_or(-1.0);
  rec.actual_per_interval = minute >= 0 && static_cast<std::size_t>(minute) < trace_.size()
                                ? static_cast<double>(trace_.counts[static_cast<std::size_t>(minute)])
                                : -1.0;
  rec.warm_vms = static_cast<int>(prov_.cluster().warm_ids().size());
  rec.live_vms = static_cast<int>(prov_.cluster().live_count());
  rec.total_active_cores = prov_.cluster().total_active_cores();
  ticks_.push_back(rec);
}

void Simulation::scaler_tick(double now) {
  (void)now;
  for (int id : prov_.cluster().warm_ids()) {
    VmRuntime& r = runtime(id);
    if (!sc_.vertical.enabled) {
      r.window.clear();
      continue;
    }
    VmInstance& vm = prov_.cluster().vm(id);
    bool any_miss = false;
    std::vector<double> lats;
    lats.reserve(r.window.size());
    for (const auto& [end, lat] : r.window) {
      lats.push_back(lat);
      if (lat > sc_.slo.lambda_s) any_miss = true;
    }
    double p95 = lats.empty() ? 0.0 : math::quantile_nearest_rank(lats, 0.95);
    int next = vertical_adjust(vm.active_cores, sc_.catalog->at(vm.flavor).cores, profiled_,
                               any_miss, !lats.empty(), p95, sc_.slo.lambda_s,
                               sc_.vertical.margin);
    vm.active_cores = next;
    r.window.clear();
  }
  // Windows of non-warm VMs reset as well so stale completions never feed a
  // later decision.
  for (auto& [id, r] : rt_) {
    if (!prov_.cluster().alive(id) || prov_.cluster().vm(id).state != VmState::ContainerWarm) {
      r.window.clear();
    }
  }
}

SimulationReport Simulation::run() {
  const std::size_t B = sc_.arrivals_begin;
  const std::size_t E = sc_.arrivals_end;
  if (!sc_.trace || !sc_.profile || !sc_.catalog) throw ConfigError("run: missing inputs");
  if (B > E || E > trace_.size()) throw RangeError("run: bad arrival segment");
  if (!sc_.oracle_forecast && !sc_.model) {
    throw ConfigError("run: a forecast model is required unless oracle_forecast is set");
  }
  const int interval = trace_.resolution_s;
  const int check = std::max(1, static_cast<int>(sc_.vertical.check_interval_s));

  // Uniform intra-minute spread; ids follow (minute, slot) order.
  for (std::size_t k = B; k < E; ++k) {
    std::int64_t c = trace_.counts[k];
    for (std::int64_t j = 0; j < c; ++j) {
      RequestRecord rec;
      rec.id = static_cast<long long>(requests_.size());
      rec.arrival_s = static_cast<double>(k) * interval +
                      static_cast<double>(j * interval / c);
      requests_.push_back(rec);
    }
  }

  int warmup = sc_.warmup_intervals >= 0 ? sc_.warmup_intervals : prov_.horizon_intervals();
  long long start_minute = std::max<long long>(0, static_cast<long long>(B) - warmup);
  long long now = start_minute * interval;
  const double arrivals_end_s = static_cast<double>(E) * interval;
  std::size_t next_arrival = 0;

  for (;;) {
    double now_s = static_cast<double>(now);
    prov_.advance_to(now_s);
    kick_global(now_s);

    if (now % interval == 0) provisioner_tick(now_s, now / interval);

    while (next_arrival < requests_.size() && requests_[next_arrival].arrival_s <= now_s) {
      dispatch(static_cast<long long>(next_arrival), requests_[next_arrival].arrival_s);
      ++next_arrival;
    }

    // Service completions inside [now, now+1), chained in exact time order.
    while (!completions_.empty() && completions_.top().time < now_s + 1.0) {
      Completion c = completions_.top();
      completions_.pop();
      prov_.advance_to(c.time);  // setup stages finishing mid-second
      complete(c.vm, c.time);
      kick_global(c.time);
    }

    if (now % check == 0) scaler_tick(now_s);

    // Freed-core accounting at one-second granularity.
    for (const auto& [id, vm] : prov_.cluster().vms()) {
      if (vm.state == VmState::ContainerWarm) {
        released_ += sc_.catalog->at(vm.flavor).cores - vm.active_cores;
      }
    }

    // Work conservation: no idle warm VM may coexist with balancer backlog.
    if (!global_queue_.empty()) {
      for (int id : prov_.cluster().warm_ids()) {
        if (runtime(id).in_service < 0 && runtime(id).queue.empty()) {
          throw std::logic_error("work conservation violated at t=" + std::to_string(now));
        }
      }
    }

    bool in_flight = !completions_.empty() || !global_queue_.empty();
    if (!in_flight) {
      for (const auto& [id, r] : rt_) {
        if (r.in_service >= 0 || !r.queue.empty()) {
          in_flight = true;
          break;
        }
      }
    }
    bool arrivals_done = next_arrival >= requests_.size() && now_s + 1.0 >= arrivals_end_s;
    if (arrivals_done && !in_flight) break;
    if (now_s > arrivals_end_s + sc_.drain_cap_s) break;  // stuck scenario guard
    ++now;
  }

  SimulationReport report;
  report.horizon_end_s = static_cast<double>(now);
  report.requests = std::move(requests_);
  report.ticks = std::move(ticks_);
  for (auto& rec : report.requests) {
    if (!rec.served && rec.id >= 0) {
      // Drain cap hit: unserved requests count against the SLO.
      if (rec.start_s < 0 || rec.end_s < 0) {
        rec.slo_hit = false;
        ++misses_;
      }
    }
  }
  report.slo_hits = hits_;
  report.slo_misses = misses_;
  long long total = hits_ + misses_;
  report.slo_compliance = total > 0 ? static_cast<double>(hits_) / static_cast<double>(total) : 1.0;

  std::vector<double> lats;
  lats.reserve(report.requests.size());
  for (const auto& rec : report.requests) {
    if (rec.served) lats.push_back(rec.latency_s);
  }
  if (!lats.empty()) {
    report.p50_latency_s = math::quantile_nearest_rank(lats, 0.50);
    report.p95_latency_s = math::quantile_nearest_rank(lats, 0.95);
    report.p99_latency_s = math::quantile_nearest_rank(lats, 0.99);
  }
  report.total_cost = account_cost(prov_.cluster().deployment_log(), *sc_.catalog,
                                   sc_.prov.tau_vm_s, report.horizon_end_s);
  report.core_seconds_released = released_;
  report.state_transitions = prov_.cluster().transition_count();
  report.illegal_transitions = prov_.cluster().illegal_attempts();
  report.vms_deployed = prov_.cluster().deployed_total();
  report.deployments = prov_.cluster().deployment_log();
  return report;
}

}  // namespace

SimulationReport run(const SimScenario& scenario) {
  Simulation sim(scenario);
  return sim.run();
}

}  // namespace slosim
