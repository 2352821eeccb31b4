#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slosim/errors.hpp"
#include "slosim/provisioner.hpp"

using namespace slosim;

namespace {

ExecutionProfile test_profile() {
  ExecutionProfile p;
  p.service = "svc";
  p.min_mem_gb = 2.0;
  p.setup = SetupTimes{100.0, 40.0, 20.0, 0.0};
  PerCoreFit pc;
  pc.fitted = {dist::Family::Normal, {0.5, 1e-9}};
  pc.percentile_latency = 0.5;
  p.per_core[2] = pc;
  return p;
}

FlavorCatalog test_catalog() { return FlavorCatalog{{{"A", 2, 4.0, 1.0}}}; }

SloSpec test_slo() { return SloSpec{2.0, 0.95, 2.0}; }  // n_req = floor(2/0.5) = 4

Provisioner make_prov(bool full_recall = true) {
  ProvisionerConfig cfg;
  cfg.tick_interval_s = 60.0;
  cfg.tau_vm_s = 3600.0;
  cfg.setup = SetupTimes{100.0, 40.0, 20.0, 0.0};
  cfg.t_forecast_s = 5.0;
  cfg.full_recall = full_recall;
  return Provisioner(cfg, test_catalog(), test_profile(), test_slo());
}

}  // namespace

TEST_CASE("setup horizon rounds up to whole intervals") {
  CHECK(setup_horizon_intervals(SetupTimes{100, 40, 20, 0}, 5.0, 60.0) == 3);  // 165 s
  CHECK(setup_horizon_intervals(SetupTimes{0, 0, 0, 0}, 0.0, 60.0) == 0);
  CHECK(setup_horizon_intervals(SetupTimes{50, 5, 5, 0}, 0.0, 60.0) == 1);
  // VM deployment dominating keeps the horizon at the t_vm scale.
  CHECK(setup_horizon_intervals(SetupTimes{300, 10, 10, 0}, 5.0, 60.0) == 6);
}

TEST_CASE("first tick deploys alpha VMs with three registry entries each") {
  auto prov = make_prov();
  auto log = prov.tick(0.0, 10.0);  // alpha = ceil(10/4) = 3
  CHECK(log.alpha == 3);
  CHECK(log.delta == 3);
  CHECK(log.deploys == 3);
  CHECK(log.recalls == 0);
  CHECK(prov.prev_step_vm_count() == 3);
  CHECK(prov.cluster().live_count() == 3);
  CHECK(prov.registry().container_download.size() == 3);
  CHECK(prov.registry().model_load.size() == 3);
  CHECK(prov.registry().vm_expire.size() == 3);
  for (const auto& [id, vm] : prov.cluster().vms()) {
    CHECK(vm.state == VmState::VmCold);
    CHECK(vm.lease_expiry == 3600.0);  // deploy time + tau exactly
  }
  // Registry causality: load >= download >= deploy time.
  auto dl = prov.registry().container_download.begin()->first;
  auto ml = prov.registry().model_load.begin()->first;
  CHECK(dl == 100.0);
  CHECK(ml == 140.0);
}

TEST_CASE("deploy pipeline walks the lifecycle at exact stage times") {
  auto prov = make_prov();
  prov.tick(0.0, 4.0);  // one VM
  const auto& vm = prov.cluster().vms().begin()->second;
  prov.advance_to(99.0);
  CHECK(vm.state == VmState::VmCold);
  prov.advance_to(100.0);
  CHECK(vm.state == VmState::VmWarm);
  prov.advance_to(139.0);
  CHECK(vm.state == VmState::VmWarm);
  prov.advance_to(140.0);
  CHECK(vm.state == VmState::ContainerCold);
  prov.advance_to(159.0);
  CHECK(prov.cluster().warm_ids().empty());
  prov.advance_to(160.0);
  CHECK(vm.state == VmState::ContainerWarm);
  CHECK(prov.cluster().warm_ids().size() == 1);
}

TEST_CASE("zero-duration stages chain within one advance") {
  ProvisionerConfig cfg;
  cfg.setup = SetupTimes{0, 0, 0, 0};
  auto prov = Provisioner(cfg, test_catalog(), test_profile(), test_slo());
  prov.tick(0.0, 4.0);
  CHECK(prov.cluster().vms().begin()->second.state == VmState::ContainerWarm);
}

TEST_CASE("steady state is a fixed point") {
  auto prov = make_prov();
  prov.tick(0.0, 10.0);
  auto log = prov.tick(60.0, 10.0);
  CHECK(log.alpha == 3);
  CHECK(log.delta == 0);
  CHECK(log.deploys == 0);
  CHECK(log.recalls == 0);
  CHECK(log.parks == 0);
  CHECK(prov.cluster().live_count() == 3);
}

TEST_CASE("demand drop parks warm VMs into the scaled set") {
  auto prov = make_prov();
  prov.tick(0.0, 20.0);  // alpha 5
  prov.advance_to(160.0);
  CHECK(prov.cluster().warm_ids().size() == 5);
  auto log = prov.tick(180.0, 12.0);  // alpha 3: delta -2, delta' -2
  CHECK(log.alpha == 3);
  CHECK(log.delta == -2);
  CHECK(log.parks == 2);
  CHECK(prov.scaled_vms().size() == 2);
  CHECK(prov.cluster().warm_ids().size() == 3);
  for (int id : prov.scaled_vms()) {
    const auto& vm = prov.cluster().vm(id);
    CHECK(vm.state == VmState::ContainerCold);
    CHECK(vm.serving_batch);
  }
  // Parked VMs stay leased: conservation holds, nothing terminated.
  CHECK(prov.cluster().live_count() == 5);
  CHECK(prov.cluster().terminated_total() == 0);
}

TEST_CASE("unchanged demand next tick recalls the entire scaled set") {
  auto prov = make_prov();
  prov.tick(0.0, 20.0);
  prov.advance_to(160.0);
  prov.tick(180.0, 12.0);  // parks 2
  auto log = prov.tick(240.0, 12.0);  // delta 0, delta' = |scaled| = 2
  CHECK(log.delta == 0);
  CHECK(log.recalls == 2);
  CHECK(prov.scaled_vms().empty());
  // Recalled VMs need the model load time before serving again.
  CHECK(prov.cluster().warm_ids().size() == 3);
  prov.advance_to(259.0);
  CHECK(prov.cluster().warm_ids().size() == 3);
  prov.advance_to(260.0);
  CHECK(prov.cluster().warm_ids().size() == 5);
  for (const auto& [id, vm] : prov.cluster().vms()) CHECK(!vm.serving_batch);
}

TEST_CASE("scale_up contract and no-op") {
  auto prov = make_prov();
  prov.tick(0.0, 20.0);
  prov.advance_to(160.0);
  prov.tick(180.0, 4.0);  // alpha 1: delta -4 -> park 4
  CHECK(prov.scaled_vms().size() == 4);
  CHECK(prov.scale_up(0, 200.0).empty());
  auto ids = prov.scale_up(2, 200.0);
  CHECK(ids.size() == 2);
  CHECK(prov.scaled_vms().size() == 2);
  CHECK_THROWS_AS(prov.scale_up(3, 200.0), std::logic_error);
}

TEST_CASE("busy VMs defer parking") {
  auto prov = make_prov();
  prov.tick(0.0, 20.0);
  prov.advance_to(160.0);
  std::set<int> busy = {0, 1, 2, 3};
  auto log = prov.tick(180.0, 4.0, busy);  // wants 4 parks, only vm 4 idle
  CHECK(log.parks == 1);
  CHECK(log.parks_deferred == 3);
  CHECK(prov.scaled_vms().size() == 1);
}

TEST_CASE("leases expire at whole ticks and are replaced a horizon ahead") {
  auto prov = make_prov();
  long long expire_tick_deploys = 0;
  for (double now = 0.0; now <= 3600.0; now += 60.0) {
    auto log = prov.tick(now, 10.0);
    if (now == 3420.0) {
      // Horizon 180 s: window (3540, 3600] sees all three leases ending.
      CHECK(log.delta == 3);
      expire_tick_deploys = log.deploys;
    } else if (now == 3600.0) {
      CHECK(log.expiries == 3);
    } else {
      CHECK(log.deploys == (now == 0.0 ? 3 : 0));
    }
  }
  CHECK(expire_tick_deploys == 3);
  CHECK(prov.cluster().live_count() == 3);  // replacements
  CHECK(prov.cluster().terminated_total() == 3);
  CHECK(prov.cluster().deployed_total() == 6);
  // Replacements were warm before the old leases ended.
  for (const auto& [id, vm] : prov.cluster().vms()) {
    CHECK(vm.deploy_time == 3420.0);
    CHECK(vm.state == VmState::ContainerWarm);
  }
}

TEST_CASE("an expiring VM mid-request drains before terminating") {
  auto prov = make_prov();
  prov.tick(0.0, 4.0);
  for (double now = 60.0; now < 3600.0; now += 60.0) prov.tick(now, 4.0);
  std::set<int> busy = {0};
  auto log = prov.tick(3600.0, 4.0, busy);
  CHECK(log.expiries == 1);
  CHECK(prov.cluster().alive(0));
  CHECK(prov.cluster().vm(0).draining);
  CHECK(prov.cluster().warm_ids().empty() == false);  // replacement serves
  prov.notify_idle(0, 3610.0);
  CHECK(!prov.cluster().alive(0));
  const auto& log_rec = prov.cluster().deployment_log();
  CHECK(log_rec[0].end_time == 3610.0);
}

TEST_CASE("parked VMs still terminate at lease expiry") {
  auto prov = make_prov();
  prov.tick(0.0, 8.0);  // alpha 2, ids 0 and 1, leases end at 3600
  for (double now = 60.0; now <= 3480.0; now += 60.0) prov.tick(now, 8.0);
  // The 3420 tick already deployed the horizon-ahead replacements (ids 2, 3).
  CHECK(prov.cluster().live_count() == 4);
  auto park_log = prov.tick(3540.0, 4.0);  // alpha 1: one warm VM parks
  CHECK(park_log.parks == 1);
  REQUIRE(prov.scaled_vms().size() == 1);
  CHECK(*prov.scaled_vms().begin() == 0);  // lowest warm id
  auto expire_log = prov.tick(3600.0, 4.0);
  CHECK(expire_log.expiries == 2);
  CHECK(!prov.cluster().alive(0));  // parked VM billed and gone at lease end
  CHECK(!prov.cluster().alive(1));
  CHECK(prov.scaled_vms().empty());
  CHECK(prov.cluster().live_count() == 2);
}

TEST_CASE("degraded tick reuses the previous alpha") {
  auto prov = make_prov();
  prov.tick(0.0, 10.0);
  auto log = prov.tick(60.0, std::nullopt);
  CHECK(log.degraded);
  CHECK(log.alpha == 3);
  CHECK(log.deploys == 0);
}

TEST_CASE("infeasible SLO halts the first provisioning tick") {
  ProvisionerConfig cfg;
  FlavorCatalog catalog{{{"tiny", 2, 1.0, 1.0}}};  // below min_mem
  auto prov = Provisioner(cfg, catalog, test_profile(), test_slo());
  CHECK_THROWS_AS(prov.tick(0.0, 10.0), InfeasibleSloError);
}

TEST_CASE("illegal lifecycle edges throw and are counted") {
  auto prov = make_prov();
  prov.tick(0.0, 4.0);
  auto& cluster = prov.cluster();
  CHECK_THROWS_AS(cluster.transition(0, VmState::ContainerWarm, 1.0), IllegalTransition);
  CHECK(cluster.illegal_attempts() == 1);
  CHECK(cluster.vm(0).state == VmState::VmCold);  // state unchanged
  // The full legal edge set, one by one.
  CHECK(legal_transition(VmState::VmCold, VmState::VmWarm));
  CHECK(legal_transition(VmState::VmWarm, VmState::ContainerCold));
  CHECK(legal_transition(VmState::ContainerCold, VmState::ContainerWarm));
  CHECK(legal_transition(VmState::ContainerWarm, VmState::ContainerCold));
  CHECK(legal_transition(VmState::ContainerWarm, VmState::VmCold));
  CHECK(legal_transition(VmState::ContainerCold, VmState::VmCold));
  CHECK(!legal_transition(VmState::VmCold, VmState::ContainerCold));
  CHECK(!legal_transition(VmState::VmWarm, VmState::ContainerWarm));
  CHECK(!legal_transition(VmState::ContainerCold, VmState::VmWarm));
}

TEST_CASE("identical forecast sequences replay to identical schedules") {
  auto a = make_prov();
  auto b = make_prov();
  std::vector<double> forecasts = {10, 14, 14, 8, 8, 8, 20, 20, 4, 4, 4, 12};
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    double now = 60.0 * static_cast<double>(i);
    auto la = a.tick(now, forecasts[i]);
    auto lb = b.tick(now, forecasts[i]);
    CHECK(la.alpha == lb.alpha);
    CHECK(la.delta == lb.delta);
    CHECK(la.deploys == lb.deploys);
    CHECK(la.recalls == lb.recalls);
    CHECK(la.parks == lb.parks);
    CHECK(la.expiries == lb.expiries);
  }
  CHECK(a.cluster().live_count() == b.cluster().live_count());
  CHECK(a.cluster().transition_count() == b.cluster().transition_count());
  auto ia = a.cluster().vms().begin();
  auto ib = b.cluster().vms().begin();
  for (; ia != a.cluster().vms().end(); ++ia, ++ib) {
    CHECK(ia->first == ib->first);
    CHECK(ia->second.state == ib->second.state);
    CHECK(ia->second.lease_expiry == ib->second.lease_expiry);
  }
}

TEST_CASE("full recall wakes the whole parked set; partial only what is needed") {
  // Demand path: 5 -> 1 (parks 4) -> 6 (delta > 0 while 4 VMs sit parked).
  auto run_variant = [](bool full_recall) {
    auto prov = make_prov(full_recall);
    prov.tick(0.0, 20.0);
    prov.advance_to(160.0);
    prov.tick(180.0, 4.0);
    REQUIRE(prov.scaled_vms().size() == 4);
    return prov.tick(240.0, 24.0);  // alpha 6, prev 1 -> delta 5
  };
  auto full = run_variant(true);
  CHECK(full.deploys == 5);
  CHECK(full.recalls == 4);  // whole set, even though the deploys already cover demand
  auto partial = run_variant(false);
  CHECK(partial.deploys == 5);
  CHECK(partial.recalls == 0);  // alpha(6) - (live(10) - parked(4)) = 0 needed
}
