"""Cluster mechanics close-up: FIFO queueing, spin-up lag, cycle billing.

Run:  python3 demos/02_cluster_anatomy.py
"""

from elastidebt import Request, SimConfig, WorkloadTrace, run_simulation
from elastidebt.policies import ACTION_ORDER, Action
from elastidebt.sim import VmInstance, billing_cycles_charged


class Maintain:
    learns = False

    def candidates(self, obs):
        return ACTION_ORDER

    def decide(self, obs):
        return Action.MAINTAIN

    def observe_reward(self, reward, obs):
        pass


# --- 1. ten simultaneous requests on one VM: the FIFO staircase -------------

cfg = SimConfig(initial_vms=1)
reqs = [Request(i, 0.0, 2.0) for i in range(10)]
trace = WorkloadTrace(requests=reqs, duration=10.0)
result = run_simulation(cfg, trace, Maintain(), 600.0)

print("ten 2 MI requests at t=0 on a single 10 MIPS VM:")
for r in reqs:
    verdict = "ok  " if r.response_time < cfg.sla_response_limit - 1e-9 else "LATE"
    print(f"  req {r.id}: start {r.start_time:.1f}  finish {r.finish_time:.1f}  {verdict}")
print(f"successes {result.totals.successes}, failures {result.totals.failures}")

# --- 2. spin-up lag: work dispatched to a machine that is still booting ------

cfg = SimConfig(initial_vms=1)
late = [Request(0, 0.0, 2.0)]


class LaunchOnce(Maintain):
    def __init__(self):
        self.done = False

    def decide(self, obs):
        if not self.done:
            self.done = True
            return Action.LAUNCH
        return Action.MAINTAIN


result = run_simulation(cfg, WorkloadTrace(late, 10.0), LaunchOnce(), 600.0)
print(f"\nfleet after one launch decision: {result.vms_launched} VMs")
print(f"window count {len(result.windows)}, VM cost {result.totals.vm_cost:.5f}")
print("(the launched VM bills from its request time even while booting)")

# --- 3. partial usage waste: release mid-cycle still pays the full cycle -----

vm = VmInstance(0, 10.0, 0.0, 0.0, anchor=0.0)
for release_at in (290.0, 300.0, 310.0, 420.0):
    vm.released_at = release_at
    cycles = billing_cycles_charged(vm, 21600.0, 300.0)
    waste = cycles * 300.0 - release_at
    print(f"release at t={release_at:5.0f}: charged {cycles} cycles, waste {waste:4.0f}s")
