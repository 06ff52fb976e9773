"""Slot-by-slot simulation: overload detection, policy placement, a second
pass draining underloaded hosts, cooling setpoint control and energy/SLA
accounting."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from . import annealer, models, policies
from .cooling import CoolingStrategy, FixedCooling, cooling_setpoint
from .core import (CapacityError, DataCenterState, ServerSpec, SlotMetrics,
                   VmState, apply_placement, default_server_spec)
from .detection import MadConfig, find_underloaded, migration_bandwidth, \
    overload_threshold, select_vms_mmt
from .models import KWH_PER_WS, ModelParams
from .policies import DEFAULT_DYNSO_LIST, SoKind, SoSaModel
from .workload import Workload

POLICY_NAMES = ("pabfd", "so1", "so2", "so3", "so4", "so5", "so6", "so7",
                "so8", "sosa", "dynso", "mo1", "mo2", "sa", "swfdvp")

_SO_BY_NAME = {
    "pabfd": SoKind.SO1, "so1": SoKind.SO1, "so2": SoKind.SO2,
    "so3": SoKind.SO3, "so4": SoKind.SO4, "so5": SoKind.SO5,
    "so6": SoKind.SO6, "so7": SoKind.SO7, "so8": SoKind.SO8,
    "sosa": SoKind.SO_SA, "swfdvp": SoKind.SWFDVP,
}


@dataclass
class SimConfig:
    slot_seconds: int = 300
    hosts: int = 1200
    policy: str = "pabfd"
    cooling: CoolingStrategy = field(default_factory=lambda: FixedCooling(291.0))
    oversubscription: bool = True
    seed: int = 0
    mad: MadConfig = field(default_factory=MadConfig)
    server: ServerSpec | None = None
    models: ModelParams = field(default_factory=ModelParams)
    sosa: SoSaModel = field(default_factory=SoSaModel)
    sa: annealer.SaConfig = field(default_factory=annealer.SaConfig)
    migration_double_power: bool = True
    migration_reserve: float = 0.5
    # a host is a drain source only when its utilization sits below this
    # fraction of the powered-on fleet's mean; relative detection keeps the
    # repeat pass from folding a deliberately spread fleet onto itself
    underload_fraction: float = 0.65
    # the repeat pass is time-boxed like the rest of the slot optimization:
    # only the lightest few hosts are drained per slot
    max_drains_per_slot: int = 1

    def __post_init__(self):
        if self.slot_seconds <= 0:
            raise ValueError("slot_seconds must be positive")
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}")


@dataclass
class MigrationEvent:
    vm_id: str
    source: int
    target: int
    duration: float  # s, capped at the slot length
    slot: int
    cpu_demand: float


@dataclass
class RunTotals:
    e_it: float = 0.0
    e_cooling: float = 0.0
    e_boot: float = 0.0
    power_on_events: int = 0
    migrations: int = 0

    @property
    def energy(self) -> float:
        return self.e_it + self.e_cooling + self.e_boot


@dataclass
class RunReport:
    slots: list[SlotMetrics]
    totals: RunTotals
    avg_sla: float          # overload-time fraction x migration degradation
    pue: float              # (IT + cooling) / IT, boot energy excluded
    wall_time: float
    policy: str = ""
    # per-slot mean normalized consolidation value and slot energy, consumed
    # by the calibration pipeline
    calib_values: list[float] = field(default_factory=list)
    calib_energy: list[float] = field(default_factory=list)


def _drain_aware_evaluator(cfg: SimConfig, thresholds: dict[int, float]):
    """Global-power evaluator for the dynamic selector that looks one step
    ahead: hosts the underload pass could free do not count against a
    tentative placement."""

    def evaluate(state, placement, fallback=None):
        scratch = state.copy()
        for vm_id, host_id in placement.items():
            scratch.attach(scratch.vms[vm_id], host_id)
        if fallback:
            for vm_id, host_id in fallback.items():
                if vm_id not in placement and host_id is not None:
                    scratch.attach(scratch.vms[vm_id], host_id)
        on = [h for h in scratch.hosts if h.powered_on and h.vms]
        power = sum(h.p_it for h in on)
        if on and cfg.max_drains_per_slot != 0:
            mean_u = sum(h.u_cpu for h in on) / len(on)
            cut = cfg.underload_fraction * mean_u
            drainable = find_underloaded(
                scratch, thresholds=thresholds,
                exclude={h.id for h in scratch.hosts
                         if h.powered_on and h.cpu_sum >= thresholds.get(h.id, 1.0)})
            drainable = [hid for hid in drainable
                         if scratch.hosts[hid].u_cpu < cut]
            if cfg.max_drains_per_slot > 0:
                drainable = drainable[:cfg.max_drains_per_slot]
            power -= sum(scratch.hosts[hid].p_it for hid in drainable)
        cool = models.cop(scratch.setpoint, scratch.params.cooling)
        return power * (1.0 + 1.0 / cool)

    return evaluate


class _Placer:
    """Dispatch one slot's VM batch to the configured policy."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg

    def __call__(self, plan: DataCenterState, vm_ids: list[str],
                 host_ids: list[int], thresholds: dict[int, float],
                 forbidden: dict[str, int], fallback: dict[str, int | None],
                 slot: int) -> policies.PlacementResult:
        cfg = self.cfg
        name = cfg.policy
        if name in _SO_BY_NAME:
            return policies.so_place(
                _SO_BY_NAME[name], vm_ids, host_ids, plan, thresholds,
                cfg.mad.fallback_threshold, forbidden, cfg.sosa,
                cfg.slot_seconds)
        if name in ("mo1", "mo2"):
            on_u = [h.u_cpu for h in plan.hosts if h.powered_on and h.vms]
            cut = cfg.underload_fraction * (sum(on_u) / len(on_u) if on_u else 0.0)
            return policies.mo_place(name, vm_ids, host_ids, plan, thresholds,
                                     cfg.mad.fallback_threshold, forbidden,
                                     cfg.slot_seconds, prefer_utilization=cut)
        if name == "dynso":
            r = policies.dynso_place(vm_ids, host_ids, plan, DEFAULT_DYNSO_LIST,
                                     thresholds, cfg.mad.fallback_threshold,
                                     forbidden, cfg.sosa, cfg.slot_seconds,
                                     fallback,
                                     evaluator=_drain_aware_evaluator(
                                         cfg, thresholds))
            out = policies.PlacementResult(placement=r.placement,
                                           unplaced=r.unplaced,
                                           chosen_norm_values=r.chosen_norm_values)
            return out
        if name == "sa":
            seed = policies.dynso_place(
                vm_ids, host_ids, plan, policies.PLAIN_KINDS + (SoKind.SO8,),
                thresholds, cfg.mad.fallback_threshold, forbidden, cfg.sosa,
                cfg.slot_seconds, fallback)
            sa_vms = [v for v in vm_ids if v in seed.placement]
            out = policies.PlacementResult(
                unplaced=[v for v in vm_ids if v not in seed.placement])
            if sa_vms:
                # per-slot seed derived from the config seed keeps whole runs
                # deterministic without reusing one chain across slots
                sa_cfg = replace(cfg.sa, seed=cfg.sa.seed + 1009 * slot)
                mapping, _ = annealer.sa_place(sa_vms, host_ids, plan,
                                               seed.placement, sa_cfg)
                out.placement = mapping
            return out
        raise ValueError(f"unknown policy {name!r}")


def run(workload: Workload, cfg: SimConfig) -> RunReport:
    """Simulate a workload under one placement policy and cooling strategy.

    Deterministic for a fixed config: placements are deterministic functions
    of state and the annealer derives its per-slot RNG seed from the config.
    Infeasible slots never abort the run; VMs with no feasible host stay
    where they are.
    """
    t_start = time.monotonic()
    spec = cfg.server or default_server_spec()
    params = cfg.models

    vms = {}
    for i, vid in enumerate(workload.vm_ids):
        vms[vid] = VmState(id=vid, cores=int(workload.cores[i]))
    initial_sp = (cfg.cooling.setpoint if isinstance(cfg.cooling, FixedCooling)
                  else cfg.cooling.ceiling)
    state = DataCenterState.build(cfg.hosts, vms, spec, params, initial_sp)
    placer = _Placer(cfg)

    slots: list[SlotMetrics] = []
    totals = RunTotals()
    vm_deg: dict[str, float] = {vid: 0.0 for vid in workload.vm_ids}
    vm_req: dict[str, float] = {vid: 0.0 for vid in workload.vm_ids}
    host_active = [0] * cfg.hosts
    host_saturated = [0] * cfg.hosts
    calib_values: list[float] = []
    calib_energy: list[float] = []

    for t in range(workload.slot_count):
        slot_t0 = time.monotonic()

        # demand update: refresh VM demands and rebuild host aggregates
        for i, vid in enumerate(workload.vm_ids):
            vm = state.vms[vid]
            vm.cpu_demand = float(workload.cpu[i, t])
            vm.ram_used = float(workload.ram[i, t])
            vm.disk_read = float(workload.disk_read[i, t])
            vm.disk_write = float(workload.disk_write[i, t])
            vm.net_bw = float(workload.net_bw[i, t])
        for h in state.hosts:
            h.cpu_sum = h.ram_sum = h.bw_sum = 0.0
            h.disk_read = h.disk_write = 0.0
        for vm in state.vms.values():
            if vm.assigned_host is not None:
                h = state.hosts[vm.assigned_host]
                h.cpu_sum += vm.cpu_demand
                h.ram_sum += vm.ram_used
                h.bw_sum += vm.net_bw
                h.disk_read += vm.disk_read
                h.disk_write += vm.disk_write
        for h in state.hosts:
            state.refresh(h)

        # detection
        thresholds = {}
        for h in state.hosts:
            if h.powered_on:
                h.util_history.append(h.u_cpu)
                thresholds[h.id] = overload_threshold(h.util_history, cfg.mad)
            else:
                thresholds[h.id] = cfg.mad.fallback_threshold

        to_move: list[str] = []
        forbidden: dict[str, int] = {}
        overloaded: set[int] = set()
        for vid, vm in state.vms.items():
            if vm.assigned_host is None:
                to_move.append(vid)
        for h in state.hosts:
            if h.powered_on and h.cpu_sum >= thresholds[h.id]:
                overloaded.add(h.id)
                for vid in select_vms_mmt(h, thresholds[h.id], state,
                                          cfg.migration_reserve):
                    to_move.append(vid)
                    forbidden[vid] = h.id

        fallback = {vid: state.vms[vid].assigned_host for vid in to_move}
        migrations: list[MigrationEvent] = []
        power_on_events = 0

        if to_move:
            plan = state.copy()
            for vid in to_move:
                plan.detach(plan.vms[vid])
            all_hosts = [h.id for h in state.hosts]
            result = placer(plan, to_move, all_hosts, thresholds, forbidden,
                            fallback, t)
            if result.chosen_norm_values:
                calib_values.append(sum(result.chosen_norm_values.values())
                                    / len(result.chosen_norm_values))
            else:
                calib_values.append(1.5)
            try:
                applied = apply_placement(state, result.placement,
                                          enforce_cpu=not cfg.oversubscription)
            except CapacityError:
                # annealer edge case: fall back to keeping VMs in place
                applied = apply_placement(state, {})
            state = applied.state
            power_on_events += applied.power_on_events
            for vm_id, src, dst in applied.moved:
                if src is None:
                    continue
                vm = state.vms[vm_id]
                bw = migration_bandwidth(state.hosts[src], cfg.migration_reserve)
                duration = min(vm.ram_used / bw if bw > 0 else cfg.slot_seconds,
                               cfg.slot_seconds)
                migrations.append(MigrationEvent(vm_id, src, dst, duration, t,
                                                 vm.cpu_demand))
        else:
            calib_values.append(1.5)

        # underload repeat pass: one combined placement for the VMs of every
        # underloaded host, with those hosts excluded as targets (a host
        # slated for power-off cannot receive).  Only hosts whose entire VM
        # set found a new home are actually drained and powered off.
        on_utils = [h.u_cpu for h in state.hosts if h.powered_on]
        under_cut = cfg.underload_fraction * (sum(on_utils) / len(on_utils)
                                              if on_utils else 0.0)
        under = [hid for hid in find_underloaded(state, overloaded, thresholds)
                 if state.hosts[hid].u_cpu < under_cut]
        if cfg.max_drains_per_slot > 0:
            under = under[:cfg.max_drains_per_slot]
        if under:
            under_set = set(under)
            candidates = [x.id for x in state.hosts
                          if x.powered_on and x.id not in under_set]
            drain_vms = []
            source = {}
            for hid in under:
                for vid in sorted(state.hosts[hid].vms):
                    drain_vms.append(vid)
                    source[vid] = hid
            if candidates and drain_vms:
                plan = state.copy()
                for vid in drain_vms:
                    plan.detach(plan.vms[vid])
                res = placer(plan, drain_vms, candidates, thresholds,
                             source, dict(source), t)
                placed_by_host: dict[int, list[str]] = {}
                for vid in res.placement:
                    placed_by_host.setdefault(source[vid], []).append(vid)
                moves = {}
                for hid, vids in placed_by_host.items():
                    if len(vids) == len(state.hosts[hid].vms):
                        for vid in vids:
                            moves[vid] = res.placement[vid]
                if moves:
                    try:
                        applied = apply_placement(
                            state, moves, enforce_cpu=not cfg.oversubscription)
                    except CapacityError:
                        applied = None
                    if applied is not None:
                        state = applied.state
                        power_on_events += applied.power_on_events
                        for vm_id, src, dst in applied.moved:
                            vm = state.vms[vm_id]
                            bw = migration_bandwidth(state.hosts[src],
                                                     cfg.migration_reserve)
                            duration = min(
                                vm.ram_used / bw if bw > 0 else cfg.slot_seconds,
                                cfg.slot_seconds)
                            migrations.append(MigrationEvent(
                                vm_id, src, dst, duration, t, vm.cpu_demand))

        # cooling setpoint for the slot, then energy accounting
        sp = cooling_setpoint(state, cfg.cooling)
        state.set_setpoint(sp)

        mig_energy, slot_pdm = migration_cost(migrations, state,
                                              cfg.slot_seconds,
                                              cfg.migration_double_power)
        for ev in migrations:
            vm_deg[ev.vm_id] += 0.1 * ev.cpu_demand * ev.duration

        p_it = state.total_it_power()
        e_it = p_it * cfg.slot_seconds * KWH_PER_WS + mig_energy
        e_cooling = e_it / models.cop(sp, params.cooling)
        e_boot = power_on_events * spec.e_boot

        active = saturated = 0
        for h in state.hosts:
            if h.powered_on:
                active += 1
                host_active[h.id] += 1
                if h.cpu_sum >= 1.0 - 1e-12:
                    saturated += 1
                    host_saturated[h.id] += 1
        for vid, vm in state.vms.items():
            vm_req[vid] += vm.cpu_demand * cfg.slot_seconds

        slot_otf = saturated / active if active else 0.0
        m = SlotMetrics(
            slot=t, e_it=e_it, e_cooling=e_cooling, e_boot=e_boot,
            power_on_events=power_on_events, migrations=len(migrations),
            sla_otf=slot_otf, sla_pdm=slot_pdm,
            sla_violation=slot_otf * slot_pdm,
            pue=(e_it + e_cooling) / e_it if e_it > 0 else 0.0,
            setpoint=sp, wall_time=time.monotonic() - slot_t0)
        slots.append(m)
        calib_energy.append(e_it + e_cooling)

        totals.e_it += e_it
        totals.e_cooling += e_cooling
        totals.e_boot += e_boot
        totals.power_on_events += power_on_events
        totals.migrations += len(migrations)

    otf_values = [host_saturated[i] / host_active[i]
                  for i in range(cfg.hosts) if host_active[i] > 0]
    otf = sum(otf_values) / len(otf_values) if otf_values else 0.0
    pdm_values = [vm_deg[vid] / vm_req[vid]
                  for vid in workload.vm_ids if vm_req[vid] > 0]
    pdm = sum(pdm_values) / len(pdm_values) if pdm_values else 0.0

    return RunReport(
        slots=slots, totals=totals, avg_sla=otf * pdm,
        pue=(totals.e_it + totals.e_cooling) / totals.e_it if totals.e_it > 0 else 0.0,
        wall_time=time.monotonic() - t_start, policy=cfg.policy,
        calib_values=calib_values, calib_energy=calib_energy)


def migration_cost(events: list[MigrationEvent], state: DataCenterState,
                   slot_seconds: float, double_power: bool = True) -> tuple[float, float]:
    """Energy overhead (kWh) and slot-level degradation of a migration batch.

    During a migration the VM effectively runs on both sides, so its dynamic
    power at the target's operating point is charged once more for the
    migration duration.  Degradation accrues 10 % of the VM's demand over the
    migration, normalized by the total demand requested this slot.
    """
    p = state.params
    extra_ws = 0.0
    deg = 0.0
    for ev in events:
        if double_power:
            h = state.hosts[ev.target]
            mode = h.mode if h.mode else h.spec.dvfs_table[0]
            p_dyn = models.dynamic_power(mode.v_dd, mode.f_op, ev.cpu_demand,
                                         p.power)
            extra_ws += p_dyn * ev.duration
        deg += 0.1 * ev.cpu_demand * ev.duration
    requested = sum(vm.cpu_demand for vm in state.vms.values()) * slot_seconds
    pdm = deg / requested if requested > 0 else 0.0
    return extra_ws * KWH_PER_WS, pdm


def sla_metric(report: RunReport) -> float:
    """Run-level SLA violation (already the product OTF x PDM)."""
    return report.avg_sla
