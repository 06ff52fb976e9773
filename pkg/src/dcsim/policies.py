"""Placement policies: single-objective BFD variants, multi-objective Pareto
selection, the regression-backed composite value, per-slot dynamic selection
and the second-worst-fit baseline.

All policies share the same skeleton: VMs in decreasing demand order, each
assigned to the feasible host minimizing the policy's consolidation value,
with ties broken by lowest host id so every policy is a deterministic
function of the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import models
from .core import U_MEM_FLOOR, DataCenterState, HostState, ObjectiveVector, VmState
from .models import KWH_PER_WS


class SoKind(str, Enum):
    SO1 = "so1"        # min power increment (PABFD)
    SO2 = "so2"        # min host power
    SO3 = "so3"        # min 1 / (u_cpu - dfreq)
    SO4 = "so4"        # min memory temperature
    SO5 = "so5"        # min frequency increment
    SO6 = "so6"        # min 1 / u_cpu
    SO7 = "so7"        # min host + cooling power
    SO8 = "so8"        # min normalized |SO3| + |SO5| + |SO6|
    SO_SA = "sosa"     # regression of the annealer's global energy
    SWFDVP = "swfdvp"  # second-best under max power increment

PABFD = SoKind.SO1

PLAIN_KINDS = (SoKind.SO1, SoKind.SO2, SoKind.SO3, SoKind.SO4, SoKind.SO5,
               SoKind.SO6, SoKind.SO7)
DEFAULT_DYNSO_LIST = (SoKind.SO1, SoKind.SO2, SoKind.SO3, SoKind.SO4,
                      SoKind.SO5, SoKind.SO6, SoKind.SO7, SoKind.SO8,
                      SoKind.SO_SA)


@dataclass(frozen=True)
class SoSaModel:
    """Coefficients mapping normalized SO3/SO6 values and predicted global
    slot energy (kWh) onto the annealer's expected global energy."""

    a3: float = 0.1603
    a6: float = 0.7724
    c: float = 0.0102


class GuardError(ValueError):
    """A consolidation value is undefined for this candidate (skip it)."""


@dataclass(frozen=True)
class CandidateView:
    """Model outputs for placing one VM on one host."""

    host_id: int
    u_after: float           # post-allocation utilization, clamped to 1
    dfreq: float             # governor frequency increment over f_max
    p_before: float          # W (0 for a powered-off host)
    p_after: float           # W
    t_mem_after: float       # K
    p_cooling_after: float   # W


def evaluate_candidate(vm: VmState, host: HostState, state: DataCenterState) -> CandidateView:
    """Predict the post-allocation view of one host for one VM."""
    p = state.params
    spec = host.spec
    u_after = min(1.0, host.cpu_sum + vm.cpu_demand)
    mode_after = models.governor_frequency(u_after, spec.dvfs_table)
    f_before = host.mode.f_op if host.mode else spec.dvfs_table[0].f_op
    # frequency increment normalized by the top frequency, so it shares the
    # [0,1] scale of the utilization it is traded against
    dfreq = (mode_after.f_op - f_before) / spec.dvfs_table[-1].f_op
    u_mem_after = min(100.0, max(U_MEM_FLOOR, 100.0 * (host.ram_sum + vm.ram_used)
                                 / spec.ram_capacity))
    t_mem_after = models.mem_temperature(host.t_inlet, u_mem_after, p.thermal)
    fan = p.fan_speed(u_after, spec.fan_speed_default)
    p_after = (models.host_power_terms(mode_after.v_dd, mode_after.f_op, u_after,
                                       t_mem_after, fan, p.power)
               + models.disk_power(host.disk_read + vm.disk_read,
                                   host.disk_write + vm.disk_write, p.disk))
    p_before = host.p_it if (host.powered_on and host.vms) else 0.0
    p_cooling = p_after / models.cop(host.t_inlet, p.cooling)
    return CandidateView(host_id=host.id, u_after=u_after, dfreq=dfreq,
                         p_before=p_before, p_after=p_after,
                         t_mem_after=t_mem_after, p_cooling_after=p_cooling)


def so_value_from_view(kind: SoKind, view: CandidateView) -> float:
    """Scalar consolidation value of one candidate for the plain SO kinds."""
    if kind == SoKind.SO1:
        return view.p_after - view.p_before
    if kind == SoKind.SO2:
        return view.p_after
    if kind == SoKind.SO3:
        denom = view.u_after - view.dfreq
        if denom <= 0.0:
            raise GuardError(f"u_cpu - dfreq = {denom} <= 0 on host {view.host_id}")
        return 1.0 / denom
    if kind == SoKind.SO4:
        return view.t_mem_after
    if kind == SoKind.SO5:
        return view.dfreq
    if kind == SoKind.SO6:
        if view.u_after <= 0.0:
            raise GuardError(f"u_cpu = 0 on host {view.host_id}")
        return 1.0 / view.u_after
    if kind == SoKind.SO7:
        return view.p_after + view.p_cooling_after
    raise ValueError(f"{kind} has no per-candidate scalar value")


def so_value(kind: SoKind, vm: VmState, host: HostState,
             state: DataCenterState) -> float:
    return so_value_from_view(kind, evaluate_candidate(vm, host, state))


def objective_vector(view: CandidateView) -> ObjectiveVector:
    """The 7-component multi-objective vector of one candidate."""
    return ObjectiveVector(
        d_p_host=view.p_after - view.p_before,
        p_host=view.p_after,
        inv_u_minus_dfreq=so_value_from_view(SoKind.SO3, view),
        t_mem=view.t_mem_after,
        d_freq=view.dfreq,
        inv_u=so_value_from_view(SoKind.SO6, view),
        p_host_plus_cooling=view.p_after + view.p_cooling_after)


def normalize_band(values: np.ndarray) -> np.ndarray:
    """Map values onto [1, 2]: min -> 1, max -> 2, constant -> 1.5.

    A spread at rounding-noise level counts as constant; stretching it onto
    [1, 2] would turn float dust into a full-scale objective.
    """
    lo = values.min()
    hi = values.max()
    if hi - lo <= 1e-9 * max(abs(lo), abs(hi), 1e-300):
        return np.full_like(values, 1.5)
    return 1.0 + (values - lo) / (hi - lo)


def so_sa_combine(n3: float, e3: float, n6: float, e6: float,
                  m: SoSaModel = SoSaModel()) -> float:
    return m.a3 * n3 * e3 + m.a6 * n6 * e6 + m.c


def pareto_front(vectors) -> list[int]:
    """Indices of the non-dominated vectors (component-wise minimization)."""
    v = np.asarray(vectors, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    n = len(v)
    if n == 0:
        return []
    le = (v[:, None, :] <= v[None, :, :]).all(axis=2)
    lt = (v[:, None, :] < v[None, :, :]).any(axis=2)
    dominated = (le & lt).any(axis=0)
    return [i for i in range(n) if not dominated[i]]


@dataclass
class CandidateEvaluation:
    """One host's evaluation while placing one VM."""

    host_id: int
    so_values: ObjectiveVector
    normalized: ObjectiveVector
    predicted_global_energy: float  # kWh over the slot


def candidate_evaluations(vm: VmState, host_ids, state: DataCenterState,
                          slot_seconds: float = 300.0) -> list[CandidateEvaluation]:
    """Full per-host evaluations for one VM: raw objective vectors, their
    [1,2] normalization over the candidate set, and the predicted whole-fleet
    slot energy.  Hosts tripping a guard are skipped."""
    views = []
    for hid in sorted(host_ids):
        view = evaluate_candidate(vm, state.hosts[hid], state)
        try:
            views.append((hid, view, objective_vector(view)))
        except GuardError:
            continue
    if not views:
        return []
    raw = np.array([vec.as_tuple() for _, _, vec in views])
    norm = np.column_stack([normalize_band(raw[:, c]) for c in range(raw.shape[1])])
    cool = models.cop(state.setpoint, state.params.cooling)
    total_p = effective_it_power(state)
    out = []
    for k, (hid, view, vec) in enumerate(views):
        power = (total_p - view.p_before + view.p_after) * (1.0 + 1.0 / cool)
        out.append(CandidateEvaluation(
            host_id=hid, so_values=vec,
            normalized=ObjectiveVector(*norm[k]),
            predicted_global_energy=power * slot_seconds * KWH_PER_WS))
    return out


@dataclass
class PlacementResult:
    placement: dict[str, int] = field(default_factory=dict)
    unplaced: list[str] = field(default_factory=list)
    # mean-normalized consolidation value of the chosen candidates, used for
    # calibration logging (1.5 when the kind has no per-candidate scalar)
    chosen_norm_values: dict[str, float] = field(default_factory=dict)


class _Fleet:
    """Vectorized candidate evaluation over a fixed host-id set.

    Mirrors the scratch state's host aggregates as numpy arrays so one VM's
    candidates are costed in a handful of vector operations, and keeps the
    fleet-wide IT power total for global-energy predictions.
    """

    def __init__(self, state: DataCenterState, host_ids: list[int],
                 thresholds: dict[int, float], default_threshold: float):
        self.state = state
        self.ids = np.array(sorted(host_ids), dtype=int)
        p = state.params
        spec0 = state.hosts[self.ids[0]].spec if len(self.ids) else None
        self.freqs = np.array([m.f_op for m in spec0.dvfs_table]) if spec0 else None
        self.volts = np.array([m.v_dd for m in spec0.dvfs_table]) if spec0 else None
        n = len(self.ids)
        self.cpu_sum = np.zeros(n)
        self.ram_sum = np.zeros(n)
        self.bw_sum = np.zeros(n)
        self.disk_r = np.zeros(n)
        self.disk_w = np.zeros(n)
        self.p_before = np.zeros(n)
        self.f_before = np.zeros(n)
        self.ram_cap = np.zeros(n)
        self.bw_cap = np.zeros(n)
        self.fan_default = np.zeros(n)
        self.thr = np.zeros(n)
        self.active = np.zeros(n, dtype=bool)
        self.row = {}
        for j, hid in enumerate(self.ids):
            self.row[int(hid)] = j
            self._load(j, state.hosts[hid], thresholds, default_threshold)
        self.t_inlet = state.setpoint
        self.cop = models.cop(self.t_inlet, p.cooling)
        self.total_p = effective_it_power(state)
        self.params = p

    def _load(self, j, h, thresholds, default_threshold):
        self.cpu_sum[j] = h.cpu_sum
        self.ram_sum[j] = h.ram_sum
        self.bw_sum[j] = h.bw_sum
        self.disk_r[j] = h.disk_read
        self.disk_w[j] = h.disk_write
        # an empty host is costed like a cold one: the engine powers it off
        self.p_before[j] = h.p_it if (h.powered_on and h.vms) else 0.0
        self.f_before[j] = h.mode.f_op if h.mode else h.spec.dvfs_table[0].f_op
        self.active[j] = bool(h.powered_on and h.vms)
        self.ram_cap[j] = h.spec.ram_capacity
        self.bw_cap[j] = h.spec.bw_capacity
        self.fan_default[j] = h.spec.fan_speed_default
        self.thr[j] = thresholds.get(h.id, default_threshold)

    def place(self, vm: VmState, host_id: int) -> None:
        self.state.attach(vm, host_id)
        h = self.state.hosts[host_id]
        j = self.row[host_id]
        old_p = self.p_before[j]
        self.cpu_sum[j] = h.cpu_sum
        self.ram_sum[j] = h.ram_sum
        self.bw_sum[j] = h.bw_sum
        self.disk_r[j] = h.disk_read
        self.disk_w[j] = h.disk_write
        self.p_before[j] = h.p_it
        self.f_before[j] = h.mode.f_op
        self.active[j] = True
        self.total_p += h.p_it - old_p

    def table(self, vm: VmState, forbidden_host: int | None = None) -> dict:
        """Candidate arrays for one VM over the fleet's host ids."""
        p = self.params
        u_raw = self.cpu_sum + vm.cpu_demand
        feasible = ((u_raw < self.thr)
                    & (self.ram_sum + vm.ram_used <= self.ram_cap + 1e-9)
                    & (self.bw_sum + vm.net_bw <= self.bw_cap + 1e-9))
        if forbidden_host is not None and forbidden_host in self.row:
            feasible[self.row[forbidden_host]] = False
        u_after = np.minimum(1.0, u_raw)
        f_max = self.freqs[-1]
        idx = np.searchsorted(self.freqs, u_after * f_max - 1e-12, side="left")
        idx = np.minimum(idx, len(self.freqs) - 1)
        f_after = self.freqs[idx]
        v_after = self.volts[idx]
        dfreq = (f_after - self.f_before) / f_max
        u_mem = np.minimum(100.0, np.maximum(
            U_MEM_FLOOR, 100.0 * (self.ram_sum + vm.ram_used) / self.ram_cap))
        t_mem = p.thermal.mem_k1 * self.t_inlet + 2.0 * p.thermal.mem_k2 * np.log(u_mem)
        if p.fan_map == "linear":
            fan = self.fan_default + (p.fan_linear_max - self.fan_default) * u_after
        else:
            fan = self.fan_default
        p_after = (p.power.c_dyn * v_after * v_after * f_after * u_after
                   + p.power.c_mem * t_mem * t_mem
                   + p.power.c_fan * fan ** 3
                   + p.disk.c_read * (self.disk_r + vm.disk_read)
                   + p.disk.c_write * (self.disk_w + vm.disk_write))
        return {
            "feasible": feasible,
            "u_after": u_after,
            "dfreq": dfreq,
            "p_before": self.p_before.copy(),
            "p_after": p_after,
            "t_mem": t_mem,
            "p_cool": p_after / self.cop,
        }

    def global_power(self, tab: dict) -> np.ndarray:
        """Fleet IT+cooling power (W) with the VM on each candidate."""
        p_it = self.total_p - tab["p_before"] + tab["p_after"]
        return p_it * (1.0 + 1.0 / self.cop)

    def global_energy_kwh(self, tab: dict, slot_seconds: float) -> np.ndarray:
        return self.global_power(tab) * slot_seconds * KWH_PER_WS


def _values_for_kind(kind: SoKind, tab: dict, fleet: _Fleet, vm: VmState,
                     sosa: SoSaModel, slot_seconds: float):
    """(values, valid_mask) over the fleet for one VM; NaN where invalid."""
    feas = tab["feasible"]
    if kind == SoKind.SO1:
        return tab["p_after"] - tab["p_before"], feas
    if kind == SoKind.SO2:
        return tab["p_after"], feas
    if kind == SoKind.SO4:
        return tab["t_mem"], feas
    if kind == SoKind.SO5:
        return tab["dfreq"], feas
    if kind == SoKind.SO7:
        return tab["p_after"] + tab["p_cool"], feas

    denom3 = tab["u_after"] - tab["dfreq"]
    valid3 = feas & (denom3 > 0.0)
    valid6 = feas & (tab["u_after"] > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        so3 = np.where(valid3, 1.0 / np.where(valid3, denom3, 1.0), np.nan)
        so6 = np.where(valid6, 1.0 / np.where(valid6, tab["u_after"], 1.0), np.nan)
    if kind == SoKind.SO3:
        return so3, valid3
    if kind == SoKind.SO6:
        return so6, valid6

    valid = valid3 & valid6
    if not valid.any():
        return np.full_like(so3, np.nan), valid
    if kind == SoKind.SO8:
        n3 = normalize_band(so3[valid])
        n5 = normalize_band(tab["dfreq"][valid])
        n6 = normalize_band(so6[valid])
        vals = np.full_like(so3, np.nan)
        vals[valid] = n3 + n5 + n6
        return vals, valid
    if kind == SoKind.SO_SA:
        n3 = normalize_band(so3[valid])
        n6 = normalize_band(so6[valid])
        energy = fleet.global_energy_kwh(tab, slot_seconds)[valid]
        vals = np.full_like(so3, np.nan)
        vals[valid] = sosa.a3 * n3 * energy + sosa.a6 * n6 * energy + sosa.c
        return vals, valid
    raise ValueError(f"unsupported kind {kind}")


def _argmin_host(values: np.ndarray, valid: np.ndarray, ids: np.ndarray):
    if not valid.any():
        return None
    masked = np.where(valid, values, np.inf)
    j = int(np.argmin(masked))  # ids ascending, so first minimum = lowest id
    return j


def _sorted_vms(vm_list, state) -> list[VmState]:
    vms = [state.vms[v] if isinstance(v, str) else v for v in vm_list]
    return sorted(vms, key=lambda vm: (-vm.cpu_demand, vm.id))


def so_place(kind: SoKind, vm_list, host_list, state: DataCenterState,
             thresholds: dict[int, float] | None = None,
             default_threshold: float = 0.9,
             forbidden: dict[str, int] | None = None,
             sosa: SoSaModel | None = None,
             slot_seconds: float = 300.0) -> PlacementResult:
    """Best-fit-decreasing placement under one SO consolidation value.

    ``state`` must hold the VMs of ``vm_list`` detached from any host; the
    placement is accumulated on a scratch copy so successive VMs see the
    effect of earlier assignments.  VMs with no feasible host are reported
    unplaced.
    """
    if kind == SoKind.SWFDVP:
        return swfdvp_place(vm_list, host_list, state, thresholds,
                            default_threshold, forbidden)
    scratch = state.copy()
    fleet = _Fleet(scratch, list(host_list), thresholds or {}, default_threshold)
    sosa = sosa or SoSaModel()
    forbidden = forbidden or {}
    result = PlacementResult()
    for vm in _sorted_vms(vm_list, scratch):
        tab = fleet.table(vm, forbidden.get(vm.id))
        values, valid = _values_for_kind(kind, tab, fleet, vm, sosa, slot_seconds)
        j = _argmin_host(values, valid, fleet.ids)
        if j is None:
            result.unplaced.append(vm.id)
            continue
        host_id = int(fleet.ids[j])
        result.placement[vm.id] = host_id
        norm = normalize_band(values[valid])
        result.chosen_norm_values[vm.id] = float(
            norm[int(np.nonzero(valid)[0].tolist().index(j))]) if valid.any() else 1.5
        fleet.place(vm, host_id)
    return result


def so_sa_value(vm: VmState, host: HostState, state: DataCenterState,
                m: SoSaModel = SoSaModel(), candidates=None,
                slot_seconds: float = 300.0) -> float:
    """Composite consolidation value of one host within a candidate set.

    Normalization runs over ``candidates`` (host ids, defaulting to just the
    given host, which degenerates both normalized values to 1.5).
    """
    ids = sorted(set(candidates or [host.id]) | {host.id})
    so3 = []
    so6 = []
    energies = []
    cool = models.cop(state.setpoint, state.params.cooling)
    total_p = effective_it_power(state)
    for hid in ids:
        view = evaluate_candidate(vm, state.hosts[hid], state)
        so3.append(so_value_from_view(SoKind.SO3, view))
        so6.append(so_value_from_view(SoKind.SO6, view))
        p_global = (total_p - view.p_before + view.p_after) * (1.0 + 1.0 / cool)
        energies.append(p_global * slot_seconds * KWH_PER_WS)
    n3 = normalize_band(np.array(so3))
    n6 = normalize_band(np.array(so6))
    k = ids.index(host.id)
    return so_sa_combine(float(n3[k]), energies[k], float(n6[k]), energies[k], m)


def mo_place(kind: str, vm_list, host_list, state: DataCenterState,
             thresholds: dict[int, float] | None = None,
             default_threshold: float = 0.9,
             forbidden: dict[str, int] | None = None,
             slot_seconds: float = 300.0,
             prefer_utilization: float | None = None) -> PlacementResult:
    """Multi-objective placement over the Pareto front of the 7 SO values.

    ``kind`` is "mo1" (min predicted global IT+cooling power) or "mo2"
    (min Euclidean norm of the [1,2]-normalized objective vector).
    Candidates are tiered: hosts already running VMs first (identical cold
    candidates would degenerate the [1,2] normalization), and within those,
    hosts at or above ``prefer_utilization`` (hosts below it are queued for
    draining and only receive when nothing else fits).
    """
    if kind not in ("mo1", "mo2"):
        raise ValueError(f"unknown MO kind {kind}")
    scratch = state.copy()
    fleet = _Fleet(scratch, list(host_list), thresholds or {}, default_threshold)
    forbidden = forbidden or {}
    result = PlacementResult()
    for vm in _sorted_vms(vm_list, scratch):
        tab = fleet.table(vm, forbidden.get(vm.id))
        denom3 = tab["u_after"] - tab["dfreq"]
        valid = tab["feasible"] & (denom3 > 0.0) & (tab["u_after"] > 0.0)
        if (valid & fleet.active).any():
            valid = valid & fleet.active
            if prefer_utilization is not None:
                keep = valid & (fleet.cpu_sum >= prefer_utilization)
                if keep.any():
                    valid = keep
        if not valid.any():
            result.unplaced.append(vm.id)
            continue
        raw = np.column_stack([
            (tab["p_after"] - tab["p_before"])[valid],
            tab["p_after"][valid],
            1.0 / denom3[valid],
            tab["t_mem"][valid],
            tab["dfreq"][valid],
            1.0 / tab["u_after"][valid],
            (tab["p_after"] + tab["p_cool"])[valid],
        ])
        normalized = np.column_stack([normalize_band(raw[:, c]) for c in range(7)])
        front = pareto_front(raw)
        if kind == "mo1":
            score = fleet.global_power(tab)[valid][front]
        else:
            score = np.sqrt((normalized[front] ** 2).sum(axis=1))
        pick = front[int(np.argmin(score))]
        host_id = int(fleet.ids[np.nonzero(valid)[0][pick]])
        result.placement[vm.id] = host_id
        result.chosen_norm_values[vm.id] = 1.5
        fleet.place(vm, host_id)
    return result


def swfdvp_place(vm_list, host_list, state: DataCenterState,
                 thresholds: dict[int, float] | None = None,
                 default_threshold: float = 0.9,
                 forbidden: dict[str, int] | None = None) -> PlacementResult:
    """Second-worst-fit baseline: rank feasible hosts by decreasing power
    increment and take the second one (the only one when the set is a
    singleton)."""
    scratch = state.copy()
    fleet = _Fleet(scratch, list(host_list), thresholds or {}, default_threshold)
    forbidden = forbidden or {}
    result = PlacementResult()
    for vm in _sorted_vms(vm_list, scratch):
        tab = fleet.table(vm, forbidden.get(vm.id))
        valid = tab["feasible"]
        if not valid.any():
            result.unplaced.append(vm.id)
            continue
        dp = (tab["p_after"] - tab["p_before"])[valid]
        ids = fleet.ids[valid]
        order = sorted(range(len(ids)), key=lambda i: (-dp[i], ids[i]))
        pick = order[1] if len(order) >= 2 else order[0]
        host_id = int(ids[pick])
        result.placement[vm.id] = host_id
        result.chosen_norm_values[vm.id] = 1.5
        fleet.place(vm, host_id)
    return result


@dataclass
class DynSoResult:
    placement: dict[str, int]
    unplaced: list[str]
    kind: SoKind
    global_power: float  # W, IT + cooling of the winning tentative state
    chosen_norm_values: dict[str, float] = field(default_factory=dict)


def effective_it_power(state: DataCenterState) -> float:
    """Fleet IT power with the power-off sweep applied: an empty host draws
    nothing because the engine shuts it down at the end of the pass."""
    return sum(h.p_it for h in state.hosts if h.powered_on and h.vms)


def evaluate_global_power(state: DataCenterState, placement: dict[str, int],
                          fallback: dict[str, int | None] | None = None) -> float:
    """IT + cooling power (W) of the state resulting from a placement.

    Unplaced VMs are restored to their fallback host when one is given, which
    mirrors how the engine treats them (they stay put).
    """
    scratch = state.copy()
    for vm_id, host_id in placement.items():
        scratch.attach(scratch.vms[vm_id], host_id)
    if fallback:
        for vm_id, host_id in fallback.items():
            if vm_id not in placement and host_id is not None:
                scratch.attach(scratch.vms[vm_id], host_id)
    cool = models.cop(scratch.setpoint, scratch.params.cooling)
    return effective_it_power(scratch) * (1.0 + 1.0 / cool)


def dynso_place(vm_list, host_list, state: DataCenterState,
                so_list=DEFAULT_DYNSO_LIST,
                thresholds: dict[int, float] | None = None,
                default_threshold: float = 0.9,
                forbidden: dict[str, int] | None = None,
                sosa: SoSaModel | None = None,
                slot_seconds: float = 300.0,
                fallback: dict[str, int | None] | None = None,
                evaluator=None) -> DynSoResult:
    """Run every SO policy and keep the one with the lowest global power.

    ``evaluator`` computes the power of the resulting state and defaults to
    :func:`evaluate_global_power`; the engine passes one that also accounts
    for the hosts its underload pass would free.  Ties go to the earlier
    kind in ``so_list``.
    """
    if not so_list:
        raise ValueError("so_list must not be empty")
    evaluator = evaluator or evaluate_global_power
    best = None
    for kind in so_list:
        r = so_place(kind, vm_list, host_list, state, thresholds,
                     default_threshold, forbidden, sosa, slot_seconds)
        power = evaluator(state, r.placement, fallback)
        if best is None or power < best.global_power:
            best = DynSoResult(placement=r.placement, unplaced=r.unplaced,
                               kind=kind, global_power=power,
                               chosen_norm_values=r.chosen_norm_values)
    return best
