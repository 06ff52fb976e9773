"""Workload ingestion and synthesis.

Traces follow the fastStorage column layout (one delimited file per VM).  A
:class:`Workload` keeps everything as dense per-slot arrays on a shared grid;
missing samples are forward-filled by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRACE_COLUMNS = (
    "Timestamp [s]", "CPU cores", "CPU capacity provisioned [MHZ]",
    "CPU usage [MHZ]", "CPU usage [%]", "Memory capacity provisioned [KB]",
    "Memory usage [KB]", "Disk read throughput [KB/s]",
    "Disk write throughput [KB/s]", "Network received throughput [KB/s]",
    "Network transmitted throughput [KB/s]",
)

KB_PER_MB = 1024.0


class TraceError(Exception):
    pass


@dataclass(frozen=True)
class TraceSample:
    """One monitoring row of a VM trace."""

    timestamp: float        # s
    cpu_cores: int
    cpu_provisioned: float  # MHz
    cpu_usage: float        # percent of provisioned
    ram_provisioned: float  # MB
    ram_used: float         # MB
    disk_read: float        # KB/s
    disk_write: float       # KB/s
    net_rx: float = 0.0     # KB/s
    net_tx: float = 0.0     # KB/s


class Workload:
    """Per-VM demand series on a shared slot grid.

    ``cpu`` holds demand as a fraction of one host's full-capacity CPU; the
    remaining arrays carry MB, KB/s and MB/s as produced by the loader.
    """

    def __init__(self, vm_ids: list[str], cpu: np.ndarray, ram: np.ndarray,
                 disk_read: np.ndarray, disk_write: np.ndarray,
                 net_bw: np.ndarray, cores: np.ndarray,
                 ram_provisioned: np.ndarray, slot_seconds: int = 300):
        self.vm_ids = vm_ids
        self.cpu = cpu
        self.ram = ram
        self.disk_read = disk_read
        self.disk_write = disk_write
        self.net_bw = net_bw
        self.cores = cores
        self.ram_provisioned = ram_provisioned
        self.slot_seconds = slot_seconds

    @property
    def vm_count(self) -> int:
        return len(self.vm_ids)

    @property
    def slot_count(self) -> int:
        return self.cpu.shape[1] if self.cpu.size else 0

    def aggregate_cpu(self) -> np.ndarray:
        return self.cpu.sum(axis=0)

    @property
    def variability(self) -> float:
        return variability_score(self)


def variability_score(w: Workload) -> float:
    """Total variation of the aggregate CPU series over its mean, in percent."""
    agg = w.aggregate_cpu()
    if agg.size < 2:
        raise TraceError("variability needs at least 2 slots")
    mean = float(agg.mean())
    if mean == 0.0:
        return 0.0
    tv = float(np.abs(np.diff(agg)).sum())
    return 100.0 * tv / mean


def _parse_trace_file(path: Path) -> list[TraceSample]:
    text = path.read_text()
    delim = ";" if text.count(";") >= text.count(",") else ","
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(delim)]
        if lineno == 1 and not _is_number(fields[0]):
            continue  # header
        try:
            vals = [float(f) if f else 0.0 for f in fields]
        except ValueError as e:
            raise TraceError(f"{path.name}:{lineno}: {e}") from None
        if len(vals) < 9:
            raise TraceError(f"{path.name}:{lineno}: expected >=9 columns, got {len(vals)}")
        vals += [0.0] * (11 - len(vals))
        samples.append(TraceSample(
            timestamp=vals[0], cpu_cores=int(vals[1]), cpu_provisioned=vals[2],
            cpu_usage=vals[4], ram_provisioned=vals[5] / KB_PER_MB,
            ram_used=vals[6] / KB_PER_MB, disk_read=vals[7], disk_write=vals[8],
            net_rx=vals[9], net_tx=vals[10]))
    if not samples:
        raise TraceError(f"{path.name}: no data rows")
    return samples


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _normalize_timestamps(samples: list[TraceSample], slot_seconds: int,
                          name: str) -> list[TraceSample]:
    ts = [s.timestamp for s in samples]
    if len(ts) >= 2 and ts[1] - ts[0] >= slot_seconds * 999:
        ts = [t / 1000.0 for t in ts]  # milliseconds
    base = ts[0]
    out = []
    for s, t in zip(samples, ts):
        off = t - base
        if abs(off / slot_seconds - round(off / slot_seconds)) > 1e-6:
            raise TraceError(
                f"{name}: timestamp {t} not aligned to the {slot_seconds} s grid")
        out.append(TraceSample(timestamp=t, cpu_cores=s.cpu_cores,
                               cpu_provisioned=s.cpu_provisioned, cpu_usage=s.cpu_usage,
                               ram_provisioned=s.ram_provisioned, ram_used=s.ram_used,
                               disk_read=s.disk_read, disk_write=s.disk_write,
                               net_rx=s.net_rx, net_tx=s.net_tx))
    return out


def load_traces(directory, slot_seconds: int = 300,
                host_capacity_mhz: float = 4 * 2400.0,
                fill: str = "ffill") -> Workload:
    """Load one trace file per VM from a directory into a Workload.

    CPU demand is normalized against the host's full capacity at top
    frequency: demand = usage% * provisioned MHz / host capacity MHz.
    ``fill`` selects the gap policy: "ffill" forward-fills each VM onto the
    union grid (leading gaps repeat the first sample); "drop" restricts the
    grid to slots covered by every VM.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise TraceError(f"trace directory not found: {directory}")
    files = sorted(p for p in directory.iterdir()
                   if p.is_file() and p.suffix.lower() in (".csv", ".txt"))
    if not files:
        raise TraceError(f"no trace files in {directory}")

    per_vm = {}
    for path in files:
        samples = _normalize_timestamps(_parse_trace_file(path), slot_seconds, path.name)
        per_vm[path.stem] = samples

    t0 = min(s[0].timestamp for s in per_vm.values())
    t1 = max(s[-1].timestamp for s in per_vm.values())
    if fill == "drop":
        t0 = max(s[0].timestamp for s in per_vm.values())
        t1 = min(s[-1].timestamp for s in per_vm.values())
        if t1 < t0:
            raise TraceError("no common slot window across VMs (fill=drop)")
    n_slots = int(round((t1 - t0) / slot_seconds)) + 1

    vm_ids = list(per_vm)
    n = len(vm_ids)
    cpu = np.zeros((n, n_slots))
    ram = np.zeros((n, n_slots))
    disk_r = np.zeros((n, n_slots))
    disk_w = np.zeros((n, n_slots))
    net = np.zeros((n, n_slots))
    cores = np.zeros(n, dtype=int)
    ram_prov = np.zeros(n)

    for i, vid in enumerate(vm_ids):
        samples = per_vm[vid]
        cores[i] = max(1, samples[0].cpu_cores)
        ram_prov[i] = max(s.ram_provisioned for s in samples)
        by_slot = {int(round((s.timestamp - t0) / slot_seconds)): s for s in samples}
        last = samples[0]
        for t in range(n_slots):
            s = by_slot.get(t, last)
            last = s
            cpu[i, t] = (s.cpu_usage / 100.0) * s.cpu_provisioned / host_capacity_mhz
            ram[i, t] = s.ram_used
            disk_r[i, t] = s.disk_read
            disk_w[i, t] = s.disk_write
            net[i, t] = (s.net_rx + s.net_tx) / KB_PER_MB

    return Workload(vm_ids, cpu, ram, disk_r, disk_w, net, cores, ram_prov,
                    slot_seconds)


def save_traces(w: Workload, directory) -> None:
    """Re-export a workload as one delimited trace file per VM."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cap_mhz = 4 * 2400.0
    for i, vid in enumerate(w.vm_ids):
        prov_mhz = w.cores[i] * 2400.0
        lines = [";".join(TRACE_COLUMNS)]
        for t in range(w.slot_count):
            usage_pct = 100.0 * w.cpu[i, t] * cap_mhz / prov_mhz
            row = (t * w.slot_seconds, w.cores[i], prov_mhz,
                   usage_pct / 100.0 * prov_mhz, usage_pct,
                   w.ram_provisioned[i] * KB_PER_MB, w.ram[i, t] * KB_PER_MB,
                   w.disk_read[i, t], w.disk_write[i, t],
                   w.net_bw[i, t] * KB_PER_MB / 2, w.net_bw[i, t] * KB_PER_MB / 2)
            lines.append(";".join(repr(float(x)) if isinstance(x, float) else str(x)
                                  for x in row))
        (directory / f"{vid}.csv").write_text("\n".join(lines) + "\n")


def synth_workload(vms: int, slots: int, variability: float, seed: int,
                   slot_seconds: int = 300, mean_demand: float = 0.13,
                   burst_prob: float = 0.02, burst_scale: float = 3.0,
                   ar_phi: float = 0.9, ar_sigma: float = 0.16,
                   jitter_sigma: float = 0.12) -> Workload:
    """Deterministic synthetic workload with a target aggregate variability.

    Per-VM series follow an AR(1) around a random baseline with occasional
    multiplicative bursts; the aggregate is then rescaled around its mean so
    the realized variability score matches the request (within the +-10 %
    contract; exact when no positivity clamping kicks in).
    """
    if vms <= 0 or slots <= 0:
        raise ValueError("vms and slots must be positive")
    if variability < 0 or variability > 1000.0:
        raise ValueError(f"variability {variability} outside [0, 1000] %")
    rng = np.random.default_rng(seed)

    base = rng.uniform(0.4, 1.6, size=vms) * mean_demand
    x = np.empty((vms, slots))
    x[:, 0] = base
    if variability == 0.0 or slots == 1:
        x[:] = base[:, None]
    else:
        noise = rng.normal(0.0, 1.0, size=(vms, slots))
        for t in range(1, slots):
            x[:, t] = base + ar_phi * (x[:, t - 1] - base) \
                + ar_sigma * base * noise[:, t]
        # occasional demand bursts: these drive per-VM dynamics (overload
        # detection) while mostly cancelling in the aggregate
        starts = rng.random(size=(vms, slots)) < burst_prob
        lengths = rng.geometric(0.25, size=(vms, slots))
        factors = rng.uniform(1.6, burst_scale + 0.6, size=(vms, slots))
        mult = np.ones((vms, slots))
        for i, t in zip(*np.nonzero(starts)):
            mult[i, t:t + lengths[i, t]] = np.maximum(
                mult[i, t:t + lengths[i, t]], factors[i, t])
        x = x * mult
        if jitter_sigma > 0:
            # fast per-slot noise: drives adaptive-threshold dispersion the
            # way spiky production traces do
            x = x * np.exp(rng.normal(0.0, jitter_sigma, size=(vms, slots))
                           - 0.5 * jitter_sigma ** 2)
        x = np.clip(x, 0.005, 0.98)

        agg = x.sum(axis=0)
        m0 = agg.mean()
        dev = agg - m0
        tv0 = np.abs(np.diff(agg)).sum()
        if tv0 > 0:
            gamma = (variability / 100.0) * m0 / tv0
            target = m0 + gamma * dev
            target = np.maximum(target, 0.02 * m0)
            x = x * (target / agg)[None, :]
        x = np.clip(x, 0.001, 0.98)

    cores = np.clip(np.ceil(x.max(axis=1) * 4.0).astype(int), 1, 4)
    ram = np.repeat(rng.uniform(512.0, 2048.0, size=vms)[:, None], slots, axis=1)
    ram_prov = ram[:, 0] * 1.25
    disk_r = np.repeat(rng.uniform(0.0, 1500.0, size=vms)[:, None], slots, axis=1)
    disk_w = np.repeat(rng.uniform(0.0, 1200.0, size=vms)[:, None], slots, axis=1)
    net = np.repeat(rng.uniform(0.5, 8.0, size=vms)[:, None], slots, axis=1)

    vm_ids = [f"vm{i:04d}" for i in range(vms)]
    w = Workload(vm_ids, x, ram, disk_r, disk_w, net, cores, ram_prov, slot_seconds)

    if variability > 0 and slots > 1:
        realized = variability_score(w)
        if not math.isclose(realized, variability, rel_tol=0.10, abs_tol=1e-9):
            raise ValueError(
                f"infeasible variability target {variability} % (realized {realized:.1f} %)")
    return w
