"""Closed-form power, thermal and cooling models of the simulated server fleet.

All functions are pure and operate on plain numbers, so they are safe to call
from any thread and cheap enough for the inner placement loops.  Temperatures
are Kelvin unless a name says otherwise, energies are kWh, powers are watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

KWH_PER_WS = 1.0 / 3.6e6  # watt-seconds to kWh


@dataclass(frozen=True)
class PowerModelParams:
    """Coefficients of the server power model (dynamic + memory leakage + fan)."""

    c_dyn: float = 3.32      # W per V^2 * GHz * utilization
    c_mem: float = 1.63e-3   # W per K^2 of memory temperature
    c_fan: float = 4.88e-11  # W per RPM^3


@dataclass(frozen=True)
class ThermalModelParams:
    """Steady-state memory/CPU temperature model coefficients."""

    mem_k1: float = 0.9965
    mem_k2: float = 2.6225
    cpu_k1: float = 1.052
    cpu_k2: float = 19.845


@dataclass(frozen=True)
class CoolingModelParams:
    """Quadratic COP curve; the polynomial is evaluated in degrees Celsius.

    The reference scenarios quote their Celsius setpoints as rounded Kelvin
    values (291 K for 18 C, 297 K for 24 C), so the conversion subtracts 273;
    only that offset reproduces the published IT-to-cooling energy ratios.
    """

    cop_a: float = 0.0068
    cop_b: float = 0.0008
    cop_c: float = 0.458
    cop_t_offset: float = 273.0


@dataclass(frozen=True)
class DiskModelParams:
    c_read: float = 3.327e-7   # W per KB/s read
    c_write: float = 1.668e-7  # W per KB/s written


@dataclass(frozen=True)
class ModelParams:
    """Bundle of every model parameter set plus the fan-speed convention."""

    power: PowerModelParams = field(default_factory=PowerModelParams)
    thermal: ThermalModelParams = field(default_factory=ThermalModelParams)
    cooling: CoolingModelParams = field(default_factory=CoolingModelParams)
    disk: DiskModelParams = field(default_factory=DiskModelParams)
    # "constant" keeps fan speed at the server default; "linear" maps u_cpu in
    # [0,1] onto [default, fan_linear_max] RPM.
    fan_map: str = "constant"
    fan_linear_max: float = 9000.0

    def fan_speed(self, u_cpu: float, default_rpm: float) -> float:
        if self.fan_map == "linear":
            return default_rpm + (self.fan_linear_max - default_rpm) * u_cpu
        return default_rpm


def governor_frequency(u_cpu: float, table):
    """Pick the DVFS mode for a utilization: lowest f_op covering u_cpu * f_max.

    ``table`` is an ordered (ascending f_op) sequence of modes with an ``f_op``
    attribute.  Falls back to the top mode when no frequency qualifies.
    """
    if not 0.0 <= u_cpu <= 1.0 + 1e-12:
        raise ValueError(f"u_cpu out of range [0,1]: {u_cpu}")
    f_max = table[-1].f_op
    needed = u_cpu * f_max
    for mode in table:
        if mode.f_op >= needed - 1e-12:
            return mode
    return table[-1]


def dynamic_power(v_dd: float, f_op: float, u_cpu: float,
                  p: PowerModelParams = PowerModelParams()) -> float:
    """DVFS-dependent part of server power for one (voltage, frequency, load)."""
    return p.c_dyn * v_dd * v_dd * f_op * u_cpu


def host_power_terms(v_dd: float, f_op: float, u_cpu: float, t_mem: float,
                     fan_speed: float,
                     p: PowerModelParams = PowerModelParams()) -> float:
    """Server power in watts from raw model inputs (excluding disk)."""
    return (dynamic_power(v_dd, f_op, u_cpu, p)
            + p.c_mem * t_mem * t_mem
            + p.c_fan * fan_speed ** 3)


def host_power(host, p: PowerModelParams = PowerModelParams()) -> float:
    """Power draw of a host snapshot; 0 W when powered off.

    Expects ``host.t_mem`` to be current for the host's inlet temperature and
    memory load (see :func:`mem_temperature`).
    """
    if not host.powered_on:
        return 0.0
    return host_power_terms(host.mode.v_dd, host.mode.f_op, host.u_cpu,
                            host.t_mem, host.fan_speed, p)


def mem_temperature(t_inlet: float, u_mem: float,
                    p: ThermalModelParams = ThermalModelParams()) -> float:
    """Memory temperature (K) for an inlet temperature and memory load in percent."""
    if u_mem <= 0.0:
        raise ValueError(f"u_mem must be a percent in (0, 100], got {u_mem}")
    return p.mem_k1 * t_inlet + p.mem_k2 * math.log(u_mem * u_mem)


def cpu_temperature(t_inlet: float, u_cpu: float,
                    p: ThermalModelParams = ThermalModelParams()) -> float:
    """CPU temperature (K) for an inlet temperature and utilization fraction."""
    return p.cpu_k1 * t_inlet + p.cpu_k2 * u_cpu


def disk_power(read_kbs: float, write_kbs: float,
               p: DiskModelParams = DiskModelParams()) -> float:
    """Disk power in watts from read/write throughputs in KB/s."""
    return p.c_read * read_kbs + p.c_write * write_kbs


COP_T_MIN_K = 283.15
COP_T_MAX_K = 313.15


def cop(t_inlet: float, p: CoolingModelParams = CoolingModelParams()) -> float:
    """Coefficient of performance of the cooling loop at an inlet temperature (K).

    The polynomial itself is evaluated in Celsius; feeding it Kelvin would give
    absurd COP values near 600, while the Celsius reading reproduces the
    IT-to-cooling energy ratios of the reference hardware.
    """
    if not COP_T_MIN_K <= t_inlet <= COP_T_MAX_K:
        raise ValueError(
            f"inlet temperature {t_inlet} K outside supported range "
            f"[{COP_T_MIN_K}, {COP_T_MAX_K}] K")
    t_c = t_inlet - p.cop_t_offset
    return p.cop_a * t_c * t_c + p.cop_b * t_c + p.cop_c


def slot_energy(p_it: float, t_inlet: float, t_seconds: float,
                p: CoolingModelParams = CoolingModelParams()) -> tuple[float, float]:
    """IT and cooling energy (kWh) of a slot at constant IT power.

    Cooling energy is the IT energy divided by the COP at the slot's inlet
    temperature.
    """
    if t_seconds <= 0:
        raise ValueError("slot duration must be positive")
    e_it = p_it * t_seconds * KWH_PER_WS
    return e_it, e_it / cop(t_inlet, p)
