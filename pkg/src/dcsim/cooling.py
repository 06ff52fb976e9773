"""Cooling setpoint strategies: fixed CRAC setpoints and load-adaptive control."""

from __future__ import annotations

from dataclasses import dataclass

from .models import ThermalModelParams


@dataclass(frozen=True)
class FixedCooling:
    """Constant CRAC setpoint in Kelvin (291 K and 297 K are the usual choices)."""

    setpoint: float


@dataclass(frozen=True)
class VarInletCooling:
    """Raise the setpoint to the highest value keeping every CPU below its cap.

    The setpoint is clamped to [floor, ceiling]; an all-idle data center gets
    the ceiling.
    """

    t_cpu_max: float = 338.15   # K
    floor: float = 291.0        # K
    ceiling: float = 303.15     # K

    def __post_init__(self):
        if self.floor > self.ceiling:
            raise ValueError("floor must not exceed ceiling")


CoolingStrategy = FixedCooling | VarInletCooling


def max_inlet_for_host(u_cpu: float, t_cpu_max: float,
                       thermal: ThermalModelParams = ThermalModelParams(),
                       t_inlet_max: float = 303.15) -> float:
    """Highest inlet temperature keeping the CPU at or below ``t_cpu_max``.

    Inverts the steady-state CPU temperature model and clamps to the server's
    inlet bound.
    """
    raw = (t_cpu_max - thermal.cpu_k2 * u_cpu) / thermal.cpu_k1
    return min(raw, t_inlet_max)


def cooling_setpoint(state, strategy: CoolingStrategy,
                     thermal: ThermalModelParams | None = None) -> float:
    """Setpoint for the current slot under the given strategy.

    For the adaptive strategy this is the minimum over powered-on hosts of
    their maximum safe inlet temperature (uniform supply-air plenum assumed).
    """
    if isinstance(strategy, FixedCooling):
        return strategy.setpoint
    thermal = thermal or state.params.thermal
    active = [h for h in state.hosts if h.powered_on]
    if not active:
        return strategy.ceiling
    lowest = min(
        max_inlet_for_host(h.u_cpu, strategy.t_cpu_max, thermal, h.spec.t_inlet_max)
        for h in active)
    return min(max(lowest, strategy.floor), strategy.ceiling)
