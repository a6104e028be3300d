"""Validated system parameters and the state-dependent transition-rate ladder.

The canonical time unit is minutes everywhere; rates are per minute. Unit
conversion, if any, happens at the CLI boundary only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ParameterError


def _positive_real(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"{field} must be a positive real, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{field} must be positive and finite, got {value!r}")
    return value


def _positive_int(value, field: str) -> int:
    if isinstance(value, bool):
        raise ParameterError(f"{field} must be an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ParameterError(f"{field} must be an integer, got {value!r}")
        value = int(value)
    if not isinstance(value, int):
        raise ParameterError(f"{field} must be an integer, got {value!r}")
    if value < 1:
        raise ParameterError(f"{field} must be >= 1, got {value}")
    return value


@dataclass(frozen=True)
class SystemParams:
    """Mean minutes between calls, mean service minutes, and fleet size.

    Immutable after construction; rho >= 1 is representable here and is
    rejected only by operations that require a steady state.
    """

    t_call: float
    t_service: float
    servers: int

    def __post_init__(self):
        object.__setattr__(self, "t_call", _positive_real(self.t_call, "t_call"))
        object.__setattr__(self, "t_service", _positive_real(self.t_service, "t_service"))
        object.__setattr__(self, "servers", _positive_int(self.servers, "servers"))

    @property
    def arrival_rate(self) -> float:
        """Calls per minute (reciprocal of t_call)."""
        return 1.0 / self.t_call

    @property
    def service_rate(self) -> float:
        """Completions per minute per server (reciprocal of t_service)."""
        return 1.0 / self.t_service


@dataclass(frozen=True)
class DerivedParams:
    """Dimensionless ratios derived from the primitive inputs.

    gamma        service rate over arrival rate (t_call / t_service)
    rho          traffic intensity, offered load per server
    offered_load arrival rate over service rate, the mean number of busy servers
    """

    gamma: float
    rho: float
    offered_load: float


def derive(params: SystemParams) -> DerivedParams:
    lam = params.arrival_rate
    mu = params.service_rate
    offered = lam / mu
    return DerivedParams(gamma=mu / lam, rho=offered / params.servers, offered_load=offered)


def build_params(t_call, t_service, servers) -> tuple[SystemParams, DerivedParams]:
    """Validate raw inputs and return them with the derived quantities."""
    params = SystemParams(t_call=t_call, t_service=t_service, servers=servers)
    return params, derive(params)


@dataclass(frozen=True)
class RateLadder:
    """Nearest-neighbour transition rates of the occupancy walk.

    ``up(n)`` is defined for states n >= 0 and ``down(n)`` for n >= 1; state 0
    is a reflecting boundary. Rates are evaluated on demand from the callables,
    so the ladder is exact for arbitrarily large states.
    """

    up: Callable[[int], float]
    down: Callable[[int], float]

    @classmethod
    def for_fleet(cls, params: SystemParams) -> "RateLadder":
        """Ladder of the M-server queue: constant arrivals, service rate
        proportional to busy servers and capped at the fleet size."""
        lam = params.arrival_rate
        mu = params.service_rate
        m = params.servers
        return cls(up=lambda n: lam, down=lambda n: mu * min(n, m))


def rate_at(ladder: RateLadder, state: int, direction: str) -> float:
    """Evaluate one transition rate, guarding the reflecting boundary."""
    if not isinstance(state, int) or isinstance(state, bool) or state < 0:
        raise ParameterError(f"state must be a non-negative integer, got {state!r}")
    if direction == "up":
        return ladder.up(state)
    if direction == "down":
        if state == 0:
            raise ParameterError("downward rate is undefined at the reflecting state 0")
        return ladder.down(state)
    raise ParameterError(f"direction must be 'up' or 'down', got {direction!r}")
