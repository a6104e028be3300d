"""Inverse fleet-size queries: smallest M meeting a performance target.

Monotonicity of the probability targets in M is empirically solid but not
proven, so the search is a plain ascending scan; fleets are small integers
and correctness beats speed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .mfpt import mfpt_critical_profile
from .params import SystemParams, derive
from .service_metrics import level_of_service
from .steady_state import p_occupation

KINDS = ("stability", "los_target", "occup_ceiling", "mfpt_horizon")


@dataclass(frozen=True)
class SizingQuery:
    """What to solve for.

    kind      one of stability, los_target, occup_ceiling, mfpt_horizon
    target    min LOS / max occupation probability (in (0, 1]) or min
              average time-to-saturation in minutes; ignored for stability
    t_los     threshold minutes, required for los_target only
    m_max     scan cap; a query that fails up to here reports not-found
    """

    kind: str
    target: float | None = None
    t_los: float | None = None
    m_max: int = 1000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.m_max, int) or isinstance(self.m_max, bool) or self.m_max < 1:
            raise ParameterError(f"m_max must be an integer >= 1, got {self.m_max!r}")
        if self.kind in ("los_target", "occup_ceiling"):
            if self.target is None or not 0.0 < self.target <= 1.0:
                raise ParameterError(
                    f"target must be a probability in (0, 1] for {self.kind}, got {self.target!r}"
                )
        elif self.kind == "mfpt_horizon":
            if (
                self.target is None
                or not math.isfinite(self.target)
                or self.target <= 0.0
            ):
                raise ParameterError(
                    f"target must be a positive horizon in minutes, got {self.target!r}"
                )
        if self.kind == "los_target":
            if self.t_los is None or not math.isfinite(self.t_los) or self.t_los < 0.0:
                raise ParameterError(f"los_target requires t_los >= 0, got {self.t_los!r}")


@dataclass(frozen=True)
class SizingResult:
    """Outcome of a scan: the fleet size found (or None) plus audit data.

    predicate_value is the metric at the answer when found, otherwise the
    best value attained over the scanned range (None if nothing was scanned).
    """

    kind: str
    m: int | None
    predicate_value: float | None
    scanned: tuple[int, int]
    found: bool


def stability_bound(t_call: float, t_service: float) -> int:
    """Smallest fleet with traffic intensity below 1: floor(offered load) + 1."""
    d = derive(SystemParams(t_call=t_call, t_service=t_service, servers=1))
    return math.floor(d.offered_load) + 1


def min_fleet(t_call: float, t_service: float, query: SizingQuery) -> SizingResult:
    """Scan fleet sizes upward until the query's predicate first holds."""
    start = 1 if query.kind == "mfpt_horizon" else stability_bound(t_call, t_service)
    if start > query.m_max:
        return SizingResult(
            kind=query.kind, m=None, predicate_value=None,
            scanned=(start, query.m_max), found=False,
        )

    best = None
    for m in range(start, query.m_max + 1):
        params = SystemParams(t_call=t_call, t_service=t_service, servers=m)
        if query.kind == "stability":
            value = derive(params).rho
            ok = value < 1.0
            better = best is None or value < best
        elif query.kind == "los_target":
            value = level_of_service(params, query.t_los)
            ok = value >= query.target
            better = best is None or value > best
        elif query.kind == "occup_ceiling":
            value = p_occupation(params)
            ok = value <= query.target
            better = best is None or value < best
        else:
            value = mfpt_critical_profile(params).mean_time
            ok = value >= query.target
            better = best is None or value > best
        if better:
            best = value
        if ok:
            return SizingResult(
                kind=query.kind, m=m, predicate_value=value,
                scanned=(start, m), found=True,
            )
    return SizingResult(
        kind=query.kind, m=None, predicate_value=best,
        scanned=(start, query.m_max), found=False,
    )
