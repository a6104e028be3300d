"""Event-driven stochastic oracle for the fleet queue.

Two processes are available: the full FCFS multi-server system (arrivals,
queue discipline, per-server assignment) and the bare occupancy jump chain
driven by the transition-rate ladder. Their occupancy laws must agree,
which is exactly the modeling claim the analytics rest on.

Every replication owns a counter-based Philox stream keyed by
(seed, replication index), so estimates are bit-identical regardless of
scheduling or worker count: per-replication results land in slots indexed
by replication and are always reduced in index order.
"""

from __future__ import annotations

import heapq
import math
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ParameterError
from .params import SystemParams, derive

_MASK64 = (1 << 64) - 1
_DRAW_BLOCK = 1024
N_BATCHES = 20


def _stream(seed: int, replication: int) -> np.random.Generator:
    key = ((seed & _MASK64) << 64) | (replication & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


class _Draws:
    """Blockwise exponential/uniform draws from one replication's stream.

    Blocks are converted to plain Python floats up front so everything
    downstream stays in native arithmetic.
    """

    __slots__ = ("_gen", "_exp", "_uni", "_ie", "_iu")

    def __init__(self, gen: np.random.Generator):
        self._gen = gen
        self._exp = gen.standard_exponential(_DRAW_BLOCK).tolist()
        self._uni = gen.random(_DRAW_BLOCK).tolist()
        self._ie = 0
        self._iu = 0

    def exponential(self) -> float:
        if self._ie == _DRAW_BLOCK:
            self._exp = self._gen.standard_exponential(_DRAW_BLOCK).tolist()
            self._ie = 0
        value = self._exp[self._ie]
        self._ie += 1
        return value

    def uniform(self) -> float:
        if self._iu == _DRAW_BLOCK:
            self._uni = self._gen.random(_DRAW_BLOCK).tolist()
            self._iu = 0
        value = self._uni[self._iu]
        self._iu += 1
        return value


@dataclass(frozen=True)
class SimConfig:
    """Replication plan for the simulator; times are minutes.

    warmup defaults to 50 * max(t_call, t_service) and horizon to
    warmup + 5000 * t_call (about 1e4 post-warmup events) when left None.
    """

    seed: int
    replications: int = 1
    warmup: float | None = None
    horizon: float | None = None
    start_state: int = 0

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ParameterError(f"seed must be an integer, got {self.seed!r}")
        if (
            not isinstance(self.replications, int)
            or isinstance(self.replications, bool)
            or self.replications < 1
        ):
            raise ParameterError(f"replications must be an integer >= 1, got {self.replications!r}")
        if (
            not isinstance(self.start_state, int)
            or isinstance(self.start_state, bool)
            or self.start_state < 0
        ):
            raise ParameterError(f"start_state must be a non-negative integer, got {self.start_state!r}")
        if self.warmup is not None and (not math.isfinite(self.warmup) or self.warmup < 0.0):
            raise ParameterError(f"warmup must be finite and >= 0, got {self.warmup!r}")
        if self.horizon is not None:
            if not math.isfinite(self.horizon) or self.horizon <= 0.0:
                raise ParameterError(f"horizon must be finite and > 0, got {self.horizon!r}")
            if self.warmup is not None and self.horizon <= self.warmup:
                raise ParameterError(
                    f"horizon must exceed warmup, got horizon={self.horizon!r} warmup={self.warmup!r}"
                )

    def resolved(self, params: SystemParams) -> "SimConfig":
        """Fill defaulted warmup/horizon from the system's time scales."""
        warmup = self.warmup
        if warmup is None:
            warmup = 50.0 * max(params.t_call, params.t_service)
        horizon = self.horizon
        if horizon is None:
            horizon = warmup + 5000.0 * params.t_call
        if horizon <= warmup:
            raise ParameterError(f"horizon must exceed warmup, got horizon={horizon!r} warmup={warmup!r}")
        return replace(self, warmup=warmup, horizon=horizon)


@dataclass(frozen=True)
class SimEstimate:
    """Monte-Carlo point estimate with its standard error.

    Deterministic given (seed, replication index); n_samples counts
    replications for hitting times and contributing batches for
    time-average quantities.
    """

    value: float
    std_error: float
    n_samples: int
    seed: int


def _run_many(fn: Callable[[int], object], replications: int, workers: int) -> list:
    out = [None] * replications
    if workers <= 1:
        for r in range(replications):
            out[r] = fn(r)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for r, result in enumerate(pool.map(fn, range(replications))):
            out[r] = result
    return out


def simulate_hitting_time(
    params: SystemParams,
    start_state: int,
    config: SimConfig,
    workers: int = 1,
) -> SimEstimate:
    """Estimate the mean time to first enter state M+1 from ``start_state``.

    Simulates the occupancy jump chain directly: exponential holding times
    at the total rate out of the current state, then an up/down step with
    probability proportional to the corresponding rate. The standard error
    is the plain replication-variance estimate.
    """
    m = params.servers
    if (
        not isinstance(start_state, int)
        or isinstance(start_state, bool)
        or not 0 <= start_state <= m
    ):
        raise ParameterError(
            f"start_state must be an integer in [0, {m}] (below the saturation target), "
            f"got {start_state!r}"
        )
    lam = params.arrival_rate
    mu = params.service_rate
    target = m + 1

    def one(rep: int) -> float:
        draws = _Draws(_stream(config.seed, rep))
        t = 0.0
        n = start_state
        while n != target:
            if n == 0:
                t += draws.exponential() / lam
                n = 1
                continue
            down = mu * n  # n <= m before absorption, so no cap needed
            total = lam + down
            t += draws.exponential() / total
            if draws.uniform() * total < lam:
                n += 1
            else:
                n -= 1
        return t

    times = np.array(_run_many(one, config.replications, workers), dtype=float)
    value = float(times.mean())
    if config.replications > 1:
        std_error = float(times.std(ddof=1) / math.sqrt(config.replications))
    else:
        std_error = 0.0
    return SimEstimate(value=value, std_error=std_error, n_samples=config.replications, seed=config.seed)


class _Batch:
    """Accumulators for one batch window of one replication."""

    __slots__ = (
        "duration", "occ", "occup_time", "queue_area", "busy",
        "completions", "wait_count", "wait_sum", "wait_below",
    )

    def __init__(self, duration: float, servers: int):
        self.duration = duration
        self.occ: dict[int, float] = {}
        self.occup_time = 0.0
        self.queue_area = 0.0
        self.busy = [0.0] * servers
        self.completions = 0
        self.wait_count = 0
        self.wait_sum = 0.0
        self.wait_below = 0


def _split(t0: float, t1: float, warmup: float, horizon: float, batch_len: float):
    """Pieces of [t0, t1) clipped to the measurement window, keyed by batch."""
    lo = t0 if t0 > warmup else warmup
    hi = t1 if t1 < horizon else horizon
    while lo < hi:
        b = int((lo - warmup) / batch_len)
        if b >= N_BATCHES:
            b = N_BATCHES - 1
        edge = warmup + (b + 1) * batch_len
        cut = hi if hi < edge else edge
        yield b, cut - lo
        lo = cut


def _batch_index(t: float, warmup: float, batch_len: float) -> int:
    b = int((t - warmup) / batch_len)
    return b if b < N_BATCHES else N_BATCHES - 1


def _run_fcfs_replication(
    params: SystemParams,
    config: SimConfig,
    rep: int,
    t_los: float,
    assignment: str,
    collect_waits: bool,
) -> tuple[list[_Batch], list[tuple[int, float]]]:
    m = params.servers
    lam = params.arrival_rate
    mu = params.service_rate
    warmup = config.warmup
    horizon = config.horizon
    batch_len = (horizon - warmup) / N_BATCHES
    batches = [_Batch(batch_len, m) for _ in range(N_BATCHES)]
    draws = _Draws(_stream(config.seed, rep))

    idle = list(range(m))
    busy_since = [0.0] * m
    departures: list[tuple[float, int]] = []  # heap of (time, server)
    queue: deque[tuple[float, int]] = deque()  # (arrival time, call index)
    waits: list[tuple[int, float]] = []
    n = 0
    call_index = 0

    # Seed the initial state: start_state calls present at t=0, the first
    # min(start_state, m) already in service on the low-index servers.
    for _ in range(min(config.start_state, m)):
        server = idle.pop(0)
        busy_since[server] = 0.0
        heapq.heappush(departures, (draws.exponential() / mu, server))
        n += 1
    for _ in range(config.start_state - m):
        queue.append((0.0, -1))
        n += 1

    next_arrival = draws.exponential() / lam

    def record_queue_wait(arrival: float, wait: float, index: int) -> None:
        # only calls that arrived under full occupation count toward the
        # conditional wait statistics; immediate dispatches wait zero and
        # appear only in the raw per-call log
        if arrival >= warmup:
            batch = batches[_batch_index(arrival, warmup, batch_len)]
            batch.wait_count += 1
            batch.wait_sum += wait
            if wait < t_los:
                batch.wait_below += 1
        if collect_waits and index >= 0:
            waits.append((index, wait))

    t = 0.0
    while True:
        t_dep = departures[0][0] if departures else math.inf
        t_next = next_arrival if next_arrival <= t_dep else t_dep
        t_event = t_next if t_next < horizon else horizon
        if t_event > t:
            for b, seg in _split(t, t_event, warmup, horizon, batch_len):
                batch = batches[b]
                batch.occ[n] = batch.occ.get(n, 0.0) + seg
                if n >= m:
                    batch.occup_time += seg
                    batch.queue_area += (n - m) * seg
        if t_next >= horizon:
            break
        t = t_next

        if next_arrival <= t_dep:
            # arrival: schedule the next one, then dispatch or queue
            next_arrival = t + draws.exponential() / lam
            index = call_index if t >= warmup else -1
            if t >= warmup:
                call_index += 1
            if idle:
                # the assignment draw is consumed under both policies so the
                # occupancy path is identical; only the chosen server differs
                u = draws.uniform()
                if assignment == "random":
                    pick = int(u * len(idle))
                    if pick >= len(idle):
                        pick = len(idle) - 1
                    server = idle.pop(pick)
                else:
                    server = min(idle)
                    idle.remove(server)
                busy_since[server] = t
                heapq.heappush(departures, (t + draws.exponential() / mu, server))
                if collect_waits and index >= 0:
                    waits.append((index, 0.0))
            else:
                queue.append((t, index))
            n += 1
        else:
            # departure: free the server or hand it the queue head
            _, server = heapq.heappop(departures)
            n -= 1
            if t >= warmup:
                batches[_batch_index(t, warmup, batch_len)].completions += 1
            if queue:
                arrival, index = queue.popleft()
                record_queue_wait(arrival, t - arrival, index)
                heapq.heappush(departures, (t + draws.exponential() / mu, server))
            else:
                for b, seg in _split(busy_since[server], t, warmup, horizon, batch_len):
                    batches[b].busy[server] += seg
                idle.append(server)

    # close out busy spans still open at the horizon
    for _, server in departures:
        for b, seg in _split(busy_since[server], horizon, warmup, horizon, batch_len):
            batches[b].busy[server] += seg

    waits.sort()
    return batches, waits


def _run_jump_replication(
    params: SystemParams,
    config: SimConfig,
    rep: int,
) -> list[_Batch]:
    m = params.servers
    lam = params.arrival_rate
    mu = params.service_rate
    warmup = config.warmup
    horizon = config.horizon
    batch_len = (horizon - warmup) / N_BATCHES
    batches = [_Batch(batch_len, 0) for _ in range(N_BATCHES)]
    draws = _Draws(_stream(config.seed, rep))

    t = 0.0
    n = config.start_state
    while t < horizon:
        down = mu * (n if n < m else m) if n >= 1 else 0.0
        total = lam + down
        t_next = t + draws.exponential() / total
        t_stop = t_next if t_next < horizon else horizon
        for b, seg in _split(t, t_stop, warmup, horizon, batch_len):
            batch = batches[b]
            batch.occ[n] = batch.occ.get(n, 0.0) + seg
            if n >= m:
                batch.occup_time += seg
                batch.queue_area += (n - m) * seg
        t = t_next
        if t >= horizon:
            break
        if draws.uniform() * total < lam:
            n += 1
        else:
            n -= 1
    return batches


def _estimate(values: list[float], seed: int) -> SimEstimate | None:
    if not values:
        return None
    arr = np.array(values, dtype=float)
    value = float(arr.mean())
    std_error = float(arr.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return SimEstimate(value=value, std_error=std_error, n_samples=len(values), seed=seed)


def _occupancy_estimates(
    batches: list[_Batch], servers: int, seed: int
) -> dict[str, SimEstimate]:
    estimates = {}
    for n in range(servers + 5 + 1):
        vals = [b.occ.get(n, 0.0) / b.duration for b in batches]
        estimates[f"pi_{n}"] = _estimate(vals, seed)
    estimates["p_occup"] = _estimate([b.occup_time / b.duration for b in batches], seed)
    return estimates


@dataclass(frozen=True)
class StationaryResult:
    """Batch-means estimates from the FCFS simulation plus diagnostics.

    estimates maps quantity names to SimEstimate; quantities never observed
    (for instance conditional waits in a run that never saturated) are
    omitted. batch_queue_means is the per-batch time-average queue length,
    useful for spotting the unbounded growth of an overloaded system.
    """

    estimates: dict[str, SimEstimate]
    per_server_busy: tuple[float, ...]
    batch_queue_means: tuple[float, ...]
    waits: tuple[tuple[int, float], ...] | None


def simulate_stationary(
    params: SystemParams,
    config: SimConfig,
    t_los: float = 30.0,
    workers: int = 1,
    assignment: str = "random",
    collect_waits: bool = False,
) -> StationaryResult:
    """Run the FCFS multi-server simulation and estimate the steady-state map.

    Calls arrive as a Poisson stream, each service is exponential, the queue
    is first-come first-served, and arrivals finding several idle servers
    are assigned to one uniformly at random (``assignment="least_index"``
    picks the lowest index instead, for sensitivity checks; it consumes the
    same draws so the occupancy path is unchanged).

    Standard errors come from batch means over 20 equal post-warmup windows
    per replication. If rho >= 1 the run proceeds anyway with a warning;
    the estimates then describe a growing transient, not a steady state.
    """
    if assignment not in ("random", "least_index"):
        raise ParameterError(f"assignment must be 'random' or 'least_index', got {assignment!r}")
    if not math.isfinite(t_los) or t_los < 0.0:
        raise ParameterError(f"t_los must be finite and >= 0, got {t_los!r}")
    cfg = config.resolved(params)
    rho = derive(params).rho
    if rho >= 1.0:
        warnings.warn(
            f"traffic intensity rho={rho:.6g} >= 1: no steady state exists; "
            "the queue grows without bound and estimates describe the transient",
            stacklevel=2,
        )

    results = _run_many(
        lambda rep: _run_fcfs_replication(params, cfg, rep, t_los, assignment, collect_waits),
        cfg.replications,
        workers,
    )
    batches: list[_Batch] = []
    merged_waits: list[tuple[int, float]] = []
    for rep_batches, rep_waits in results:
        batches.extend(rep_batches)
        for _, wait in rep_waits:
            merged_waits.append((len(merged_waits), wait))

    m = params.servers
    estimates = _occupancy_estimates(batches, m, cfg.seed)
    occupied = [b for b in batches if b.occup_time > 0.0]
    for k in range(10 + 1):
        vals = [b.occ.get(m + k, 0.0) / b.occup_time for b in occupied]
        estimates[f"cond_queue_{k}"] = _estimate(vals, cfg.seed)
    estimates["mean_queue_len_conditional"] = _estimate(
        [b.queue_area / b.occup_time for b in occupied], cfg.seed
    )
    estimates["p_busy_per_server"] = _estimate(
        [sum(b.busy) / (m * b.duration) for b in batches], cfg.seed
    )
    estimates["throughput"] = _estimate([b.completions / b.duration for b in batches], cfg.seed)
    waited = [b for b in batches if b.wait_count > 0]
    estimates["wait_mean_conditional"] = _estimate(
        [b.wait_sum / b.wait_count for b in waited], cfg.seed
    )
    estimates["wait_cdf_at_t_los"] = _estimate(
        [b.wait_below / b.wait_count for b in waited], cfg.seed
    )
    estimates = {name: est for name, est in estimates.items() if est is not None}

    total_time = sum(b.duration for b in batches)
    per_server = tuple(
        sum(b.busy[s] for b in batches) / total_time for s in range(m)
    )
    batch_queue_means = tuple(b.queue_area / b.duration for b in batches)
    return StationaryResult(
        estimates=estimates,
        per_server_busy=per_server,
        batch_queue_means=batch_queue_means,
        waits=tuple(merged_waits) if collect_waits else None,
    )


def simulate_jump_occupancy(
    params: SystemParams,
    config: SimConfig,
    workers: int = 1,
) -> dict[str, SimEstimate]:
    """Occupancy estimates from the bare jump chain, for cross-validation
    against the FCFS system (same estimator, same batching)."""
    cfg = config.resolved(params)
    results = _run_many(
        lambda rep: _run_jump_replication(params, cfg, rep),
        cfg.replications,
        workers,
    )
    batches: list[_Batch] = []
    for rep_batches in results:
        batches.extend(rep_batches)
    estimates = _occupancy_estimates(batches, params.servers, cfg.seed)
    return {name: est for name, est in estimates.items() if est is not None}
