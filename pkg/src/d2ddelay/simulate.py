"""Discrete-event Monte-Carlo simulation of the cell.

Two fidelity levels share one event loop:

* ``SimMode.FAITHFUL`` reproduces exactly the assumptions behind the closed
  forms: storage list snapshotted at the request instant, aggregate Poisson
  requests at rate omega*m, requester lifetimes drawn fresh per request,
  every failed slot costs a full t_d, sessions release the single D2D link
  on a slot boundary.
* ``SimMode.PHYSICAL`` keeps an explicit node population (Poisson arrivals,
  exponential sojourns), generates requests per node, lets requesters be
  storage nodes (the own symbol is free), and rebuilds the broadcast list
  from live nodes at every repair instant.

Randomness is split into four deterministic streams (arrivals, lifetimes,
requests, choices) spawned from the master seed, so a SimConfig reproduces
its SimReport bit for bit.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from .delay import OutcomeDistribution
from .kernels import availability_pmf
from .params import CodeParams, SystemParams


class SimMode(Enum):
    FAITHFUL = "faithful"
    PHYSICAL = "physical"


class RequestModel(Enum):
    AGGREGATE_POISSON = "aggregate-poisson"
    PER_NODE = "per-node"


class EventKind(IntEnum):
    """Tie-break priority for events sharing a timestamp (lower fires first)."""

    REPAIR_BROADCAST = 0
    NODE_ARRIVAL = 1
    NODE_DEPARTURE = 2
    FILE_REQUEST = 3
    D2D_ATTEMPT_END = 4
    BS_DOWNLOAD_END = 5


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    code: CodeParams
    num_requests: int
    seed: int
    mode: SimMode = SimMode.FAITHFUL
    request_model: RequestModel | None = None
    warmup_requests: int | None = None

    def __post_init__(self) -> None:
        if self.num_requests < 1:
            raise ValueError(f"num_requests must be >= 1, got {self.num_requests}")
        if self.warmup_requests is not None and self.warmup_requests < 0:
            raise ValueError(f"warmup_requests must be >= 0, got {self.warmup_requests}")
        if self.params.omega <= 0:
            raise ValueError("simulation needs omega > 0, otherwise no requests ever arrive")
        if self.mode is SimMode.FAITHFUL and self.request_model is RequestModel.PER_NODE:
            raise ValueError("per-node requests need the physical population model")

    @property
    def resolved_request_model(self) -> RequestModel:
        if self.request_model is not None:
            return self.request_model
        return (
            RequestModel.AGGREGATE_POISSON
            if self.mode is SimMode.FAITHFUL
            else RequestModel.PER_NODE
        )

    @property
    def resolved_warmup(self) -> int:
        if self.warmup_requests is not None:
            return self.warmup_requests
        return max(1000, self.num_requests // 10)


@dataclass(frozen=True)
class HalfStats:
    mean: float
    stderr: float
    count: int


@dataclass(frozen=True)
class SimReport:
    """Post-warmup per-request statistics of one run."""

    num_requests: int
    mean_delay: float
    delay_stderr: float
    busy_fraction: float
    busy_fraction_stderr: float
    n_d2d: int
    empirical_outcome: OutcomeDistribution | None
    mean_d2d_symbols: float
    mean_occupancy: float
    occupancy_stderr: float
    occupancy_first_half: HalfStats
    occupancy_second_half: HalfStats
    histogram_bin_width: float
    histogram: tuple[tuple[int, int], ...]
    storage_size_counts: tuple[int, ...]
    mean_population: float | None


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return 0.0, 0.0
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))


def _half_stats(values: np.ndarray) -> tuple[HalfStats, HalfStats]:
    mid = values.size // 2
    first, second = values[:mid], values[mid:]
    out = []
    for part in (first, second):
        mean, se = _mean_stderr(part)
        out.append(HalfStats(mean=mean, stderr=se, count=int(part.size)))
    return out[0], out[1]


def _attempt_chain(
    alive_departures: np.ndarray,
    requester_departure: float,
    t0: float,
    t_d: float,
    needed: int,
    rng_choices: np.random.Generator,
) -> tuple[int, int]:
    """Serial D2D attempt chain; returns (symbols obtained, slots consumed).

    Per slot i: the requester must outlive the slot, a node is chosen
    uniformly among the uncontacted ones alive at the slot start, and the
    chosen node must outlive the slot for the symbol to go through.  Any
    failure still burns the full slot.
    """
    available = alive_departures
    symbols = 0
    slots = 0
    for i in range(1, needed + 1):
        slots = i
        slot_start = t0 + (i - 1) * t_d
        slot_end = t0 + i * t_d
        if requester_departure < slot_end:
            break
        candidates = available[available > slot_start]
        if candidates.size == 0:
            break
        pick = int(rng_choices.integers(candidates.size))
        if candidates[pick] <= slot_end:
            break
        symbols += 1
        available = np.delete(candidates, pick)
    return symbols, slots


class _Recorder:
    """Accumulates post-warmup per-request statistics."""

    def __init__(self, n: int, k: int, bin_width: float) -> None:
        self.n = n
        self.k = k
        self.bin_width = bin_width
        self.delays: list[float] = []
        self.busy_seen = 0
        self.occupancies: list[float] = []
        self.symbols: list[int] = []
        self.completes: list[bool] = []
        self.storage_sizes = [0] * (n + 1)
        self.histogram: dict[int, int] = {}

    def record(
        self,
        delay: float,
        busy: bool,
        storage_size: int,
        occupancy: float | None,
        symbols: int | None,
        complete: bool | None,
    ) -> None:
        self.delays.append(delay)
        self.busy_seen += busy
        self.storage_sizes[storage_size] += 1
        bucket = int(delay / self.bin_width)
        self.histogram[bucket] = self.histogram.get(bucket, 0) + 1
        if occupancy is not None:
            self.occupancies.append(occupancy)
            self.symbols.append(symbols)
            self.completes.append(complete)

    def report(self, mean_population: float | None) -> SimReport:
        delays = np.asarray(self.delays)
        occ = np.asarray(self.occupancies)
        mean_delay, delay_se = _mean_stderr(delays)
        mean_occ, occ_se = _mean_stderr(occ)
        first, second = _half_stats(occ)
        n_d2d = occ.size
        busy_fraction = self.busy_seen / delays.size
        busy_se = math.sqrt(busy_fraction * (1.0 - busy_fraction) / delays.size)
        outcome = None
        mean_symbols = 0.0
        if n_d2d:
            symbols = np.asarray(self.symbols)
            completes = np.asarray(self.completes)
            mean_symbols = float(symbols.mean())
            partial = tuple(
                float(np.sum((symbols == j) & ~completes)) / n_d2d for j in range(1, self.k)
            )
            outcome = OutcomeDistribution(
                p_fail_first=float(np.sum((symbols == 0) & ~completes)) / n_d2d,
                p_partial=partial,
                p_full=float(completes.sum()) / n_d2d,
            )
        return SimReport(
            num_requests=int(delays.size),
            mean_delay=mean_delay,
            delay_stderr=delay_se,
            busy_fraction=busy_fraction,
            busy_fraction_stderr=busy_se,
            n_d2d=int(n_d2d),
            empirical_outcome=outcome,
            mean_d2d_symbols=mean_symbols,
            mean_occupancy=mean_occ,
            occupancy_stderr=occ_se,
            occupancy_first_half=first,
            occupancy_second_half=second,
            histogram_bin_width=self.bin_width,
            histogram=tuple(sorted(self.histogram.items())),
            storage_size_counts=tuple(self.storage_sizes),
            mean_population=mean_population,
        )


def simulate(config: SimConfig) -> SimReport:
    """Run the event loop until warmup + num_requests requests completed."""
    params, code = config.params, config.code
    n, k = code.n, code.k
    mu, t_d, t_bs, delta = params.mu, params.t_d, params.t_bs, params.delta
    code.warn_if_large_for(params.m)

    streams = np.random.SeedSequence(config.seed).spawn(4)
    rng_arrivals = np.random.default_rng(streams[0])
    rng_lifetimes = np.random.default_rng(streams[1])
    rng_requests = np.random.default_rng(streams[2])
    rng_choices = np.random.default_rng(streams[3])

    warmup = config.resolved_warmup
    target = warmup + config.num_requests
    physical = config.mode is SimMode.PHYSICAL
    per_node = config.resolved_request_model is RequestModel.PER_NODE

    recorder = _Recorder(n, k, bin_width=t_d / 2.0)
    heap: list[tuple[float, int, int, int]] = []
    seq = 0

    def push(time: float, kind: EventKind, payload: int = -1) -> None:
        nonlocal seq
        heapq.heappush(heap, (time, int(kind), seq, payload))
        seq += 1

    issued = 0
    completed = 0
    busy = False

    # population state (physical mode)
    node_departure: dict[int, float] = {}
    live: list[int] = []
    storage_members: list[int] = []
    next_node_id = 0
    pop_integral = 0.0
    last_event_time = 0.0

    # Faithful mode never queues RepairBroadcast events: the epoch holding a
    # request is a pure function of its timestamp, so the n fresh lifetimes
    # are drawn on the first request of each epoch (requests arrive in time
    # order, and epochs without requests influence nothing).
    current_epoch = -1
    storage_departures = np.empty(0)

    def faithful_storage_at(now: float) -> np.ndarray:
        nonlocal current_epoch, storage_departures
        epoch = int(now // delta)
        if epoch != current_epoch:
            current_epoch = epoch
            storage_departures = epoch * delta + rng_lifetimes.exponential(1.0 / mu, size=n)
        return storage_departures

    aggregate_rate = params.omega * params.m

    def schedule_aggregate_request(now: float) -> None:
        if issued < target:
            push(now + rng_requests.exponential(1.0 / aggregate_rate), EventKind.FILE_REQUEST)

    def schedule_personal_request(now: float, node_id: int) -> None:
        dep = node_departure.get(node_id)
        if dep is None:
            return
        req_time = now + rng_requests.exponential(1.0 / params.omega)
        if req_time < dep:
            push(req_time, EventKind.FILE_REQUEST, node_id)

    def finish_d2d(completes: bool) -> None:
        nonlocal busy, completed
        if not busy:
            raise RuntimeError("D2D session end while the network is idle")
        busy = False
        if completes:
            completed += 1

    if physical:
        push(0.0, EventKind.REPAIR_BROADCAST)
        push(rng_arrivals.exponential(1.0 / (params.m * params.lam)), EventKind.NODE_ARRIVAL)
    if not per_node:
        schedule_aggregate_request(0.0)

    while heap:
        time, kind, _, payload = heapq.heappop(heap)
        if physical:
            pop_integral += len(live) * (time - last_event_time)
            last_event_time = time

        if kind == EventKind.REPAIR_BROADCAST:
            count = min(n, len(live))
            picked = rng_choices.choice(len(live), size=count, replace=False) if count else []
            storage_members = [live[int(i)] for i in picked]
            if issued < target:
                push(time + delta, EventKind.REPAIR_BROADCAST)

        elif kind == EventKind.NODE_ARRIVAL:
            node_id = next_node_id
            next_node_id += 1
            departure = time + rng_lifetimes.exponential(1.0 / mu)
            node_departure[node_id] = departure
            live.append(node_id)
            push(departure, EventKind.NODE_DEPARTURE, node_id)
            push(time + rng_arrivals.exponential(1.0 / (params.m * params.lam)), EventKind.NODE_ARRIVAL)
            if per_node:
                schedule_personal_request(time, node_id)

        elif kind == EventKind.NODE_DEPARTURE:
            if payload not in node_departure:
                raise RuntimeError(f"departure of unknown node {payload}")
            del node_departure[payload]
            live.remove(payload)
            if payload in storage_members:
                storage_members.remove(payload)

        elif kind == EventKind.FILE_REQUEST:
            if per_node and payload not in node_departure:
                continue  # node left at exactly this instant; request evaporates
            if issued >= target:
                continue
            idx = issued
            issued += 1
            tracked = idx >= warmup
            if per_node:
                schedule_personal_request(time, payload)
            else:
                schedule_aggregate_request(time)

            requester: int | None = None
            if physical:
                if per_node:
                    requester = payload
                elif live:
                    requester = live[int(rng_requests.integers(len(live)))]
                else:
                    requester = None
                own_symbol = requester is not None and requester in storage_members
                needed = k - 1 if own_symbol else k
                storage_size = len(storage_members)
                snapshot = np.array(
                    [node_departure[s] for s in storage_members if s != requester]
                )
                requester_departure = (
                    node_departure[requester] if requester is not None else time
                )
            else:
                needed = k
                epoch_departures = faithful_storage_at(time)
                snapshot = epoch_departures[epoch_departures > time]
                storage_size = snapshot.size
                requester_departure = time + rng_lifetimes.exponential(1.0 / mu)

            if needed == 0:
                # requester already holds the one needed symbol
                if tracked:
                    recorder.record(0.0, busy, storage_size, 0.0, 0, True)
                completed += 1
            elif busy or (physical and requester is None):
                delay = needed * t_bs
                if tracked:
                    recorder.record(delay, busy, storage_size, None, None, None)
                push(time + delay, EventKind.BS_DOWNLOAD_END)
            else:
                symbols, slots = _attempt_chain(
                    snapshot, requester_departure, time, t_d, needed, rng_choices
                )
                delay = slots * t_d + (needed - symbols) * t_bs
                busy = True
                complete = symbols == needed
                push(time + slots * t_d, EventKind.D2D_ATTEMPT_END, 1 if complete else 0)
                if not complete:
                    push(time + delay, EventKind.BS_DOWNLOAD_END)
                if tracked:
                    recorder.record(delay, False, storage_size, slots * t_d, symbols, complete)

        elif kind == EventKind.D2D_ATTEMPT_END:
            finish_d2d(completes=payload == 1)

        elif kind == EventKind.BS_DOWNLOAD_END:
            completed += 1

        if completed >= target:
            break

    if completed < target:
        raise RuntimeError(f"event queue drained after {completed}/{target} completions")
    mean_population = pop_integral / last_event_time if physical and last_event_time > 0 else None
    return recorder.report(mean_population)


# ---------------------------------------------------------------------------
# standalone Monte-Carlo oracle for the attempt chain


@dataclass(frozen=True)
class AttemptStats:
    """Empirical outcome frequencies and occupancy of the bare attempt process."""

    trials: int
    counts: tuple[int, ...]
    freqs: tuple[float, ...]
    freq_stderr: tuple[float, ...]
    mean_occupancy: float
    occupancy_stderr: float
    mean_symbols: float
    symbols_stderr: float

    def freq_fail(self) -> float:
        return self.freqs[0]

    def freq_partial(self, j: int) -> float:
        return self.freqs[j]

    def freq_full(self) -> float:
        return self.freqs[-1]


#: Fixed batch size: results depend only on (trials, seed), never on memory.
_ORACLE_BATCH = 1_000_000


def d2d_attempt_oracle(
    params: SystemParams, code: CodeParams, trials: int, seed: int
) -> AttemptStats:
    """Sample the serial attempt chain directly, without the recursion tables.

    Each trial draws the storage-availability count, gives every present node
    and the requester a fresh memoryless lifetime, then walks the slots:
    requester death, an empty list, or a chosen node dying inside the slot
    all end the chain and still cost the slot.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n, k = code.n, code.k
    mu, t_d = params.mu, params.t_d
    h = availability_pmf(params, n).as_array()
    h = h / h.sum()
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    symbol_counts = np.zeros(k + 1, dtype=np.int64)
    full_count = 0
    occ_sum = occ_sqsum = 0.0
    sym_sum = sym_sqsum = 0.0

    remaining = trials
    while remaining > 0:
        batch = min(_ORACLE_BATCH, remaining)
        remaining -= batch
        x1 = rng.choice(n + 1, size=batch, p=h)
        life = rng.exponential(1.0 / mu, size=(batch, n))
        life[np.arange(n)[None, :] >= x1[:, None]] = -np.inf  # node absent
        requester = rng.exponential(1.0 / mu, size=batch)
        used = np.zeros((batch, n), dtype=bool)
        symbols = np.zeros(batch, dtype=np.int64)
        slots = np.zeros(batch, dtype=np.int64)
        active = np.ones(batch, dtype=bool)
        for i in range(1, k + 1):
            pick_u = rng.random(batch)  # fixed draw shape keeps runs reproducible
            if not active.any():
                continue
            slot_start, slot_end = (i - 1) * t_d, i * t_d
            slots[active] = i
            avail = (life > slot_start) & ~used & active[:, None]
            count = avail.sum(axis=1)
            alive_req = requester >= slot_end
            picking = active & alive_req & (count > 0)
            ridx = np.minimum((pick_u * np.maximum(count, 1)).astype(np.int64), np.maximum(count - 1, 0))
            cumulative = np.cumsum(avail, axis=1)
            chosen = (cumulative > ridx[:, None]).argmax(axis=1)
            ok = picking & (life[np.arange(batch), chosen] > slot_end)
            symbols[ok] += 1
            used[np.arange(batch)[ok], chosen[ok]] = True
            active = ok
        full = active  # survived all k slots with k successes
        full_count += int(full.sum())
        symbol_counts += np.bincount(symbols[~full], minlength=k + 1)
        occ = slots * t_d
        occ_sum += float(occ.sum())
        occ_sqsum += float((occ.astype(float) ** 2).sum())
        sym_sum += float(symbols.sum())
        sym_sqsum += float((symbols.astype(float) ** 2).sum())

    counts = [int(symbol_counts[0])]
    counts.extend(int(symbol_counts[j]) for j in range(1, k))
    counts.append(full_count)
    freqs = tuple(c / trials for c in counts)
    stderr = tuple(math.sqrt(p * (1.0 - p) / trials) for p in freqs)
    occ_mean = occ_sum / trials
    occ_var = max(occ_sqsum / trials - occ_mean**2, 0.0) * trials / max(trials - 1, 1)
    sym_mean = sym_sum / trials
    sym_var = max(sym_sqsum / trials - sym_mean**2, 0.0) * trials / max(trials - 1, 1)
    return AttemptStats(
        trials=trials,
        counts=tuple(counts),
        freqs=freqs,
        freq_stderr=stderr,
        mean_occupancy=occ_mean,
        occupancy_stderr=math.sqrt(occ_var / trials),
        mean_symbols=sym_mean,
        symbols_stderr=math.sqrt(sym_var / trials),
    )
