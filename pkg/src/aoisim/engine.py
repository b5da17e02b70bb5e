"""Slot-synchronous network simulator.

Each slot: arrivals join their link's FCFS queue at the slot start and may be
served immediately; every link draws an independent scheduling coin; the
active transmitter set is frozen; successes are evaluated against that set;
ages and queues update at slot end (see queueing module for the convention).

Success evaluation has two statistically identical paths.  The default
"marginal" path integrates the slot's fades out analytically: given the
active set, per-link success indicators are independent Bernoulli draws with
the closed-form conditional probability (interferer fades are pairwise
independent across receivers, so no dependence is lost).  The "explicit"
path draws every fade and compares SINR to the threshold per link; it is
exact too but quadratically slower, and is kept for validation runs.

In dominant mode every scheduled link transmits (empty queues send dummy
packets).  Dummy successes never touch a queue or reset an age; they only
contribute interference and attempt statistics.  Real-system queues are
stochastically dominated by this variant, which makes it a conservative
yardstick with a tractable per-slot success probability.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from io import StringIO

import numpy as np
from scipy import stats as _scipy_stats

from . import rng
from .channel import ChannelParams, slot_sinr_success
from .geometry import (Boundary, NetworkRealization, RegionSpec, StoppingSetSpec,
                       cross_distance_matrix, sample_bipolar)
from .policy import PolicyAssignment, assign_policy
from .queueing import AoiStats


class Mode(Enum):
    ACTUAL = "actual"
    DOMINANT = "dominant"


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one experiment (all realizations)."""

    channel: ChannelParams
    region: RegionSpec
    stopping: StoppingSetSpec
    density: float
    arrival_rate: float
    horizon: int
    realizations: int
    master_seed: int
    mode: Mode = Mode.ACTUAL
    warmup_fraction: float = 0.1
    stability_queue_factor: float = 0.3
    fading: str = "marginal"
    interference_cutoff: float | None = None

    def __post_init__(self):
        if not 0.0 < self.arrival_rate <= 1.0:
            raise ValueError(f"arrival rate must lie in (0, 1], got {self.arrival_rate}")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.density <= 0:
            raise ValueError("density must be positive")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup fraction must lie in [0, 1)")
        if self.stability_queue_factor <= 0:
            raise ValueError("stability queue factor must be positive")
        if self.fading not in ("marginal", "explicit"):
            raise ValueError(f"unknown fading evaluation path {self.fading!r}")
        if self.interference_cutoff is not None and not 0 < self.interference_cutoff < 1:
            raise ValueError("interference cutoff must lie in (0, 1)")

    @property
    def warmup_slots(self) -> int:
        return int(self.warmup_fraction * self.horizon)


@dataclass
class LinkRecord:
    """Everything the experiment layer needs about one simulated link."""

    realization: int
    link: int
    tx_x: float
    tx_y: float
    gamma: float
    arrivals: int
    deliveries: int
    attempts: int
    successes: int
    final_queue: int
    in_window: bool
    stats: AoiStats


@dataclass
class SimResult:
    """Aggregated output of run_experiment; serialization is deterministic.

    Two network aggregates are reported side by side.  network_peak_aoi
    averages stable in-window links only, with the unstable fraction tracked
    separately; it reflects the bulk of well-behaved links but silently drops
    saturated ones.  network_peak_aoi_all averages every in-window link,
    clamping links that never delivered to the horizon; it prices congestion
    collapse into the mean but its absolute value scales with the horizon.
    Comparisons between policies can flip between the two whenever a policy
    changes which links survive, so both are always emitted.
    """

    per_link: list
    realization_peaks: list
    network_peak_aoi: float
    ci_low: float
    ci_high: float
    fraction_stable: float
    realization_peaks_all: list = field(default_factory=list)
    network_peak_aoi_all: float = math.inf
    ci_all_low: float = math.inf
    ci_all_high: float = math.inf
    config_label: dict = field(default_factory=dict)

    def json_bytes(self) -> bytes:
        payload = dict(self.config_label)
        payload.update(
            network_peak_aoi=self.network_peak_aoi,
            ci_low=self.ci_low,
            ci_high=self.ci_high,
            fraction_stable=self.fraction_stable,
            network_peak_aoi_all=self.network_peak_aoi_all,
            ci_all_low=self.ci_all_low,
            ci_all_high=self.ci_all_high,
            realization_peaks=list(self.realization_peaks),
            realization_peaks_all=list(self.realization_peaks_all),
            n_links=len(self.per_link),
        )
        return json.dumps(payload, sort_keys=True).encode()

    def per_link_csv_bytes(self) -> bytes:
        out = StringIO()
        out.write("realization,link_index,tx_x,tx_y,gamma,deliveries,peak_aoi,stable\n")
        for r in self.per_link:
            out.write(f"{r.realization},{r.link},{r.tx_x!r},{r.tx_y!r},{r.gamma!r},"
                      f"{r.deliveries},{r.stats.peak_aoi!r},"
                      f"{'true' if r.stats.stable else 'false'}\n")
        return out.getvalue().encode()


def _log_interference_matrix(realization: NetworkRealization, params: ChannelParams,
                             cutoff: float | None) -> np.ndarray:
    """L[j, i] = log(1 - 1/(1 + D_ji)) for transmitter j at receiver i.

    The diagonal is zero (a link does not interfere with itself) and entries
    whose suppression factor falls below `cutoff` are zeroed, which is the
    optional far-interferer pruning knob.
    """
    d = cross_distance_matrix(realization)
    with np.errstate(over="ignore", divide="ignore"):
        log_dfac = params.alpha * np.log(d) - math.log(params.interference_scale)
        dfac = np.exp(log_dfac)
        suppression = 1.0 / (1.0 + dfac)
        if cutoff is not None:
            suppression[suppression < cutoff] = 0.0
        lmat = np.log1p(-suppression)
    np.fill_diagonal(lmat, 0.0)
    return lmat


def run_realization(realization: NetworkRealization, assignment, config: SimConfig,
                    realization_index: int = 0) -> list[LinkRecord]:
    """Simulate one sampled network for the configured horizon.

    `assignment` is a PolicyAssignment or a raw per-link probability array.
    Returns one LinkRecord per link; raises if the packet-conservation
    identity (arrivals = deliveries + backlog) fails for any link.
    """
    gamma = assignment.gamma if isinstance(assignment, PolicyAssignment) else np.asarray(assignment, float)
    n = realization.size
    if gamma.shape != (n,):
        raise ValueError(f"need one transmit probability per link ({n}), got shape {gamma.shape}")
    params = config.channel
    horizon, warmup = config.horizon, config.warmup_slots
    dominant = config.mode is Mode.DOMINANT
    streams = rng.realization_streams(config.master_seed, realization_index)

    if n == 0:
        return []

    arrivals = streams["arrivals"].random((horizon, n)) < config.arrival_rate
    # Per-link arrival slots in FIFO order, flattened with offsets: the k-th
    # delivery of link i pops generation slot arr_slots[offsets[i] + k].
    links_nz, slots_nz = np.nonzero(arrivals.T)
    arr_slots = slots_nz.astype(np.int64)
    counts = np.bincount(links_nz, minlength=n)
    offsets = np.concatenate([[0], np.cumsum(counts)])[:-1]

    explicit = config.fading == "explicit"
    if not explicit:
        lmat = _log_interference_matrix(realization, params, config.interference_cutoff)
        total_col = lmat.sum(axis=0)
        log_base = -params.interference_scale / params.snr

    qlen = np.zeros(n, dtype=np.int64)
    age = np.zeros(n, dtype=np.int64)
    popped = np.zeros(n, dtype=np.int64)
    attempts = np.zeros(n, dtype=np.int64)
    successes = np.zeros(n, dtype=np.int64)
    deliveries = np.zeros(n, dtype=np.int64)
    rec_count = np.zeros(n, dtype=np.int64)
    peak_sum = np.zeros(n)
    sojourn_sum = np.zeros(n)

    dec_gen, fade_gen = streams["decisions"], streams["fades"]
    explicit_gen = streams["explicit_fades"]
    half = n // 2

    for t in range(horizon):
        qlen += arrivals[t]
        nonempty = qlen > 0
        scheduled = dec_gen.random(n) < gamma
        active = scheduled if dominant else (scheduled & nonempty)

        if explicit:
            success = np.zeros(n, dtype=bool)
            active_idx = np.flatnonzero(active)
            for i in active_idx:
                success[i] = slot_sinr_success(int(i), active_idx, realization,
                                               params, explicit_gen)
        else:
            k = int(active.sum())
            if k == 0:
                log_i = np.zeros(n)
            elif k <= half:
                log_i = lmat[active].sum(axis=0)
            else:
                log_i = total_col - lmat[~active].sum(axis=0)
            # One uniform per link per slot regardless of state keeps the
            # stream consumption aligned with (slot, link) counters.
            u = fade_gen.random(n)
            success = active & (u < np.exp(log_base + log_i))

        deliver = success & nonempty if dominant else success
        attempts += active
        successes += success

        age += 1
        idx = np.flatnonzero(deliver)
        if idx.size:
            gen_slots = arr_slots[offsets[idx] + popped[idx]]
            sojourn = t - gen_slots + 1
            if t >= warmup:
                peak_sum[idx] += age[idx]
                sojourn_sum[idx] += sojourn
                rec_count[idx] += 1
            age[idx] = sojourn
            popped[idx] += 1
            qlen[idx] -= 1
            deliveries[idx] += 1

    total_arrivals = counts
    if not np.array_equal(total_arrivals, deliveries + qlen):
        raise RuntimeError("packet conservation violated: arrivals != deliveries + backlog")

    in_window = _measurement_window(realization)
    queue_cap = config.stability_queue_factor * config.arrival_rate * horizon
    records = []
    for i in range(n):
        if rec_count[i] > 0:
            peak = peak_sum[i] / rec_count[i]
            delay = sojourn_sum[i] / rec_count[i]
        else:
            peak, delay = math.inf, math.inf
        stable = bool(deliveries[i] > 0 and rec_count[i] > 0 and qlen[i] <= queue_cap)
        stats = AoiStats(peak_aoi=peak, mean_queue_delay=delay,
                         throughput=deliveries[i] / horizon, stable=stable)
        records.append(LinkRecord(
            realization=realization_index, link=i,
            tx_x=float(realization.transmitters[i, 0]),
            tx_y=float(realization.transmitters[i, 1]),
            gamma=float(gamma[i]), arrivals=int(total_arrivals[i]),
            deliveries=int(deliveries[i]), attempts=int(attempts[i]),
            successes=int(successes[i]), final_queue=int(qlen[i]),
            in_window=bool(in_window[i]), stats=stats))
    return records


def _measurement_window(realization: NetworkRealization) -> np.ndarray:
    """Boolean mask of links that count toward network averages."""
    region = realization.region
    if region.boundary is Boundary.TORUS or realization.size == 0:
        return np.ones(realization.size, dtype=bool)
    lo, hi = region.margin, region.side - region.margin
    tx = realization.transmitters
    return (tx[:, 0] >= lo) & (tx[:, 0] <= hi) & (tx[:, 1] >= lo) & (tx[:, 1] <= hi)


def network_peak_aoi(records: list[LinkRecord]) -> float:
    """Spatial average of peak AoI over stable links in the measurement
    window; +inf when no link qualifies (total congestion collapse)."""
    vals = [r.stats.peak_aoi for r in records if r.in_window and r.stats.stable]
    if not vals:
        return math.inf
    return float(np.mean(vals))


def network_peak_aoi_truncated(records: list[LinkRecord], horizon: int) -> float:
    """Spatial average of peak AoI over every in-window link.

    A link that never delivered inside the recording window has an empirical
    peak of at least the horizon, so its +inf placeholder is clamped to the
    horizon; recorded peaks never exceed it.  This keeps saturated links in
    the average instead of conditioning them away, at the price of a
    horizon-dependent scale.  +inf only when the window holds no links.
    """
    vals = [min(r.stats.peak_aoi, float(horizon))
            for r in records if r.in_window]
    if not vals:
        return math.inf
    return float(np.mean(vals))


def _one_realization(config: SimConfig, k: int) -> list[LinkRecord]:
    realization = sample_bipolar(config.density, config.region,
                                 config.channel.link_distance, config.master_seed, k)
    assignment = assign_policy(realization, config.stopping, config.channel)
    return run_realization(realization, assignment, config, realization_index=k)


def run_experiment(config: SimConfig, threads: int = 1) -> SimResult:
    """Sample, solve policies for, and simulate all configured realizations.

    Realizations are independent and their random streams are keyed by
    realization index, so the result is bitwise identical for any thread
    count.  The cross-realization mean propagates +inf: a realization with
    no stable link drags the network estimate to the sentinel.
    """
    indices = range(config.realizations)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_one_realization, config, k) for k in indices]
            all_records = [f.result() for f in futures]
    else:
        all_records = [_one_realization(config, k) for k in indices]

    per_link = [rec for records in all_records for rec in records]
    peaks = [network_peak_aoi(records) for records in all_records]
    mean_peak = float(np.mean(peaks)) if peaks else math.inf
    ci_low, ci_high = _confidence_interval(peaks)
    peaks_all = [network_peak_aoi_truncated(records, config.horizon)
                 for records in all_records]
    mean_all = float(np.mean(peaks_all)) if peaks_all else math.inf
    ci_all_low, ci_all_high = _confidence_interval(peaks_all)
    window = [r for r in per_link if r.in_window]
    n_stable = sum(1 for r in window if r.stats.stable)
    fraction = n_stable / len(window) if window else 0.0

    label = {
        "mode": config.mode.value,
        "policy": config.stopping.label(),
        "arrival_rate": config.arrival_rate,
        "density": config.density,
        "link_distance": config.channel.link_distance,
        "horizon": config.horizon,
        "realizations": config.realizations,
        "master_seed": config.master_seed,
        "fading": config.fading,
    }
    return SimResult(per_link=per_link, realization_peaks=peaks,
                     network_peak_aoi=mean_peak, ci_low=ci_low, ci_high=ci_high,
                     fraction_stable=fraction, realization_peaks_all=peaks_all,
                     network_peak_aoi_all=mean_all, ci_all_low=ci_all_low,
                     ci_all_high=ci_all_high, config_label=label)


def _confidence_interval(peaks: list, level: float = 0.95) -> tuple[float, float]:
    """Student-t interval for the mean of per-realization network peaks.

    Any +inf realization makes the interval (+inf, +inf); a single
    realization yields the degenerate interval at its value.
    """
    arr = np.asarray(peaks, dtype=float)
    if arr.size == 0 or np.any(np.isinf(arr)):
        return math.inf, math.inf
    if arr.size == 1:
        return float(arr[0]), float(arr[0])
    mean = float(arr.mean())
    sem = float(arr.std(ddof=1)) / math.sqrt(arr.size)
    t = float(_scipy_stats.t.ppf(0.5 + level / 2, arr.size - 1))
    return mean - t * sem, mean + t * sem
