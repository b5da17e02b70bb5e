"""Per-link FCFS queue and age-of-information bookkeeping.

Timing convention, validated against the analytic peak-age formula: a packet
arriving at the start of slot t may be served within slot t; at the end of
every slot the receiver's age grows by one, and a delivery then resets it to
the delivered packet's inclusive system time (t - generation + 1).  The peak
recorded at a delivery is the just-grown age, i.e. the sawtooth value at the
reset instant, whose long-run mean decomposes into mean inter-arrival time
plus mean system time.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field


@dataclass
class LinkState:
    """Mutable per-link simulation state."""

    queue: deque = field(default_factory=deque)
    age: int = 0
    arrivals: int = 0
    deliveries: int = 0
    peak_sum: float = 0.0
    peak_count: int = 0
    sojourn_sum: float = 0.0
    recorded_deliveries: int = 0

    @property
    def queue_length(self) -> int:
        return len(self.queue)

    @property
    def head_generation(self) -> int | None:
        return self.queue[0] if self.queue else None


@dataclass(frozen=True)
class AoiStats:
    """Per-link summary over a finite horizon.

    peak_aoi is +inf when nothing was delivered in the recording window;
    such links are also flagged unstable.
    """

    peak_aoi: float
    mean_queue_delay: float
    throughput: float
    stable: bool


def step_arrival(state: LinkState, slot: int, arrived: bool) -> LinkState:
    """Push a generation timestamp at the start of a slot (FCFS, no losses)."""
    if arrived:
        state.queue.append(slot)
        state.arrivals += 1
    return state


def step_delivery(state: LinkState, slot: int, success: bool, record: bool = True) -> LinkState:
    """Apply one slot's outcome at slot end.

    The age always grows by one first.  On a successful delivery the grown
    age is recorded as this cycle's peak, the head packet is popped, and the
    age resets to slot - generation + 1.  Delivering from an empty queue is
    a caller bug and raises.
    """
    state.age += 1
    if success:
        if not state.queue:
            raise ValueError("delivery reported for an empty queue")
        generation = state.queue.popleft()
        if generation > slot:
            raise ValueError("delivery precedes the packet's generation slot")
        sojourn = slot - generation + 1
        if record:
            state.peak_sum += state.age
            state.peak_count += 1
            state.sojourn_sum += sojourn
            state.recorded_deliveries += 1
        state.deliveries += 1
        state.age = sojourn
    return state


def peak_aoi_estimate(state: LinkState, horizon: int,
                      stability_queue_factor: float = 0.3) -> AoiStats:
    """Summarize a finished run of `horizon` slots.

    stable requires at least one delivery and a final backlog below
    stability_queue_factor * arrivals, a heuristic flag for queues whose
    backlog kept growing over the horizon.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if state.peak_count > 0:
        peak = state.peak_sum / state.peak_count
        delay = state.sojourn_sum / state.recorded_deliveries
    else:
        peak = math.inf
        delay = math.inf
    throughput = state.deliveries / horizon
    stable = (state.deliveries > 0
              and state.queue_length <= stability_queue_factor * max(state.arrivals, 1))
    if state.peak_count == 0:
        stable = False
    return AoiStats(peak_aoi=peak, mean_queue_delay=delay,
                    throughput=throughput, stable=stable)


def analytic_peak_aoi(arrival_rate: float, service_rate: float) -> float:
    """Stationary mean peak age of a geometric-arrival, geometric-service
    queue: 1/xi + (1 - xi)/(p - xi) when p > xi, +inf otherwise."""
    if not 0.0 < arrival_rate <= 1.0:
        raise ValueError(f"arrival rate must lie in (0, 1], got {arrival_rate}")
    if not 0.0 < service_rate <= 1.0:
        raise ValueError(f"service rate must lie in (0, 1], got {service_rate}")
    if service_rate <= arrival_rate:
        return math.inf
    return 1.0 / arrival_rate + (1.0 - arrival_rate) / (service_rate - arrival_rate)
