"""SINR success model with Rayleigh block fading.

A transmission on the reference link succeeds when its SINR exceeds the
decoding threshold.  With unit-mean exponential fades redrawn every slot the
conditional success probability, given the surrounding transmitter locations
and their activity probabilities, has a closed product form: a noise factor
exp(-T r^alpha / rho) times one factor (1 - a/(1 + D)) per interferer, where
D is the interferer's distance factor defined below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import NetworkRealization, RegionSpec, distance

# Exponent beyond which powers of distances are kept in the log domain; the
# factor 1/(1 + D) is then below double-precision resolution anyway.
_LOG_OVERFLOW = 700.0


@dataclass(frozen=True)
class ChannelParams:
    """Physical-layer parameters, all in linear units.

    alpha: path-loss exponent, must exceed 2 so far-field interference and
        the policy tail integral converge.
    threshold: SINR decoding threshold (linear, not dB).
    snr: transmit power over noise power at unit distance (P/sigma^2).
    link_distance: transmitter-to-receiver separation of every link.
    """

    alpha: float
    threshold: float
    snr: float
    link_distance: float

    def __post_init__(self):
        if self.alpha <= 2:
            raise ValueError(f"path-loss exponent must exceed 2, got {self.alpha}")
        if self.threshold <= 0:
            raise ValueError(f"SINR threshold must be positive, got {self.threshold}")
        if self.snr <= 0:
            raise ValueError(f"SNR must be positive, got {self.snr}")
        if self.link_distance <= 0:
            raise ValueError(f"link distance must be positive, got {self.link_distance}")

    @property
    def interference_scale(self) -> float:
        """T * r^alpha, the denominator of every distance factor."""
        return self.threshold * self.link_distance ** self.alpha

    @property
    def noise_factor(self) -> float:
        """Success probability of an interference-free link: exp(-T r^alpha / snr)."""
        return math.exp(-self.interference_scale / self.snr)


@dataclass
class InterfererView:
    """What the reference receiver sees: a distance factor and an activity
    (transmit probability) per surrounding transmitter."""

    d_factors: np.ndarray
    activities: np.ndarray

    def __post_init__(self):
        self.d_factors = np.asarray(self.d_factors, dtype=float).ravel()
        self.activities = np.asarray(self.activities, dtype=float).ravel()
        if self.d_factors.shape != self.activities.shape:
            raise ValueError("need one activity per distance factor")
        if np.any(self.d_factors <= 0):
            raise ValueError("distance factors must be positive")
        if np.any((self.activities < 0) | (self.activities > 1)):
            raise ValueError("activities must lie in [0, 1]")


def d_factor_from_distance(d: float, params: ChannelParams) -> float:
    """Distance factor d^alpha / (T r^alpha), computed in the log domain.

    Overflowing exponents saturate to +inf, which downstream formulas treat
    as a perfectly harmless interferer.
    """
    if d < 0:
        raise ValueError("distance must be nonnegative")
    if d == 0.0:
        return 0.0
    log_d = params.alpha * math.log(d) - math.log(params.interference_scale)
    if log_d > _LOG_OVERFLOW:
        return math.inf
    return math.exp(log_d)


def interference_factor(tx_point, rx_point, params: ChannelParams,
                        region: RegionSpec) -> float:
    """Distance factor of the interferer at tx_point toward rx_point."""
    return d_factor_from_distance(distance(tx_point, rx_point, region), params)


def success_probability(view: InterfererView, params: ChannelParams) -> float:
    """Conditional per-slot success probability of the reference link.

    Product form over independently fading, independently scheduled
    interferers; always bounded above by the noise factor.
    """
    factors = 1.0 - view.activities / (1.0 + view.d_factors)
    return params.noise_factor * float(np.prod(factors))


def dominant_success_probability(view: InterfererView, params: ChannelParams) -> float:
    """Success probability in the dominant system.

    In the dominant system every node transmits whenever scheduled (empty
    queues send dummies), so the per-interferer activity equals its channel
    access probability outright.  The view's activities are interpreted that
    way; the arithmetic is the same product form.
    """
    return success_probability(view, params)


def slot_sinr_success(link_index: int, active_set: Sequence[int],
                      realization: NetworkRealization, params: ChannelParams,
                      gen: np.random.Generator) -> bool:
    """Draw one slot's fades and test SINR > threshold for one link.

    Fades are unit-mean exponentials, one for the direct link and one per
    active interferer (drawn in ascending link order, self excluded).  Power
    is normalized to 1 with noise 1/snr, which leaves the SINR unchanged.
    """
    n = realization.size
    if not 0 <= link_index < n:
        raise IndexError(f"link index {link_index} out of range for {n} links")
    rx = realization.receivers[link_index]
    h_direct = gen.standard_exponential()
    signal = h_direct * realization.link_distance ** -params.alpha
    interference = 0.0
    for j in sorted(set(int(k) for k in active_set)):
        if j == link_index:
            continue
        if not 0 <= j < n:
            raise IndexError(f"active link index {j} out of range for {n} links")
        h = gen.standard_exponential()
        d = distance(realization.transmitters[j], rx, realization.region)
        interference += h * d ** -params.alpha
    sinr = signal / (interference + 1.0 / params.snr)
    return bool(sinr > params.threshold)
