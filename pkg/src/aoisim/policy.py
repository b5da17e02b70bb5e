"""Locally adaptive channel-access probabilities.

Each transmitter observes the receivers of other links inside its stopping
set, summarizes them as distance factors, lumps everything outside the set
into a mean-field tail mass, and solves a one-dimensional fixed-point
equation for its transmit probability.  Nodes whose surroundings are quiet
enough (the opportunism condition fails) simply transmit every slot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np
from scipy import integrate

from .channel import ChannelParams, d_factor_from_distance
from .geometry import NetworkRealization, StoppingSet, StoppingSetSpec, observed_receivers

# Bisection terminates on a residual below this bound, or else runs the
# bracket down to floating-point exhaustion (the midpoint stops moving).
# The left-hand side is strictly decreasing on (0, 1] with no poles there,
# so bisection cannot stall.
_RESIDUAL_TOL = 1e-10
_ETA_FLOOR = 1e-12

_QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-11, limit=200)


@dataclass
class LocalObservation:
    """A node's view of the network: in-set distance factors plus the
    expected mass of everything beyond the stopping set."""

    in_set_factors: np.ndarray
    tail_mass: float

    def __post_init__(self):
        self.in_set_factors = np.asarray(self.in_set_factors, dtype=float).ravel()
        if np.any(self.in_set_factors <= 0):
            raise ValueError("distance factors must be positive")
        if not self.tail_mass >= 0:
            raise ValueError(f"tail mass must be nonnegative, got {self.tail_mass}")


@dataclass
class PolicyAssignment:
    """Per-link transmit probabilities for one realization."""

    gamma: np.ndarray
    spec: StoppingSetSpec

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float).ravel()
        if np.any((self.gamma <= 0) | (self.gamma > 1)):
            raise ValueError("transmit probabilities must lie in (0, 1]")


def tail_integral(radius: float, density: float, params: ChannelParams) -> float:
    """Expected out-of-disk interference mass.

    Computes 2*pi*density * integral_radius^inf v / (1 + v^alpha / (T r^alpha)) dv
    by substituting u = v^alpha / (T r^alpha) and then flattening each piece
    onto a bounded interval with a power-law change of variables, so the
    integrands are smooth and the infinite range contributes no truncation
    error.  Requires alpha > 2; relative accuracy is driven well below 1e-9.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if density < 0:
        raise ValueError("density must be nonnegative")
    if params.alpha <= 2:
        raise ValueError("tail integral diverges for path-loss exponents <= 2")
    if density == 0.0:
        return 0.0
    alpha = params.alpha
    beta = 2.0 / alpha
    c = params.interference_scale
    u0 = d_factor_from_distance(radius, params) if radius > 0 else 0.0
    if math.isinf(u0):
        return 0.0

    total = 0.0
    if u0 < 1.0:
        # u in [u0, 1]: with w = u^beta the piece becomes
        # (1/beta) * int dw / (1 + w^(1/beta)), smooth on [u0^beta, 1].
        inv_beta = 1.0 / beta
        lo = u0 ** beta
        val, _ = integrate.quad(lambda w: 1.0 / (1.0 + w ** inv_beta), lo, 1.0, **_QUAD_OPTS)
        total += val / beta
    # u in [max(u0, 1), inf): invert s = 1/u, then w = s^(1-beta); the piece
    # becomes (1/(1-beta)) * int_0^(s1^(1-beta)) dw / (1 + w^(1/(1-beta))).
    s1 = 1.0 / max(u0, 1.0)
    expo = 1.0 / (1.0 - beta)
    hi = s1 ** (1.0 - beta)
    val, _ = integrate.quad(lambda w: 1.0 / (1.0 + w ** expo), 0.0, hi, **_QUAD_OPTS)
    total += val * expo

    return 2.0 * math.pi * density * (c ** beta / alpha) * total


def opportunism_condition(obs: LocalObservation) -> bool:
    """True when the surroundings are loud enough that throttling pays off.

    Compares the observed interference mass, sum of 1/D plus the tail, to 1.
    When it fails the fixed point has no root below 1 and the node should
    transmit unconditionally.
    """
    with np.errstate(divide="ignore"):
        inv = np.where(np.isinf(obs.in_set_factors), 0.0, 1.0 / obs.in_set_factors)
    return bool(inv.sum() + obs.tail_mass > 1.0)


def fixed_point_lhs(eta: float, obs: LocalObservation) -> float:
    """Left-hand side of the access-probability fixed-point equation.

    1/eta - sum_j 1/(1 + D_j - eta) - tail_mass, strictly decreasing in eta
    on (0, 1] and diverging to +inf as eta -> 0+.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    terms = 1.0 / (1.0 + obs.in_set_factors - eta)
    return 1.0 / eta - float(terms.sum()) - obs.tail_mass


def solve_eta(obs: LocalObservation) -> float:
    """Solve the fixed point by bisection, or return 1 when opportunism fails.

    The bracket (0, 1] always contains exactly one root when the opportunism
    condition holds: the left-hand side blows up at 0+ and is negative at 1.
    """
    if not opportunism_condition(obs):
        return 1.0
    lo, hi = _ETA_FLOOR, 1.0
    f_lo = fixed_point_lhs(lo, obs)
    if f_lo <= 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f_mid = fixed_point_lhs(mid, obs)
        if abs(f_mid) < _RESIDUAL_TOL:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def observation_for(realization: NetworkRealization, index: int,
                    spec: StoppingSetSpec, params: ChannelParams,
                    tail_mass: float | None = None) -> LocalObservation:
    """Build a node's local observation under the given stopping set.

    The tail mass can be passed in when it is shared across nodes (a fixed
    disk has the same complement for everyone); otherwise it is computed
    from the stopping-set geometry.  An empty stopping set carries no
    information at all, in-set and tail alike, by convention.
    """
    if spec.variant is StoppingSet.EMPTY:
        return LocalObservation(np.empty(0), 0.0)
    observed = observed_receivers(realization, index, spec)
    factors = np.array([d_factor_from_distance(d, params) for _, d in observed])
    if tail_mass is None:
        if spec.variant is StoppingSet.FIXED_DISK:
            tail_mass = tail_integral(spec.radius, realization.density, params)
        else:
            tail_mass = tail_integral(observed[0][1], realization.density, params)
    return LocalObservation(factors, tail_mass)


def assign_policy(realization: NetworkRealization, spec: StoppingSetSpec,
                  params: ChannelParams) -> PolicyAssignment:
    """Compute every link's transmit probability for one realization.

    Empty stopping sets short-circuit to probability 1 for every node.  A
    fixed disk shares one tail integral across nodes; the nearest-receiver
    policy computes a per-node tail from the nearest interfered receiver's
    distance.
    """
    n = realization.size
    if spec.variant is StoppingSet.EMPTY:
        return PolicyAssignment(np.ones(n), spec)
    shared_tail = None
    if spec.variant is StoppingSet.FIXED_DISK:
        shared_tail = tail_integral(spec.radius, realization.density, params)
    gamma = np.ones(n)
    for i in range(n):
        obs = observation_for(realization, i, spec, params, tail_mass=shared_tail)
        gamma[i] = solve_eta(obs)
    return PolicyAssignment(gamma, spec)


def example_b_closed_form(nearest_distance: float, density: float,
                          params: ChannelParams) -> float:
    """Closed-form transmit probability for a single-receiver stopping set.

    With one in-set receiver at the given distance the fixed point is a
    quadratic in eta; its root in (0, 1] in cancellation-free form is
        eta = q / (m q / 2 + 1 + sqrt((m q / 2)^2 + 1)),
    where q = 1 + D and m is the tail mass beyond the nearest receiver.
    Falls back to 1 when the opportunism condition fails, and remains exact
    as m -> 0 (the root degenerates to q / 2).
    """
    if nearest_distance <= 0:
        raise ValueError("nearest receiver distance must be positive")
    d_c = d_factor_from_distance(nearest_distance, params)
    m = tail_integral(nearest_distance, density, params)
    inv_d = 0.0 if math.isinf(d_c) else 1.0 / d_c
    if inv_d + m <= 1.0:
        return 1.0
    q = 1.0 + d_c
    half_mq = 0.5 * m * q
    return q / (half_mq + 1.0 + math.sqrt(half_mq * half_mq + 1.0))


def save_assignment(assignment: PolicyAssignment, fh: TextIO) -> None:
    """One transmit probability per line, aligned with the realization file."""
    fh.write(f"# policy={assignment.spec.label()}\n")
    for g in assignment.gamma:
        fh.write(f"{float(g)!r}\n")


def load_assignment(fh: TextIO) -> PolicyAssignment:
    header = fh.readline()
    if not header.startswith("# policy="):
        raise ValueError("assignment file must start with a '# policy=' header")
    label = header.split("=", 1)[1].strip()
    if label.startswith("disk:"):
        spec = StoppingSetSpec.fixed_disk(float(label.split(":", 1)[1]))
    else:
        spec = StoppingSetSpec(StoppingSet(label))
    gamma = [float(line) for line in fh if line.strip() and not line.startswith("#")]
    return PolicyAssignment(np.asarray(gamma), spec)
