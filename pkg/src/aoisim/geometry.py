"""Poisson bipolar network geometry.

A realization places transmitters as a homogeneous Poisson point process on a
square region; each transmitter's dedicated receiver sits at a fixed distance
in a uniformly random direction.  The region either wraps around (torus, the
default, which removes edge effects) or is an ordinary patch of the plane
with a margin-trimmed measurement window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, TextIO

import numpy as np

from . import rng


class Point2(NamedTuple):
    x: float
    y: float


class Boundary(Enum):
    TORUS = "torus"
    FREE_PLANE = "free"


@dataclass(frozen=True)
class RegionSpec:
    """Square simulation region of a given side length.

    For FREE_PLANE, `margin` trims the measurement window: links whose
    transmitter falls within `margin` of the boundary are simulated (they
    interfere) but excluded from network-level averages.
    """

    side: float
    boundary: Boundary = Boundary.TORUS
    margin: float = 0.0

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError(f"region side must be positive, got {self.side}")
        if self.margin < 0 or self.margin >= self.side / 2:
            raise ValueError(f"margin must satisfy 0 <= margin < side/2, got {self.margin}")
        if self.boundary is Boundary.TORUS and self.margin != 0.0:
            raise ValueError("torus regions have no margin (no edge effects to trim)")

    @property
    def area(self) -> float:
        return self.side * self.side


class StoppingSet(Enum):
    """Which local observation a transmitter conditions its policy on."""

    EMPTY = "empty"
    FIXED_DISK = "disk"
    NEAREST_RECEIVER = "nearest"


@dataclass(frozen=True)
class StoppingSetSpec:
    variant: StoppingSet
    radius: float | None = None

    def __post_init__(self):
        if self.variant is StoppingSet.FIXED_DISK:
            if self.radius is None or self.radius <= 0:
                raise ValueError("fixed-disk observation requires a positive radius")
        elif self.radius is not None:
            raise ValueError(f"{self.variant.value} observation takes no radius")

    @classmethod
    def empty(cls) -> "StoppingSetSpec":
        return cls(StoppingSet.EMPTY)

    @classmethod
    def fixed_disk(cls, radius: float) -> "StoppingSetSpec":
        return cls(StoppingSet.FIXED_DISK, radius)

    @classmethod
    def nearest_receiver(cls) -> "StoppingSetSpec":
        return cls(StoppingSet.NEAREST_RECEIVER)

    def label(self) -> str:
        if self.variant is StoppingSet.FIXED_DISK:
            return f"disk:{self.radius:g}"
        return self.variant.value


@dataclass
class NetworkRealization:
    """One sampled network: paired transmitter/receiver coordinates.

    `transmitters` and `receivers` are (n, 2) arrays; row i is one link.
    """

    transmitters: np.ndarray
    receivers: np.ndarray
    link_distance: float
    density: float
    region: RegionSpec
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.transmitters = np.asarray(self.transmitters, dtype=float).reshape(-1, 2)
        self.receivers = np.asarray(self.receivers, dtype=float).reshape(-1, 2)
        if self.transmitters.shape != self.receivers.shape:
            raise ValueError("transmitter and receiver arrays must have matching shapes")
        if self.link_distance <= 0:
            raise ValueError("link distance must be positive")
        if self.density <= 0:
            raise ValueError("density must be positive")
        if self.validate:
            self._check_invariants()

    def _check_invariants(self):
        side = self.region.side
        if self.size == 0:
            return
        if np.any(self.transmitters < 0) or np.any(self.transmitters >= side):
            raise ValueError("transmitters must lie inside the region")
        if self.region.boundary is Boundary.TORUS:
            if np.any(self.receivers < 0) or np.any(self.receivers >= side):
                raise ValueError("receivers must lie inside the region (torus wraps them)")
        else:
            pad = self.link_distance
            if np.any(self.receivers < -pad) or np.any(self.receivers > side + pad):
                raise ValueError("receivers may protrude at most one link distance")
        d = pair_distances(self)
        if not np.allclose(d, self.link_distance, rtol=1e-9, atol=0):
            raise ValueError("every receiver must sit at the link distance from its transmitter")

    @property
    def size(self) -> int:
        return self.transmitters.shape[0]


def sample_bipolar(density: float, region: RegionSpec, link_distance: float,
                   seed: int, realization_index: int = 0) -> NetworkRealization:
    """Sample one bipolar network realization.

    The link count is Poisson(density * area); transmitters are uniform on
    the region and each receiver is offset by the link distance in a
    uniformly random direction (wrapped on a torus).
    """
    if density <= 0:
        raise ValueError("density must be positive")
    if link_distance <= 0:
        raise ValueError("link distance must be positive")
    if region.boundary is Boundary.FREE_PLANE and link_distance >= region.side:
        raise ValueError("link distance must be smaller than the region side")
    gen = rng.stream(seed, realization_index, rng.GEOMETRY)
    n = int(gen.poisson(density * region.area))
    tx = gen.random((n, 2)) * region.side
    theta = gen.random(n) * (2.0 * math.pi)
    offset = link_distance * np.column_stack([np.cos(theta), np.sin(theta)])
    rx = tx + offset
    if region.boundary is Boundary.TORUS:
        rx = np.mod(rx, region.side)
    return NetworkRealization(tx, rx, link_distance, density, region)


def distance(a, b, region: RegionSpec) -> float:
    """Distance between two points under the region's boundary rule."""
    dx = float(a[0]) - float(b[0])
    dy = float(a[1]) - float(b[1])
    if region.boundary is Boundary.TORUS:
        s = region.side
        dx -= s * round(dx / s)
        dy -= s * round(dy / s)
    return math.hypot(dx, dy)


def _difference(a: np.ndarray, b: np.ndarray, region: RegionSpec) -> np.ndarray:
    """Vector differences a[i] - b[j] under the boundary rule, shape (i, j, 2)."""
    diff = a[:, None, :] - b[None, :, :]
    if region.boundary is Boundary.TORUS:
        s = region.side
        diff -= s * np.round(diff / s)
    return diff


def pair_distances(realization: NetworkRealization) -> np.ndarray:
    """Per-link transmitter-to-own-receiver distances, shape (n,)."""
    diff = realization.transmitters - realization.receivers
    if realization.region.boundary is Boundary.TORUS:
        s = realization.region.side
        diff = diff - s * np.round(diff / s)
    return np.hypot(diff[:, 0], diff[:, 1])


def cross_distance_matrix(realization: NetworkRealization) -> np.ndarray:
    """Matrix d[i, j] = distance from transmitter i to receiver j.

    Row i read across gives the receivers transmitter i interferes with;
    column j read down gives the transmitters interfering at receiver j.
    The diagonal is each link's own transmitter-receiver distance.
    """
    diff = _difference(realization.transmitters, realization.receivers, realization.region)
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def shift(realization: NetworkRealization, origin) -> NetworkRealization:
    """Translate the network so `origin` maps to (0, 0).

    On a torus all coordinates are wrapped back into the region; pairwise
    distances are preserved, which makes the typical-link viewpoint of any
    node available by shifting it to the origin.
    """
    o = np.asarray([float(origin[0]), float(origin[1])])
    tx = realization.transmitters - o
    rx = realization.receivers - o
    if realization.region.boundary is Boundary.TORUS:
        tx = np.mod(tx, realization.region.side)
        rx = np.mod(rx, realization.region.side)
    return NetworkRealization(tx, rx, realization.link_distance, realization.density,
                              realization.region, validate=False)


def observed_receivers(realization: NetworkRealization, index: int,
                       spec: StoppingSetSpec) -> list[tuple[int, float]]:
    """Receivers of other links visible to transmitter `index` under `spec`.

    Returns (receiver_index, distance) pairs ordered by link index.  A
    fixed-disk observation uses the closed disk, so a receiver exactly on
    the boundary is included.  The nearest-receiver observation returns a
    single pair and requires at least one other link to exist.
    """
    n = realization.size
    if not 0 <= index < n:
        raise IndexError(f"link index {index} out of range for {n} links")
    if spec.variant is StoppingSet.EMPTY:
        return []
    diff = realization.receivers - realization.transmitters[index]
    if realization.region.boundary is Boundary.TORUS:
        s = realization.region.side
        diff = diff - s * np.round(diff / s)
    dist = np.hypot(diff[:, 0], diff[:, 1])
    dist[index] = np.inf
    if spec.variant is StoppingSet.FIXED_DISK:
        inside = np.flatnonzero(dist <= spec.radius)
        return [(int(j), float(dist[j])) for j in inside]
    if n < 2:
        raise ValueError("nearest-receiver observation needs at least two links")
    j = int(np.argmin(dist))
    return [(j, float(dist[j]))]


# ---------------------------------------------------------------------------
# Flat text serialization (debugging and test fixtures)
# ---------------------------------------------------------------------------

def save_realization(realization: NetworkRealization, fh: TextIO) -> None:
    """Write a realization as one 'tx_x tx_y rx_x rx_y' line per link."""
    fh.write(f"# side={realization.region.side!r} boundary={realization.region.boundary.value}"
             f" margin={realization.region.margin!r} link_distance={realization.link_distance!r}"
             f" density={realization.density!r}\n")
    for (tx, ty), (rx, ry) in zip(realization.transmitters, realization.receivers):
        fh.write(f"{float(tx)!r} {float(ty)!r} {float(rx)!r} {float(ry)!r}\n")


def load_realization(fh: TextIO) -> NetworkRealization:
    """Inverse of save_realization; round-trips coordinates exactly."""
    header = fh.readline()
    if not header.startswith("#"):
        raise ValueError("realization file must start with a '#' header line")
    meta = dict(token.split("=", 1) for token in header[1:].split())
    region = RegionSpec(side=float(meta["side"]), boundary=Boundary(meta["boundary"]),
                        margin=float(meta["margin"]))
    tx, rx = [], []
    for lineno, line in enumerate(fh, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 coordinates, got {len(parts)}")
        vals = [float(p) for p in parts]
        tx.append(vals[:2])
        rx.append(vals[2:])
    tx_arr = np.asarray(tx, dtype=float).reshape(-1, 2)
    rx_arr = np.asarray(rx, dtype=float).reshape(-1, 2)
    return NetworkRealization(tx_arr, rx_arr, float(meta["link_distance"]),
                              float(meta["density"]), region)
