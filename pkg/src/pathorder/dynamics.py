"""Chaotic test maps, phase-space partitions and ergodic diagnostics.

Three maps on the unit torus are provided, all written in ``(q, p)``
coordinates:

* ``cat``: Arnold's cat map ``(q, p) -> (2q + p, q + p) mod 1``.
* ``doubling``: ``q -> 2q mod 1`` with the momentum carried unchanged.
* ``standard``: Chirikov's map with kick strength ``K``,
  ``p' = p + K/(2 pi) sin(2 pi q) mod 1``, ``q' = q + p' mod 1``.

All three preserve Lebesgue measure on the unit square, which is what
:func:`space_average` samples from.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from pathorder._backend import kernels

__all__ = [
    "Box",
    "CellPartition",
    "DomainError",
    "MapKind",
    "MapSystem",
    "PhaseState",
    "Trajectory",
    "cat_map",
    "cell_index",
    "doubling_map",
    "integrate_trajectory",
    "random_orbit",
    "space_average",
    "standard_map",
    "steady_state_check",
    "step_map",
    "time_average",
]


class DomainError(ValueError):
    """A phase state lies outside the box it is required to be in."""


class MapKind(str, enum.Enum):
    CAT = "cat"
    DOUBLING = "doubling"
    STANDARD = "standard"

    @property
    def code(self) -> int:
        return _MAP_CODES[self]


_MAP_CODES = {MapKind.CAT: 0, MapKind.DOUBLING: 1, MapKind.STANDARD: 2}


@dataclass(frozen=True)
class PhaseState:
    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) == 0 or len(coords) % 2:
            raise ValueError(f"phase state needs an even, nonzero dimension, got {len(coords)}")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"phase state has non-finite component: {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)


@dataclass(frozen=True)
class Box:
    """Axis-aligned half-open box ``[lo, hi)``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be nonempty and of equal length")
        if any(not (b > a) for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim: int = 2) -> "Box":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, coords: Sequence[float]) -> bool:
        if len(coords) != self.dim:
            return False
        return all(a <= x < b for a, x, b in zip(self.lo, coords, self.hi))


@dataclass(frozen=True)
class MapSystem:
    map_id: MapKind
    params: dict = field(default_factory=dict)
    domain: Box = field(default_factory=Box.unit)
    dt: float = 1.0

    def __post_init__(self):
        try:
            kind = MapKind(self.map_id)
        except ValueError:
            raise ValueError(f"unknown map_id {self.map_id!r}; expected one of "
                             f"{[k.value for k in MapKind]}") from None
        object.__setattr__(self, "map_id", kind)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.domain.dim != 2:
            raise ValueError("the shipped maps live on a 2-D phase space")
        allowed = {"K"} if kind is MapKind.STANDARD else set()
        extra = set(self.params) - allowed
        if extra:
            raise ValueError(f"{kind.value} map does not take parameters {sorted(extra)}")
        if kind is MapKind.STANDARD:
            if "K" not in self.params:
                raise ValueError("standard map requires parameter K")
            if not math.isfinite(float(self.params["K"])):
                raise ValueError("K must be finite")

    @property
    def kick(self) -> float:
        return float(self.params.get("K", 0.0))

    def to_dict(self) -> dict:
        return {
            "map": self.map_id.value,
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "domain": {"lo": list(self.domain.lo), "hi": list(self.domain.hi)},
            "dt": self.dt,
        }


def cat_map(dt: float = 1.0) -> MapSystem:
    return MapSystem(MapKind.CAT, {}, Box.unit(), dt)


def doubling_map(dt: float = 1.0) -> MapSystem:
    return MapSystem(MapKind.DOUBLING, {}, Box.unit(), dt)


def standard_map(K: float, dt: float = 1.0) -> MapSystem:
    return MapSystem(MapKind.STANDARD, {"K": float(K)}, Box.unit(), dt)


@dataclass(frozen=True)
class CellPartition:
    """Uniform grid of ``prod(resolution)`` cells over ``domain``.

    Cells are numbered in row-major order over the axes, so for a 2-D grid
    the flat index is ``i_q * resolution[1] + i_p``.
    """

    domain: Box
    resolution: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(r) for r in self.resolution)
        if len(res) != self.domain.dim:
            raise ValueError("one resolution entry per domain axis is required")
        if any(r < 1 for r in res):
            raise ValueError(f"resolution must be >= 1 per axis, got {res}")
        object.__setattr__(self, "resolution", res)

    @property
    def n_cells(self) -> int:
        return math.prod(self.resolution)

    def cell_box(self, cell: int) -> Box:
        """Return the half-open box covered by ``cell``."""
        if not 0 <= cell < self.n_cells:
            raise ValueError(f"cell id {cell} out of range [0, {self.n_cells})")
        idx = np.unravel_index(cell, self.resolution)
        lo, hi = [], []
        for a, b, r, i in zip(self.domain.lo, self.domain.hi, self.resolution, idx):
            w = (b - a) / r
            lo.append(a + w * int(i))
            hi.append(a + w * (int(i) + 1) if int(i) + 1 < r else b)
        return Box(tuple(lo), tuple(hi))

    def to_dict(self) -> dict:
        return {
            "domain": {"lo": list(self.domain.lo), "hi": list(self.domain.hi)},
            "resolution": list(self.resolution),
        }


@dataclass(frozen=True)
class Trajectory:
    """Consecutive map iterates stored as an ``(n, dim)`` array."""

    states: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.states, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("trajectory needs a nonempty (n, dim) array of states")
        arr.setflags(write=False)
        object.__setattr__(self, "states", arr)
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @classmethod
    def from_states(cls, states: Sequence[PhaseState | Sequence[float]], dt: float = 1.0):
        rows = [s.coords if isinstance(s, PhaseState) else tuple(s) for s in states]
        return cls(np.array(rows, dtype=np.float64), dt)

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, k: int) -> PhaseState:
        return PhaseState(tuple(self.states[k]))


def _coords(s) -> tuple[float, ...]:
    if isinstance(s, PhaseState):
        return s.coords
    return PhaseState(tuple(s)).coords


def _check_in(domain: Box, coords) -> None:
    if not domain.contains(coords):
        raise DomainError(f"state {tuple(coords)} outside domain [{domain.lo}, {domain.hi})")


def step_map(system: MapSystem, s: PhaseState) -> PhaseState:
    coords = _coords(s)
    _check_in(system.domain, coords)
    out = kernels.iterate(system.map_id.code, system.kick, coords[0], coords[1], 1)
    return PhaseState((float(out[1, 0]), float(out[1, 1])))


def integrate_trajectory(system: MapSystem, s0: PhaseState, n: int) -> Trajectory:
    if n < 1:
        raise ValueError(f"step count must be >= 1, got {n}")
    coords = _coords(s0)
    _check_in(system.domain, coords)
    states = kernels.iterate(system.map_id.code, system.kick, coords[0], coords[1], int(n))
    return Trajectory(states, system.dt)


_MANTISSA_BITS = 53


def random_orbit(system: MapSystem, n: int, seed: int) -> Trajectory:
    """Orbit of ``n + 1`` states from a seeded, uniformly random start.

    For the doubling map, floating-point iteration collapses onto 0 within
    about 53 steps, so the orbit is instead read off a random binary
    expansion: state ``k`` is the 53-bit window starting at bit ``k``.
    That is the exact orbit of a real initial point, truncated to double
    precision at every step.
    """
    if n < 1:
        raise ValueError(f"step count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    lo = np.asarray(system.domain.lo)
    hi = np.asarray(system.domain.hi)
    if system.map_id is not MapKind.DOUBLING:
        s0 = lo + (hi - lo) * rng.random(2)
        return integrate_trajectory(system, PhaseState(tuple(s0)), n)

    p0 = float(lo[1] + (hi[1] - lo[1]) * rng.random())
    bits = rng.integers(0, 2, size=n + _MANTISSA_BITS, dtype=np.uint8)
    weights = np.ldexp(1.0, -np.arange(1, _MANTISSA_BITS + 1))
    windows = np.lib.stride_tricks.sliding_window_view(bits, _MANTISSA_BITS)
    q = np.empty(n + 1)
    chunk = 1 << 16
    for start in range(0, n + 1, chunk):
        stop = min(start + chunk, n + 1)
        q[start:stop] = windows[start:stop].astype(np.float64) @ weights
    states = np.column_stack([q, np.full(n + 1, p0)])
    return Trajectory(states, system.dt)


def cell_index(partition: CellPartition, s: PhaseState) -> int:
    coords = _coords(s)
    _check_in(partition.domain, coords)
    idx = 0
    for x, a, b, r in zip(coords, partition.domain.lo, partition.domain.hi, partition.resolution):
        i = int(math.floor((x - a) / (b - a) * r))
        idx = idx * r + min(i, r - 1)
    return idx


def cell_indices(partition: CellPartition, states: np.ndarray) -> np.ndarray:
    """Vectorised :func:`cell_index` for an ``(n, dim)`` array of in-domain states."""
    states = np.asarray(states, dtype=np.float64)
    lo = np.asarray(partition.domain.lo)
    hi = np.asarray(partition.domain.hi)
    if np.any(states < lo) or np.any(states >= hi):
        raise DomainError("some states lie outside the partition domain")
    res = np.asarray(partition.resolution)
    ijk = np.floor((states - lo) / (hi - lo) * res).astype(np.int64)
    ijk = np.minimum(ijk, res - 1)
    return np.ravel_multi_index(tuple(ijk.T), partition.resolution)


Observable = Callable[..., float]


def time_average(traj: Trajectory, observable: Observable, vectorized: bool = False) -> float:
    """Mean of ``observable`` along the trajectory.

    With ``vectorized=True`` the observable receives the whole ``(n, dim)``
    state array and must return ``n`` values.
    """
    if vectorized:
        values = np.asarray(observable(traj.states), dtype=np.float64)
        return float(values.mean())
    total = math.fsum(float(observable(PhaseState(tuple(row)))) for row in traj.states)
    return total / len(traj)


def space_average(system: MapSystem, observable: Observable, samples: int, seed: int,
                  vectorized: bool = False) -> float:
    """Monte Carlo mean of ``observable`` under the uniform measure on the domain."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    lo = np.asarray(system.domain.lo)
    hi = np.asarray(system.domain.hi)
    pts = lo + (hi - lo) * rng.random((int(samples), system.domain.dim))
    if vectorized:
        return float(np.asarray(observable(pts), dtype=np.float64).mean())
    return math.fsum(float(observable(PhaseState(tuple(row)))) for row in pts) / samples


def steady_state_check(series: Sequence[float], zeta: float, epsilon: float) -> bool:
    """True iff every time average in ``series`` stays within ``epsilon`` of ``zeta``.

    Deviations are compared with a relative slack of 1e-12 so that a value
    sitting exactly on the band edge is not rejected by decimal rounding.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    values = [float(v) for v in series]
    if not values:
        raise ValueError("series must be nonempty")
    for v in values:
        dev = abs(v - zeta)
        slack = 1e-12 * max(abs(v), abs(zeta), epsilon, 1e-300)
        if dev > epsilon + slack:
            return False
    return True
