"""Orderings on paths and on discrete random variables.

Two different relations live here and are kept apart on purpose:

* the *path order* ranks paths of one distribution by their probability
  (:func:`compare_paths`), or equivalently by the entropy-generation
  gradient, which decreases strictly in ``p`` (:func:`gradient_order`);
* the *usual stochastic order* ``X <=_st Y`` between random variables,
  checked through CDFs (:func:`usual_order`) and witnessed constructively
  by the quantile coupling (:func:`build_coupling`).

Convolution and mixture, under which the usual order is closed, act on
:class:`DiscreteRV`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pathorder.ensemble import PROB_SUM_TOL, PathDistribution, as_distribution
from pathorder.entropy import entropy_gradients

__all__ = [
    "Coupling",
    "DiscreteRV",
    "NotOrderedError",
    "Order",
    "PathOrderResult",
    "Relation",
    "bernoulli",
    "build_coupling",
    "compare_paths",
    "convolve",
    "convolve_all",
    "gradient_order",
    "greatest_path",
    "mixture",
    "path_variable",
    "point_mass",
    "usual_order",
]

CDF_TOL = 1e-12


class Relation(str, enum.Enum):
    LESS = "less"
    GREATER = "greater"
    EQUAL = "equal"


class Order(str, enum.Enum):
    LE = "X<=Y"
    GE = "Y<=X"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class PathOrderResult:
    relation: Relation
    p_i: float
    p_j: float
    g_i: float
    g_j: float


def _pair(dist, i: int, j: int, kB: float):
    d = as_distribution(dist)
    n = d.omega
    for idx in (i, j):
        if not 0 <= idx < n:
            raise IndexError(f"path index {idx} out of range for {n} paths")
    p_i, p_j = float(d.probabilities[i]), float(d.probabilities[j])
    g_i, g_j = (float(g) for g in entropy_gradients([p_i, p_j], kB))
    return p_i, p_j, g_i, g_j


def compare_paths(dist: PathDistribution, i: int, j: int, kB: float = 1.0) -> PathOrderResult:
    """Order paths ``i`` and ``j`` by probability; ties give ``EQUAL``."""
    p_i, p_j, g_i, g_j = _pair(dist, i, j, kB)
    if p_i < p_j:
        rel = Relation.LESS
    elif p_i > p_j:
        rel = Relation.GREATER
    else:
        rel = Relation.EQUAL
    return PathOrderResult(rel, p_i, p_j, g_i, g_j)


def gradient_order(dist: PathDistribution, i: int, j: int, kB: float = 1.0) -> PathOrderResult:
    """Order paths by entropy gradient alone.

    The gradient ``-kB (1 + ln p)`` falls as ``p`` grows, so path ``i`` is
    the smaller one exactly when its gradient is the *larger*.
    """
    p_i, p_j, g_i, g_j = _pair(dist, i, j, kB)
    if g_i > g_j:
        rel = Relation.LESS
    elif g_i < g_j:
        rel = Relation.GREATER
    else:
        rel = Relation.EQUAL
    return PathOrderResult(rel, p_i, p_j, g_i, g_j)


def greatest_path(dist: PathDistribution) -> frozenset[int]:
    """Indices of every path attaining the maximal probability."""
    p = as_distribution(dist).probabilities
    return frozenset(int(k) for k in np.flatnonzero(p == p.max()))


@dataclass(frozen=True)
class DiscreteRV:
    """Finite-support real random variable with strictly increasing support."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        x = np.array(self.support, dtype=np.float64).ravel()
        p = np.array(self.probs, dtype=np.float64).ravel()
        if x.size == 0 or x.size != p.size:
            raise ValueError("support and probs must be nonempty and of equal length")
        if not np.all(np.isfinite(x)):
            raise ValueError("support must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(p <= 0) or np.any(p > 1):
            raise ValueError("probabilities must lie in (0, 1]")
        if abs(math.fsum(p) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "support", x)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_atoms(cls, values, weights) -> "DiscreteRV":
        """Build from unsorted, possibly repeated atoms; zero weights are dropped
        and the result is renormalised."""
        v = np.asarray(values, dtype=np.float64).ravel()
        w = np.asarray(weights, dtype=np.float64).ravel()
        if v.size != w.size:
            raise ValueError("values and weights must align")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        keep = w > 0
        v, w = v[keep], w[keep]
        support, inverse = np.unique(v, return_inverse=True)
        mass = np.bincount(inverse, weights=w, minlength=support.size)
        return cls(support, mass / mass.sum())

    def cdf(self, t) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(self.support, np.asarray(t, dtype=np.float64), side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "probs": self.probs.tolist()}


def point_mass(x: float) -> DiscreteRV:
    return DiscreteRV([x], [1.0])


def bernoulli(q: float) -> DiscreteRV:
    if not 0 <= q <= 1:
        raise ValueError("Bernoulli parameter must lie in [0, 1]")
    return DiscreteRV.from_atoms([0.0, 1.0], [1.0 - q, q])


def path_variable(dist: PathDistribution, values=None) -> DiscreteRV:
    """Random variable taking ``values[k]`` (default: the path action) with
    probability ``p_k``. Paths with equal values are merged."""
    d = as_distribution(dist)
    v = d.actions if values is None else np.asarray(values, dtype=np.float64)
    return DiscreteRV.from_atoms(v, d.probabilities)


def usual_order(X: DiscreteRV, Y: DiscreteRV, tol: float = CDF_TOL) -> Order:
    """Compare CDFs on the merged support: ``X <= Y`` iff ``F_X >= F_Y`` everywhere."""
    grid = np.union1d(X.support, Y.support)
    diff = X.cdf(grid) - Y.cdf(grid)
    if np.all(np.abs(diff) <= tol):
        return Order.EQUAL
    if np.all(diff >= -tol):
        return Order.LE
    if np.all(diff <= tol):
        return Order.GE
    return Order.INCOMPARABLE


class NotOrderedError(ValueError):
    """Raised by :func:`build_coupling` with a point where ``F_X(t) < F_Y(t)``."""

    def __init__(self, witness: float):
        self.witness = float(witness)
        super().__init__(f"X is not stochastically below Y: F_X(t) < F_Y(t) at t = {witness!r}")


@dataclass(frozen=True)
class Coupling:
    """Quantile coupling of ``X`` and ``Y`` driven by a common uniform ``Z``.

    ``Z`` is discretised into the intervals ``(breaks[a], breaks[a+1]]`` of
    the merged cumulative grid; atom ``a`` has mass ``z_probs[a]`` and maps
    to ``psi1[a]`` under ``X`` and ``psi2[a]`` under ``Y``.
    """

    breaks: np.ndarray
    z_probs: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray

    def marginals(self) -> tuple[DiscreteRV, DiscreteRV]:
        return (DiscreteRV.from_atoms(self.psi1, self.z_probs),
                DiscreteRV.from_atoms(self.psi2, self.z_probs))

    def to_rows(self) -> list[dict]:
        return [{"z_lo": float(self.breaks[a]), "z_hi": float(self.breaks[a + 1]),
                 "mass": float(m), "psi1": float(u), "psi2": float(v)}
                for a, (m, u, v) in enumerate(zip(self.z_probs, self.psi1, self.psi2))]


def _cumulative(rv: DiscreteRV) -> np.ndarray:
    cum = np.cumsum(rv.probs)
    cum[-1] = 1.0
    return cum


def _snap(cum: np.ndarray, breaks: np.ndarray) -> np.ndarray:
    """Move each cumulative value onto the nearest retained breakpoint."""
    j = np.clip(np.searchsorted(breaks, cum), 1, breaks.size - 1)
    left, right = breaks[j - 1], breaks[j]
    return np.where(cum - left <= right - cum, left, right)


def build_coupling(X: DiscreteRV, Y: DiscreteRV, tol: float = CDF_TOL) -> Coupling:
    """Inverse-CDF coupling ``X = F_X^-1(Z)``, ``Y = F_Y^-1(Z)``.

    Succeeds when ``psi1 <= psi2`` on every atom of ``Z``; otherwise raises
    :class:`NotOrderedError` carrying a crossing point.
    """
    ux, uy = _cumulative(X), _cumulative(Y)
    merged = np.sort(np.concatenate([[0.0], ux, uy]))
    breaks = [merged[0]]
    for u in merged[1:]:
        if u - breaks[-1] > tol:
            breaks.append(u)
    breaks[-1] = 1.0
    breaks = np.asarray(breaks)
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    ix = np.searchsorted(_snap(ux, breaks), mid, side="left")
    iy = np.searchsorted(_snap(uy, breaks), mid, side="left")
    psi1 = X.support[ix]
    psi2 = Y.support[iy]
    bad = np.flatnonzero(psi1 > psi2)
    if bad.size:
        raise NotOrderedError(psi2[bad[0]])
    return Coupling(breaks, np.diff(breaks), psi1, psi2)


def convolve(X: DiscreteRV, Y: DiscreteRV) -> DiscreteRV:
    """Law of ``X + Y`` for independent ``X`` and ``Y``."""
    sums = np.add.outer(X.support, Y.support).ravel()
    mass = np.multiply.outer(X.probs, Y.probs).ravel()
    return DiscreteRV.from_atoms(sums, mass)


def convolve_all(rvs: Sequence[DiscreteRV]) -> DiscreteRV:
    if not rvs:
        raise ValueError("need at least one random variable")
    out = rvs[0]
    for rv in rvs[1:]:
        out = convolve(out, rv)
    return out


def mixture(components: Sequence[DiscreteRV], weights) -> DiscreteRV:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if len(components) == 0 or w.size != len(components):
        raise ValueError("one weight per component is required")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("mixture weights must be finite and nonnegative")
    if abs(math.fsum(w) - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"mixture weights sum to {math.fsum(w)!r}, not 1")
    values = np.concatenate([c.support for c in components])
    mass = np.concatenate([wc * c.probs for wc, c in zip(w, components)])
    return DiscreteRV.from_atoms(values, mass)
