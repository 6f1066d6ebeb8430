"""Maximum path-information distributions under a mean-action constraint.

The solution has the exponential-in-action form ``p_k = exp(-eta A_k) / Q``;
``eta`` is found by bisection on the mean-action map, which is strictly
decreasing in ``eta`` whenever the actions are not all equal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pathorder.ensemble import PathDistribution, as_distribution
from pathorder.entropy import entropy_gradient, entropy_gradients

__all__ = [
    "InfeasibleTargetError",
    "MaxEntSolution",
    "eta_from_gradient",
    "gibbs_probabilities",
    "mean_action",
    "partition_identity_check",
    "solve_maxent",
]

MEAN_TOL = 1e-10
_MAX_BRACKET_DOUBLINGS = 1100


class InfeasibleTargetError(ValueError):
    """The requested mean action lies outside the convex hull of the actions."""


@dataclass(frozen=True)
class MaxEntSolution:
    eta: float
    Q: float
    log_Q: float
    probabilities: np.ndarray
    mean_action: float
    iterations: int
    identity_sum: float

    def to_distribution(self, actions, labels=()) -> PathDistribution:
        return PathDistribution(self.probabilities, actions, labels)


def _log_partition(actions: np.ndarray, eta: float) -> tuple[float, np.ndarray]:
    """Return ``ln Q`` and the normalised weights, stable for any finite ``eta``."""
    z = -eta * actions
    zmax = z.max()
    w = np.exp(z - zmax)
    s = w.sum()
    return float(zmax + math.log(s)), w / s


def gibbs_probabilities(actions, eta: float) -> np.ndarray:
    return _log_partition(np.asarray(actions, dtype=np.float64), float(eta))[1]


def mean_action(actions, eta: float) -> float:
    a = np.asarray(actions, dtype=np.float64)
    return float(np.dot(gibbs_probabilities(a, eta), a))


def _solution(a: np.ndarray, eta: float, iterations: int) -> MaxEntSolution:
    if math.isinf(eta):
        extreme = a.min() if eta > 0 else a.max()
        mask = a == extreme
        p = mask / mask.sum()
        if extreme == 0:
            log_q = math.log(mask.sum())
        else:
            log_q = -math.inf if eta * extreme > 0 else math.inf
    else:
        log_q, p = _log_partition(a, eta)
    q = math.exp(log_q) if log_q < 709.0 else math.inf
    positive = p[p > 0]
    ident = float(np.exp(-entropy_gradients(positive)).sum())
    return MaxEntSolution(eta, q, log_q, p, float(np.dot(p, a)), iterations, ident)


def solve_maxent(actions, target_mean: float, tol: float = MEAN_TOL) -> MaxEntSolution:
    """Maximise ``-sum p ln p`` subject to ``sum p = 1`` and ``sum p A = target_mean``.

    If all actions are equal the answer is uniform and ``eta = 0`` is returned
    by convention. A target on the hull boundary gives ``eta = +/-inf`` with
    the mass spread evenly over the extreme actions.
    """
    a = np.asarray(actions, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("need at least one action")
    if not np.all(np.isfinite(a)):
        raise ValueError("actions must be finite")
    target = float(target_mean)
    lo_a, hi_a = float(a.min()), float(a.max())
    scale = max(1.0, abs(lo_a), abs(hi_a))
    if lo_a == hi_a:
        if abs(target - lo_a) > tol * scale:
            raise InfeasibleTargetError(
                f"all actions equal {lo_a}; target mean {target} is unreachable")
        return _solution(a, 0.0, 0)
    if target < lo_a or target > hi_a:
        raise InfeasibleTargetError(f"target mean {target} outside [{lo_a}, {hi_a}]")
    if target == lo_a:
        return _solution(a, math.inf, 0)
    if target == hi_a:
        return _solution(a, -math.inf, 0)

    # mean(eta) is decreasing: need mean(lo) >= target >= mean(hi)
    lo, hi = -1.0, 1.0
    iterations = 0
    while mean_action(a, hi) > target:
        lo, hi = hi, hi * 2.0
        iterations += 1
        if iterations > _MAX_BRACKET_DOUBLINGS:
            return _solution(a, math.inf, iterations)
    while mean_action(a, lo) < target:
        lo, hi = lo * 2.0, lo
        iterations += 1
        if iterations > _MAX_BRACKET_DOUBLINGS:
            return _solution(a, -math.inf, iterations)

    while True:
        iterations += 1
        eta = 0.5 * (lo + hi)
        m = mean_action(a, eta)
        if abs(m - target) <= tol * scale or eta in (lo, hi):
            break
        if m > target:
            lo = eta
        else:
            hi = eta
    return _solution(a, eta, iterations)


def eta_from_gradient(action_k: float, dist: PathDistribution, k: int, kB: float = 1.0) -> float:
    """Multiplier implied by path ``k``: ``(1 / (kB A_k)) dS/dp_k = -(1 + ln p_k) / A_k``."""
    if action_k == 0:
        raise ZeroDivisionError("eta is undefined for a path with zero action")
    return entropy_gradient(dist, kB, k) / (kB * float(action_k))


def partition_identity_check(dist: PathDistribution, kB: float = 1.0) -> float:
    """``sum_k exp(-(1/kB) dS/dp_k)``; equals ``e`` for every valid distribution."""
    p = as_distribution(dist).probabilities
    g = entropy_gradients(p, kB)
    return math.fsum(np.exp(-g / kB))
