"""Entropy generation: macroscopic balance and statistical path form."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from pathorder.ensemble import PROB_SUM_TOL, PathDistribution, as_distribution

__all__ = [
    "EntropyReport",
    "ThermoAccount",
    "entropy_generation_macroscopic",
    "entropy_generation_statistical",
    "entropy_gradient",
    "entropy_gradients",
    "entropy_report",
    "entropy_variation",
    "probability_from_gradient",
]

K_BOLTZMANN = 1.380649e-23


@dataclass(frozen=True)
class ThermoAccount:
    """Macroscopic terms of an open-system entropy balance (SI units).

    ``dS_ex`` is the net exchanged entropy ``S_in - S_out``.
    """

    Q_r: float = 0.0
    T_r: float = 1.0
    T_a: float = 1.0
    dH: float = 0.0
    dS_ex: float = 0.0
    dE_k: float = 0.0
    dE_g: float = 0.0
    W: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(float(value)):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if not (self.T_r > 0 and self.T_a > 0):
            raise ValueError(f"temperatures must be positive: T_r={self.T_r}, T_a={self.T_a}")

    @classmethod
    def from_dict(cls, data: dict) -> "ThermoAccount":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown ThermoAccount fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class EntropyReport:
    value: float
    form: Literal["macroscopic", "statistical"]
    inputs_hash: str


def entropy_generation_macroscopic(acct: ThermoAccount) -> float:
    """``(Q_r/T_a)(1 - T_a/T_r) + dH/T_a - dS_ex + (dE_k + dE_g - W)/T_a``."""
    a = acct
    return ((a.Q_r / a.T_a) * (1.0 - a.T_a / a.T_r)
            + a.dH / a.T_a
            - a.dS_ex
            + (a.dE_k + a.dE_g - a.W) / a.T_a)


def _positive_probs(dist) -> np.ndarray:
    p = as_distribution(dist).probabilities
    if np.any(p <= 0):
        raise ValueError("entropy gradient is undefined at zero probability")
    return p


def entropy_generation_statistical(dist: PathDistribution, kB: float = 1.0) -> float:
    if not kB > 0:
        raise ValueError("kB must be positive")
    p = _positive_probs(dist)
    return -kB * math.fsum(p * np.log(p))


def entropy_gradient(dist: PathDistribution, kB: float = 1.0, k: int = 0) -> float:
    """Partial derivative of the statistical entropy generation w.r.t. ``p_k``."""
    if not kB > 0:
        raise ValueError("kB must be positive")
    p = as_distribution(dist).probabilities
    if not -p.size <= k < p.size:
        raise IndexError(f"path index {k} out of range for {p.size} paths")
    pk = float(p[k])
    if pk <= 0:
        raise ValueError("gradient diverges at p_k = 0")
    return -kB * (1.0 + math.log(pk))


def entropy_gradients(probabilities, kB: float = 1.0) -> np.ndarray:
    """Elementwise ``-kB (1 + ln p)`` for any array of positive probabilities."""
    p = np.asarray(probabilities, dtype=np.float64)
    if np.any(p <= 0):
        raise ValueError("gradient diverges at p = 0")
    return -kB * (1.0 + np.log(p))


def probability_from_gradient(g, kB: float = 1.0):
    """Invert :func:`entropy_gradient`: ``exp(-g/kB - 1)``.

    Accepts scalars or arrays. Raises ``OverflowError`` rather than
    returning ``inf``.
    """
    if not kB > 0:
        raise ValueError("kB must be positive")
    if np.ndim(g) == 0:
        return math.exp(-float(g) / kB - 1.0)
    with np.errstate(over="raise"):
        try:
            return np.exp(-np.asarray(g, dtype=np.float64) / kB - 1.0)
        except FloatingPointError as exc:
            raise OverflowError("probability_from_gradient overflowed") from exc


def entropy_variation(dist: PathDistribution, dp, kB: float = 1.0) -> float:
    """First-order change ``-kB sum_k (1 + ln p_k) dp_k``.

    ``dp`` must conserve total probability.
    """
    p = _positive_probs(dist)
    dp = np.asarray(dp, dtype=np.float64).ravel()
    if dp.size != p.size:
        raise ValueError(f"perturbation has length {dp.size}, distribution has {p.size}")
    if abs(math.fsum(dp)) > PROB_SUM_TOL:
        raise ValueError(f"perturbation must sum to zero, sums to {math.fsum(dp)!r}")
    return -kB * math.fsum((1.0 + np.log(p)) * dp)


def _digest(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def entropy_report(source, kB: float = 1.0) -> EntropyReport:
    """Evaluate whichever form matches ``source`` and tag it with an input digest."""
    if isinstance(source, ThermoAccount):
        return EntropyReport(entropy_generation_macroscopic(source), "macroscopic",
                             _digest(asdict(source)))
    dist = as_distribution(source)
    value = entropy_generation_statistical(dist, kB)
    payload = {"p": [float(x).hex() for x in dist.probabilities], "kB": float(kB).hex()}
    return EntropyReport(value, "statistical", _digest(payload))
