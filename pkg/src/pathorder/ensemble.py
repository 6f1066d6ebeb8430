"""Replica ensembles between two phase-space cells and their path statistics."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pathorder._backend import kernels
from pathorder.dynamics import (
    CellPartition,
    MapKind,
    MapSystem,
    Trajectory,
    cell_index,
    cell_indices,
)

__all__ = [
    "NoResolvedPathsError",
    "Path",
    "PathDistribution",
    "PathEnsemble",
    "estimate_distribution",
    "path_action",
    "path_signature",
    "simulate_paths",
]

PROB_SUM_TOL = 1e-12


class NoResolvedPathsError(RuntimeError):
    """Every replica ran out of horizon before reaching the target cell."""


@dataclass(frozen=True)
class Path:
    signature: tuple[int, ...]
    travel_time: float
    action: float = math.nan

    def __post_init__(self):
        sig = tuple(int(c) for c in self.signature)
        if not sig:
            raise ValueError("path signature must be nonempty")
        object.__setattr__(self, "signature", sig)

    @property
    def source(self) -> int:
        return self.signature[0]

    @property
    def target(self) -> int:
        return self.signature[-1]


@dataclass
class PathEnsemble:
    paths: list[Path]
    counts: list[int]
    total: int
    unresolved: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.paths) != len(self.counts):
            raise ValueError("paths and counts must align")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")
        if sum(self.counts) + self.unresolved != self.total:
            raise ValueError(
                f"replica accounting broken: {sum(self.counts)} + {self.unresolved} != {self.total}")
        sigs = [p.signature for p in self.paths]
        if len(set(sigs)) != len(sigs):
            raise ValueError("paths must be pairwise distinct by signature")

    @property
    def resolved(self) -> int:
        return sum(self.counts)

    @property
    def n_paths(self) -> int:
        return sum(1 for c in self.counts if c > 0)


@dataclass(frozen=True)
class PathDistribution:
    """Strictly positive probabilities over ``omega`` paths, with their actions.

    Zero-probability paths are not representable: ``ln p`` must exist for
    every entry.
    """

    probabilities: np.ndarray
    actions: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=np.float64).ravel()
        a = np.array(self.actions, dtype=np.float64).ravel()
        labels = tuple(self.labels) if len(self.labels) else tuple(range(p.size))
        if p.size == 0:
            raise ValueError("a path distribution needs at least one path")
        if a.size != p.size or len(labels) != p.size:
            raise ValueError("probabilities, actions and labels must have equal length")
        if not np.all(np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
            raise ValueError("every path probability must lie in (0, 1]")
        if abs(math.fsum(p) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        p.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "actions", a)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_probabilities(cls, probabilities, actions=None, labels=()) -> "PathDistribution":
        p = np.asarray(probabilities, dtype=np.float64)
        if actions is None:
            actions = np.zeros(p.size)
        return cls(p, actions, labels)

    @property
    def omega(self) -> int:
        return self.probabilities.size

    def __len__(self) -> int:
        return self.omega


def as_distribution(dist) -> PathDistribution:
    if isinstance(dist, PathDistribution):
        return dist
    return PathDistribution.from_probabilities(dist)


def _collapse(cells: Sequence[int]) -> tuple[int, ...]:
    out = []
    for c in cells:
        c = int(c)
        if not out or out[-1] != c:
            out.append(c)
    return tuple(out)


def path_action(traj: Trajectory, system: MapSystem) -> float:
    """Discrete mechanical action ``sum_k [p_k^2/2 - V(q_k)] dt`` over the steps.

    ``V(q) = K/(4 pi^2) cos(2 pi q)`` for the standard map and zero for the
    cat and doubling maps. Each step uses the state it starts from.
    """
    if len(traj) < 2:
        raise ValueError("action needs a trajectory of at least two states")
    K = system.kick if system.map_id is MapKind.STANDARD else 0.0
    dt = traj.dt
    acc = 0.0
    for q, p in traj.states[:-1, :2]:
        lag = 0.5 * p * p
        if system.map_id is MapKind.STANDARD:
            lag = lag - K / (4.0 * math.pi * math.pi) * math.cos(2.0 * math.pi * q)
        acc = acc + float(lag) * dt
    return acc


def path_signature(traj: Trajectory, partition: CellPartition, source: int, target: int,
                   system: MapSystem | None = None) -> Path | None:
    """Duplicate-collapsed cell sequence up to the first entry into ``target``.

    Returns ``None`` when the trajectory never enters ``target``. The action
    is filled in only when ``system`` is given.
    """
    first = cell_index(partition, traj[0])
    if first != source:
        raise ValueError(f"trajectory starts in cell {first}, not source cell {source}")
    cells = cell_indices(partition, traj.states)
    hit = np.flatnonzero(cells[1:] == target) if source != target else np.flatnonzero(cells == target)
    if hit.size == 0:
        return None
    stop = int(hit[0]) + (1 if source != target else 0)
    sig = _collapse(cells[: stop + 1])
    action = math.nan
    if system is not None and stop >= 1:
        action = path_action(Trajectory(traj.states[: stop + 1], traj.dt), system)
    return Path(sig, (len(sig) - 1) * traj.dt, action)


def _initial_states(partition: CellPartition, source: int, L: int, seed: int) -> np.ndarray:
    box = partition.cell_box(source)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    starts = np.empty((L, len(lo)))
    for i in range(L):
        u = np.random.default_rng([seed, i]).random(len(lo))
        starts[i] = lo + (hi - lo) * u
    # rounding can push lo + w*u onto the upper face of the cell
    starts = np.minimum(starts, np.nextafter(hi, lo))
    return starts


def simulate_paths(system: MapSystem, partition: CellPartition, source: int, target: int,
                   L: int, horizon: int, seed: int, *, initial_states=None,
                   workers: int = 1) -> PathEnsemble:
    """Run ``L`` replicas from ``source`` until they first enter ``target``.

    Replica ``i`` draws its start uniformly inside the source cell from its
    own stream seeded by ``(seed, i)``, so the result does not depend on
    ``workers``. ``initial_states`` overrides the random starts.
    """
    n_cells = partition.n_cells
    for name, c in (("source", source), ("target", target)):
        if not 0 <= c < n_cells:
            raise ValueError(f"{name} cell {c} out of range [0, {n_cells})")
    if source == target:
        raise ValueError("source and target cells must differ")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if partition.domain.dim != 2:
        raise ValueError("partition must cover the 2-D phase space of the map")

    if initial_states is None:
        if L < 1:
            raise ValueError("replica count L must be >= 1")
        starts = _initial_states(partition, source, int(L), seed)
    else:
        starts = np.ascontiguousarray(initial_states, dtype=np.float64).reshape(-1, 2)
        L = starts.shape[0]
        if L < 1:
            raise ValueError("replica count L must be >= 1")
        if np.any(cell_indices(partition, starts) != source):
            raise ValueError("initial states must lie in the source cell")

    lo, hi = partition.domain.lo, partition.domain.hi
    r0, r1 = partition.resolution

    def run(block: np.ndarray):
        return kernels.first_passage(system.map_id.code, system.kick, np.ascontiguousarray(block),
                                     lo[0], lo[1], hi[0], hi[1], r0, r1, int(target),
                                     int(horizon), float(system.dt))

    blocks = np.array_split(starts, max(1, min(int(workers), L)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]
    cells = np.concatenate([r[0] for r in results])
    hits = np.concatenate([r[1] for r in results])
    actions = np.concatenate([r[2] for r in results])

    groups: dict[tuple[int, ...], list[float]] = {}
    for i in np.flatnonzero(hits >= 0):
        sig = _collapse(cells[i, : hits[i] + 1])
        groups.setdefault(sig, []).append(float(actions[i]))
    order = sorted(groups, key=lambda s: (-len(groups[s]), s))
    paths = [Path(s, (len(s) - 1) * system.dt, math.fsum(groups[s]) / len(groups[s])) for s in order]
    counts = [len(groups[s]) for s in order]
    unresolved = int(L) - sum(counts)
    meta = {
        "system": system.to_dict(),
        "partition": partition.to_dict(),
        "source": int(source),
        "target": int(target),
        "seed": int(seed),
        "horizon": int(horizon),
        "L": int(L),
        "renormalized_over_resolved": True,
    }
    return PathEnsemble(paths, counts, int(L), unresolved, meta)


def estimate_distribution(ens: PathEnsemble) -> PathDistribution:
    """``p_k = L_k / sum_j L_j`` over the resolved paths.

    Unresolved replicas are excluded from the denominator; the ensemble
    keeps their count.
    """
    keep = [(p, c) for p, c in zip(ens.paths, ens.counts) if c > 0]
    if not keep:
        raise NoResolvedPathsError(f"all {ens.total} replicas are unresolved")
    counts = np.array([c for _, c in keep], dtype=np.float64)
    probs = counts / counts.sum()
    actions = [p.action for p, _ in keep]
    labels = tuple(p.signature for p, _ in keep)
    return PathDistribution(probs, actions, labels)
