"""Distributed averaging primitives.

Each round is written as the local rule a robot applies to its own value and
its inbox, so the network-level functions below are just that rule mapped
over robots after a synchronous ``exchange``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph import Graph, exchange


def _as_values(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim not in (1, 2):
        raise ValueError(f"per-robot values must be scalars or vectors, got shape {a.shape}")
    return a


def local_average(i: int, x_i, inbox: Mapping[int, object], W: np.ndarray):
    """w_ii x_i + sum_j w_ij x_j using only the inbox of robot i."""
    acc = W[i, i] * np.asarray(x_i, dtype=float)
    for j, x_j in inbox.items():
        acc = acc + W[i, j] * np.asarray(x_j, dtype=float)
    return acc


def local_centroid(z_i, inbox_z: Mapping[int, object], zij: Mapping[int, object], gamma: float) -> tuple:
    """z_i + gamma * sum_j (z_j + z_ij - z_i) for one robot (2-vectors)."""
    zx, zy = float(z_i[0]), float(z_i[1])
    ax = ay = 0.0
    for j, z_j in inbox_z.items():
        r = zij[j]
        ax += z_j[0] + r[0] - zx
        ay += z_j[1] + r[1] - zy
    return (zx + gamma * ax, zy + gamma * ay)


@dataclass(frozen=True)
class ConsensusState:
    x: np.ndarray


@dataclass(frozen=True)
class DynConsensusState:
    x: np.ndarray
    u: np.ndarray

    @classmethod
    def start(cls, u0) -> "DynConsensusState":
        u0 = _as_values(u0)
        return cls(u0.copy(), u0.copy())


@dataclass(frozen=True)
class CentroidState:
    z: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "CentroidState":
        return cls(np.zeros((n, 2)))


def _check_weights(W: np.ndarray, g: Graph):
    if W.shape != (g.n, g.n):
        raise ValueError(f"weight matrix shape {W.shape} does not match n={g.n}")


def avg_consensus_round(state: ConsensusState, W: np.ndarray, g: Graph) -> ConsensusState:
    x = _as_values(state.x)
    _check_weights(W, g)
    inbox = exchange(g, list(x))
    return ConsensusState(np.array([local_average(i, x[i], inbox[i], W) for i in range(g.n)]))


def dyn_consensus_round(state: DynConsensusState, W: np.ndarray, g: Graph, new_inputs) -> DynConsensusState:
    """x+ = W x + (u+ - u); the sum of x - u is conserved round to round."""
    x = _as_values(state.x)
    u_new = _as_values(new_inputs)
    if u_new.shape != x.shape:
        raise ValueError(f"input shape {u_new.shape} does not match tracker shape {x.shape}")
    _check_weights(W, g)
    inbox = exchange(g, list(x))
    mixed = np.array([local_average(i, x[i], inbox[i], W) for i in range(g.n)])
    return DynConsensusState(mixed + (u_new - state.u), u_new.copy())


def centroid_gain_ok(gamma: float, g: Graph) -> bool:
    return 0.0 < gamma * g.max_degree < 1.0


def default_gamma(g: Graph) -> float:
    return 0.2 / g.max_degree


def centroid_round(state: CentroidState, g: Graph, zij_meas: Mapping, gamma: float) -> CentroidState:
    """One round of the relative-measurement centroid estimator.

    ``zij_meas`` maps ordered pairs (i, j) to p_Ci - p_Cj for every edge in both
    directions. Antisymmetric inputs keep the sum of estimates unchanged.
    """
    if not centroid_gain_ok(gamma, g):
        raise ValueError(f"gain {gamma} outside the stable range (0, 1/{g.max_degree})")
    z = np.array(state.z, dtype=float)
    inbox = exchange(g, list(z))
    out = np.empty_like(z)
    for i in range(g.n):
        rel = {j: zij_meas[(i, j)] for j in g.neighbors(i)}
        out[i] = local_centroid(z[i], inbox[i], rel, gamma)
    return CentroidState(out)


def spread(x) -> float:
    """Largest distance between any robot's value and the network mean."""
    x = _as_values(x)
    d = x - x.mean(axis=0)
    if d.ndim == 1:
        return float(np.max(np.abs(d)))
    return float(np.max(np.linalg.norm(d, axis=1)))
