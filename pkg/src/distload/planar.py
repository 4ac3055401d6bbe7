"""Ground-truth planar rigid-body model of the manipulated load.

Contact points are stored as body-frame offsets from the centre of mass and
rotated into the world frame on demand, so rigidity holds by construction.
All functions are pure: state goes in, a new state comes out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def perp(q) -> np.ndarray:
    """Rotate a planar vector by +90 degrees: (x, y) -> (-y, x)."""
    return np.array([-q[1], q[0]], dtype=float)


def rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Wrench2:
    """Planar force plus torque about the plane normal."""

    f: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).reshape(2)
        if not (np.all(np.isfinite(f)) and math.isfinite(self.tau)):
            raise ValueError(f"non-finite wrench: f={f}, tau={self.tau}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "tau", float(self.tau))

    @classmethod
    def zero(cls) -> "Wrench2":
        return cls(np.zeros(2), 0.0)


@dataclass(frozen=True)
class LoadParams:
    """Inertial and geometric parameters of the load.

    ``r_contacts`` holds one body-frame offset per robot, measured from the
    centre of mass. ``g_env`` is the environmental wrench and must be zero.
    """

    m: float
    J: float
    r_contacts: np.ndarray
    g_env: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        r = np.array(self.r_contacts, dtype=float)
        if r.ndim != 2 or r.shape[1] != 2:
            raise ValueError(f"r_contacts must be (n, 2), got shape {r.shape}")
        if not (self.m > 0 and self.J > 0):
            raise ValueError(f"mass and inertia must be positive (m={self.m}, J={self.J})")
        if r.shape[0] < 2:
            raise ValueError("at least two contact points are required")
        if not np.all(np.isfinite(r)):
            raise ValueError("non-finite contact offset")
        n = r.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                if np.allclose(r[i], r[j], rtol=0.0, atol=1e-12):
                    raise ValueError(f"contact points {i} and {j} overlap")
        if any(float(g) != 0.0 for g in self.g_env):
            raise ValueError("environmental wrench must be zero in this model")
        r.setflags(write=False)
        object.__setattr__(self, "r_contacts", r)
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "J", float(self.J))

    @property
    def n(self) -> int:
        return self.r_contacts.shape[0]

    @property
    def z_C_body(self) -> np.ndarray:
        """Geometric centre of the contacts relative to the CoM, body frame."""
        return self.r_contacts.mean(axis=0)


@dataclass(frozen=True)
class LoadState:
    p_C: np.ndarray = field(default_factory=lambda: np.zeros(2))
    theta: float = 0.0
    v_C: np.ndarray = field(default_factory=lambda: np.zeros(2))
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p_C", np.asarray(self.p_C, dtype=float).reshape(2))
        object.__setattr__(self, "v_C", np.asarray(self.v_C, dtype=float).reshape(2))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "omega", float(self.omega))

    def as_vector(self) -> np.ndarray:
        return np.array([*self.p_C, self.theta, *self.v_C, self.omega])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "LoadState":
        return cls(np.array(x[0:2]), x[2], np.array(x[3:5]), x[5])


def partial_grasp(p_Ci, p_C) -> np.ndarray:
    """Partial grasp matrix of one contact (contact frame aligned with world)."""
    G = np.eye(3)
    G[2, 0:2] = perp(np.asarray(p_Ci, dtype=float) - np.asarray(p_C, dtype=float))
    return G


def contact_offsets(state: LoadState, params: LoadParams) -> np.ndarray:
    """World-frame offsets p_Ci - p_C, shape (n, 2)."""
    return params.r_contacts @ rot(state.theta).T


def contact_positions(state: LoadState, params: LoadParams) -> np.ndarray:
    return state.p_C + contact_offsets(state, params)


def centroid_offsets(state: LoadState, params: LoadParams) -> np.ndarray:
    """z_i = p_Ci - p_G for every contact, shape (n, 2). Rows sum to zero."""
    q = contact_offsets(state, params)
    return q - q.mean(axis=0)


def com_offset(state: LoadState, params: LoadParams) -> np.ndarray:
    """z_C = p_G - p_C in the world frame."""
    return rot(state.theta) @ params.z_C_body


def _check_wrenches(wrenches, n: int):
    if len(wrenches) != n:
        raise ValueError(f"expected {n} wrenches, got {len(wrenches)}")


def total_wrench(state: LoadState, params: LoadParams, wrenches: Sequence[Wrench2]) -> np.ndarray:
    """Sum of G_i u_i: (total force, torque about the CoM)."""
    _check_wrenches(wrenches, params.n)
    q = contact_offsets(state, params)
    u = np.zeros(3)
    for qi, w in zip(q, wrenches):
        u[0:2] += w.f
        u[2] += qi[0] * w.f[1] - qi[1] * w.f[0] + w.tau
    return u


def _moments(params: LoadParams, wrenches: Sequence[Wrench2]):
    # torque(theta) = cos(theta) * A - sin(theta) * B + T for wrenches held fixed
    r = params.r_contacts
    f = np.array([w.f for w in wrenches])
    A = float(np.sum(r[:, 0] * f[:, 1] - r[:, 1] * f[:, 0]))
    B = float(np.sum(r[:, 0] * f[:, 0] + r[:, 1] * f[:, 1]))
    T = float(sum(w.tau for w in wrenches))
    F = f.sum(axis=0)
    return float(F[0]), float(F[1]), A, B, T


def _rk4(x, ax, ay, A, B, T, inv_J, dt):
    px, py, th, vx, vy, w = x

    def wdot(theta):
        return (math.cos(theta) * A - math.sin(theta) * B + T) * inv_J

    # positions and angle integrate velocities; v and omega obey the held wrenches
    k1w = wdot(th)
    th2 = th + 0.5 * dt * w
    w2 = w + 0.5 * dt * k1w
    k2w = wdot(th2)
    th3 = th + 0.5 * dt * w2
    w3 = w + 0.5 * dt * k2w
    k3w = wdot(th3)
    th4 = th + dt * w3
    w4 = w + dt * k3w
    k4w = wdot(th4)
    vx2 = vx + 0.5 * dt * ax
    vy2 = vy + 0.5 * dt * ay
    vx4 = vx + dt * ax
    vy4 = vy + dt * ay
    return (
        px + dt / 6.0 * (vx + 4.0 * vx2 + vx4),
        py + dt / 6.0 * (vy + 4.0 * vy2 + vy4),
        th + dt / 6.0 * (w + 2.0 * w2 + 2.0 * w3 + w4),
        vx4,
        vy4,
        w + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )


def advance(
    state: LoadState,
    params: LoadParams,
    wrenches: Sequence[Wrench2],
    dt: float,
    steps: int = 1,
) -> LoadState:
    """Integrate ``steps`` RK4 steps of size ``dt`` with the wrenches held constant."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    _check_wrenches(wrenches, params.n)
    x = state.as_vector()
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite load state")
    Fx, Fy, A, B, T = _moments(params, wrenches)
    ax, ay, inv_J = Fx / params.m, Fy / params.m, 1.0 / params.J
    xt = tuple(float(v) for v in x)
    for _ in range(steps):
        xt = _rk4(xt, ax, ay, A, B, T, inv_J, dt)
    return LoadState.from_vector(xt)


def step(state: LoadState, params: LoadParams, wrenches: Sequence[Wrench2], dt: float) -> LoadState:
    """One fixed RK4 step of the load dynamics under zero-order-held wrenches."""
    return advance(state, params, wrenches, dt, 1)


def accelerations(state: LoadState, params: LoadParams, wrenches: Sequence[Wrench2]):
    """(dv_C/dt, domega/dt) for the given state and wrenches."""
    u = total_wrench(state, params, wrenches)
    return u[0:2] / params.m, u[2] / params.J


def contact_velocity(state: LoadState, params: LoadParams, i: int) -> np.ndarray:
    if not 0 <= i < params.n:
        raise IndexError(f"contact index {i} out of range for n={params.n}")
    q = rot(state.theta) @ params.r_contacts[i]
    return state.v_C + state.omega * perp(q)


def contact_velocities(state: LoadState, params: LoadParams) -> np.ndarray:
    q = contact_offsets(state, params)
    return state.v_C + state.omega * np.column_stack([-q[:, 1], q[:, 0]])


def measure_velocity(v, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of std ``sigma`` per axis."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    v = np.asarray(v, dtype=float)
    if sigma == 0:
        return v.copy()
    return v + rng.normal(0.0, sigma, size=v.shape)


def kinetic_energy(state: LoadState, params: LoadParams) -> float:
    return 0.5 * (params.J * state.omega**2 + params.m * float(state.v_C @ state.v_C))
