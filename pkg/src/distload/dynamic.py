"""Per-robot dynamic estimation: inertia, CoM offset observer, CoM velocity, mass.

Vectors are ``(x, y)`` float tuples, as in :mod:`distload.kinematic`.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .planar import Wrench2
from .rls import RlsState, rls_update


def _perp(v):
    return (-v[1], v[0])


def spin_force(z_i_hat, k_z: float, omega_hat: Optional[float] = None, hold: float = 0.0) -> Wrench2:
    """f_i = k_z * perp(z_i_hat), tau_i = 0.

    With ``omega_hat`` and ``hold`` given, the command is corrected for being
    held constant over ``hold`` seconds on a load spinning at ``omega_hat``:
    the offset is advanced to mid-interval and the gain divided by the mean
    of cos over the interval, so the held force produces the same average
    torque as the continuous law. Sum of forces stays zero either way.
    """
    if k_z == 0:
        raise ValueError("k_z must be non-zero")
    z = (float(z_i_hat[0]), float(z_i_hat[1]))
    gain = k_z
    if omega_hat is not None and hold > 0.0:
        half = 0.5 * omega_hat * hold
        c, s = math.cos(half), math.sin(half)
        z = (c * z[0] - s * z[1], s * z[0] + c * z[1])
        if half != 0.0:
            gain = k_z * half / math.sin(half)
    return Wrench2((-gain * z[1], gain * z[0]), 0.0)


class _Windowed:
    """Windowed-difference regression of Delta(obs) = theta * Delta(regressor)."""

    def __init__(self, lag: int):
        if lag < 1:
            raise ValueError(f"window must be at least one round, got {lag}")
        self.lag = lag
        self.buf: deque = deque(maxlen=lag + 1)
        self.rls = RlsState()

    def push(self, obs, reg):
        if self.buf:
            o0, r0 = self.buf[0]
            if isinstance(obs, tuple):
                phi = tuple(a - b for a, b in zip(reg, r0))
                y = tuple(a - b for a, b in zip(obs, o0))
            else:
                phi, y = reg - r0, obs - o0
            self.rls = rls_update(self.rls, phi, y)
        self.buf.append((obs, reg))

    @property
    def inverse(self) -> Optional[float]:
        th = self.rls.theta_hat
        if self.rls.count == 0 or not th > 0.0:
            return None
        return 1.0 / th


class InertiaEstimate(_Windowed):
    """Learns 1/J from omega_dot = S / J while the spin law is active.

    Observation is the change of omega_hat over a lag, regressor is S_hat
    times the elapsed time, so omega_hat is never differentiated.
    """

    def __init__(self, S_hat: float, lag: int):
        super().__init__(lag)
        if not S_hat > 0:
            raise ValueError(f"S_hat must be positive, got {S_hat}")
        self.S_hat = float(S_hat)
        self._t = 0.0

    @property
    def J_hat(self) -> Optional[float]:
        return self.inverse


def estimate_J_round(est: InertiaEstimate, omega_hat: float, dt: float) -> InertiaEstimate:
    if est.buf:
        est._t += dt
    est.push(float(omega_hat), est.S_hat * est._t)
    return est


class MassEstimate(_Windowed):
    """Learns 1/m from v_C_dot = n f_mean / m, per axis, in integral form."""

    def __init__(self, n: int, lag: int):
        super().__init__(lag)
        self.n = n
        self._F = (0.0, 0.0)

    @property
    def m_hat(self) -> Optional[float]:
        return self.inverse


def estimate_m_round(est: MassEstimate, vC_hat, f_mean_hat, dt: float) -> MassEstimate:
    """``f_mean_hat`` is the mean force applied over the interval ending now."""
    if est.buf:
        est._F = (
            est._F[0] + est.n * f_mean_hat[0] * dt,
            est._F[1] + est.n * f_mean_hat[1] * dt,
        )
    est.push((float(vC_hat[0]), float(vC_hat[1])), est._F)
    return est


@dataclass(frozen=True)
class DynInputs:
    """Observer inputs: f_bar = (n/J) f_mean, eta = eta1 + eta2."""

    f_bar: tuple
    eta1: float
    eta2: float

    def __post_init__(self):
        vals = (*self.f_bar, self.eta1, self.eta2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite observer input {vals}")

    @property
    def eta(self) -> float:
        return self.eta1 + self.eta2


@dataclass(frozen=True)
class ComObserverState:
    x1_hat: float = 0.0
    x2_hat: float = 0.0
    x3_hat: float = 0.0
    k_e: float = 2.0

    def __post_init__(self):
        if not self.k_e > 0:
            raise ValueError(f"observer gain k_e must be positive, got {self.k_e}")

    @property
    def z_C_hat(self) -> tuple:
        return (self.x1_hat, self.x2_hat)


def observer_rhs(x, y: float, u1: float, u2: float, u3: float, k_e: float):
    x1, x2, x3 = x
    e = y - x3
    return (
        -x2 * y + u2 * e,
        x1 * y - u1 * e,
        x1 * u2 - x2 * u1 + k_e * e + u3,
    )


def observer_step(
    obs: ComObserverState,
    y: float,
    u: DynInputs,
    dt: float,
    y_prev: Optional[float] = None,
) -> ComObserverState:
    """One RK4 step of the CoM-offset observer.

    ``y`` is the measured angular rate at the end of the step. When
    ``y_prev`` is given the measurement is interpolated linearly across the
    step; otherwise it is held at ``y``. Inputs are held over the step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    y0 = y if y_prev is None else y_prev
    u1, u2 = u.f_bar
    u3 = u.eta
    k = obs.k_e
    x = (obs.x1_hat, obs.x2_hat, obs.x3_hat)
    ym = 0.5 * (y0 + y)
    k1 = observer_rhs(x, y0, u1, u2, u3, k)
    k2 = observer_rhs(tuple(a + 0.5 * dt * b for a, b in zip(x, k1)), ym, u1, u2, u3, k)
    k3 = observer_rhs(tuple(a + 0.5 * dt * b for a, b in zip(x, k2)), ym, u1, u2, u3, k)
    k4 = observer_rhs(tuple(a + dt * b for a, b in zip(x, k3)), y, u1, u2, u3, k)
    xn = tuple(a + dt / 6.0 * (p + 2 * q + 2 * r + s) for a, p, q, r, s in zip(x, k1, k2, k3, k4))
    return ComObserverState(xn[0], xn[1], xn[2], k)


@dataclass
class ObservabilityMonitor:
    """Flags the observer as unreliable when y or |(u1, u2)| is not persistently non-zero.

    Both signals are tracked as RMS over a sliding window of ``size`` rounds.
    """

    size: int
    threshold: float = 1e-3
    _y2: deque = field(default_factory=deque)
    _u2: deque = field(default_factory=deque)
    _sy: float = 0.0
    _su: float = 0.0

    def push(self, y: float, u: DynInputs):
        a = y * y
        b = u.f_bar[0] ** 2 + u.f_bar[1] ** 2
        self._y2.append(a)
        self._u2.append(b)
        self._sy += a
        self._su += b
        if len(self._y2) > self.size:
            self._sy -= self._y2.popleft()
            self._su -= self._u2.popleft()

    def rms(self):
        k = max(len(self._y2), 1)
        return math.sqrt(max(self._sy, 0.0) / k), math.sqrt(max(self._su, 0.0) / k)

    @property
    def full(self) -> bool:
        return len(self._y2) >= self.size

    @property
    def unreliable(self) -> bool:
        ry, ru = self.rms()
        return ry < self.threshold or ru < self.threshold


def estimate_vC(v_Ci_meas, omega_hat: float, z_C_hat, z_i_hat) -> tuple:
    """v_C = v_Ci - omega * perp(z_C + z_i)."""
    qx = z_C_hat[0] + z_i_hat[0]
    qy = z_C_hat[1] + z_i_hat[1]
    return (v_Ci_meas[0] + omega_hat * qy, v_Ci_meas[1] - omega_hat * qx)


def eec(truth: Sequence, estimates: Sequence) -> float:
    """Sum over robots of |z_i - z_i_hat|."""
    if len(truth) != len(estimates):
        raise ValueError(f"{len(truth)} true offsets but {len(estimates)} estimates")
    return math.fsum(math.hypot(t[0] - e[0], t[1] - e[1]) for t, e in zip(truth, estimates))


def eta1_local(n: int, J_hat: float, z_i_hat, f_i, f_mean_hat) -> float:
    """Local input whose network mean is J^-1 * sum_i perp(z_i)^T (f_i - f_mean)."""
    dfx = f_i[0] - f_mean_hat[0]
    dfy = f_i[1] - f_mean_hat[1]
    return n / J_hat * (-z_i_hat[1] * dfx + z_i_hat[0] * dfy)


def eta2_local(n: int, J_hat: float, tau_i: float) -> float:
    return n / J_hat * tau_i
