"""One robot of the team: its local estimators and its control law.

A robot sees only its own measured contact velocity, the wrench it applied
last round, the current phase, and the messages in its inbox. It never
receives the load state or parameters.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional

from .consensus import local_centroid
from .control import BrakingLaw, ConstantForceLaw, braking_force, constant_force
from .dynamic import (
    ComObserverState,
    DynInputs,
    InertiaEstimate,
    MassEstimate,
    ObservabilityMonitor,
    estimate_J_round,
    estimate_m_round,
    estimate_vC,
    eta1_local,
    eta2_local,
    observer_step,
    spin_force,
)
from .kinematic import PairEstimate, edge_omegas, fuse_omega, rotate, velocity_difference
from .planar import Wrench2

PHASE_INDEX = {
    p: k
    for k, p in enumerate(
        (
            "Z_IJ",
            "OMEGA_ZI",
            "S_CONSENSUS",
            "J_LLS",
            "J_CONSENSUS",
            "BRAKE",
            "ZC_OBSERVER",
            "VC_M",
            "M_CONSENSUS",
            "DONE",
        )
    )
}

_FORCE_LAW_PHASES = {"OMEGA_ZI", "S_CONSENSUS", "J_CONSENSUS", "ZC_OBSERVER", "VC_M", "M_CONSENSUS"}
_OBSERVER_PHASES = {"ZC_OBSERVER", "VC_M", "M_CONSENSUS"}


@dataclass(frozen=True)
class RobotParams:
    n: int
    dt: float
    freeze_threshold: float = 0.5
    dij_window: int = 50
    kappa: float = 0.05
    gamma: float = 0.1
    k_z: float = 5.0
    k_e: float = 2.0
    b: float = 2.0
    f_star: tuple = (8.0, 0.0)
    switch_period: float = 10.0
    switch_offset: float = 5.0
    spin_torque: float = 35.0
    spin_duration: float = 2.0
    observer_spin_torque: float = 19.0
    observer_spin_duration: float = 2.0
    J_lag: int = 300
    m_lag: int = 500
    S_settle: float = 2.0
    monitor_size: int = 100
    monitor_threshold: float = 1e-3


@dataclass(frozen=True)
class Message:
    """What a robot broadcasts to its neighbours each round."""

    v: tuple
    z: tuple
    S: float
    J: float
    m: float
    f: tuple
    e1: float
    e2: float


def _pulse(amplitude: float, duration: float, t: float) -> float:
    # raised-cosine pulse: smooth at both ends so the spin-up leaves no kinks
    if t >= duration or t < 0:
        return 0.0
    return amplitude * math.sin(math.pi * t / duration) ** 2


def _edge_rotation(before: Mapping, after: Mapping) -> float:
    """Mean angle the robot's own edge estimates turned through in one round.

    Rotating z_i by this instead of by an integrated omega_hat keeps the
    network sum of the z_i from random-walking: edge errors are bounded, so
    their round-to-round increments telescope instead of accumulating.
    """
    acc, k = 0.0, 0
    for j, a in before.items():
        b = after[j]
        if a is None or b is None:
            continue
        acc += math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])
        k += 1
    return acc / k if k else 0.0


class Robot:
    def __init__(self, index: int, weights: Mapping[int, float], params: RobotParams):
        self.index = index
        self.p = params
        self.w_self = weights[index]
        self.w = {j: w for j, w in weights.items() if j != index}
        self.pairs = {
            j: PairEstimate(params.freeze_threshold, params.dij_window, params.kappa, learn=False)
            for j in self.w
        }
        self.force_law = ConstantForceLaw(tuple(params.f_star), params.switch_period)
        self.brake_law = BrakingLaw(params.b)

        self.phase = None
        self._rounds_in_phase = 0
        self.omega_hat: Optional[float] = None
        self._omega_prev: Optional[float] = None
        self.z_i_hat = (0.0, 0.0)
        self._zij_prev = {j: None for j in self.w}
        self.zij_hat = {j: None for j in self.w}

        self._S_acc: Optional[float] = None
        self._S_count = 0
        self.S_x = math.nan
        self.S_hat: Optional[float] = None
        self.J_est: Optional[InertiaEstimate] = None
        self.J_x = math.nan
        self.J_hat: Optional[float] = None

        self.observer: Optional[ComObserverState] = None
        self.monitor = ObservabilityMonitor(params.monitor_size, params.monitor_threshold)
        self._f_x = (0.0, 0.0)
        self._f_u = (0.0, 0.0)
        self._e1_x = self._e1_u = 0.0
        self._e2_x = self._e2_u = 0.0
        self.inputs: Optional[DynInputs] = None
        self._innov: deque = deque(maxlen=params.monitor_size)
        self.vC_hat: Optional[tuple] = None
        self.m_est: Optional[MassEstimate] = None
        self.m_x = math.nan
        self.m_hat: Optional[float] = None

        self.last_wrench = Wrench2.zero()
        self._v = (0.0, 0.0)

    # -- messaging -------------------------------------------------------
    def outbox(self, v_meas, phase: Optional[str] = None) -> Message:
        """Record this round's measurement, enter ``phase`` if new, and build the broadcast."""
        self._v = (float(v_meas[0]), float(v_meas[1]))
        if phase is not None and phase != self.phase:
            self._enter(phase)
        return Message(self._v, self.z_i_hat, self.S_x, self.J_x, self.m_x, self._f_x, self._e1_x, self._e2_x)

    def _mix(self, own, inbox, attr):
        acc = self.w_self * own
        for j, msg in inbox.items():
            acc += self.w[j] * getattr(msg, attr)
        return acc

    def _mix2(self, own, inbox, attr):
        ax, ay = self.w_self * own[0], self.w_self * own[1]
        for j, msg in inbox.items():
            v = getattr(msg, attr)
            ax += self.w[j] * v[0]
            ay += self.w[j] * v[1]
        return (ax, ay)

    @property
    def t_phase(self) -> float:
        return self._rounds_in_phase * self.p.dt

    @property
    def z_C_hat(self) -> Optional[tuple]:
        return None if self.observer is None else self.observer.z_C_hat

    @property
    def J_report(self) -> Optional[float]:
        """Best current inertia estimate (local regression, then consensus value)."""
        if self.J_est is None:
            return None
        if PHASE_INDEX[self.phase] <= PHASE_INDEX["J_LLS"]:
            return self.J_est.J_hat
        return self.J_x

    @property
    def m_report(self) -> Optional[float]:
        if self.m_est is None:
            return None
        if self.phase == "VC_M":
            return self.m_est.m_hat
        return self.m_x

    @property
    def innovation_rms(self) -> float:
        """RMS of y - x3_hat over the monitor window (inf before the observer runs)."""
        if not self._innov:
            return math.inf
        return math.sqrt(math.fsum(self._innov) / len(self._innov))

    def finish(self):
        """Close the run: adopt the consensus mass value."""
        if self.phase != "DONE":
            self._enter("DONE")

    # -- phase entry -----------------------------------------------------
    def _enter(self, phase: str):
        prev = self.phase
        self.phase = phase
        self._rounds_in_phase = 0
        p = self.p
        if phase == "Z_IJ":
            return
        if prev == "Z_IJ" or (prev is None and PHASE_INDEX[phase] > 0):
            for pair in self.pairs.values():
                pair.lock()
        if phase == "S_CONSENSUS":
            self.S_x = self._S_acc if self._S_acc is not None else p.n * p.k_z * _sq(self.z_i_hat)
        elif phase == "J_LLS":
            self.S_hat = self.S_x
            self.J_est = InertiaEstimate(self.S_hat, p.J_lag)
        elif phase == "J_CONSENSUS":
            jh = self.J_est.J_hat if self.J_est is not None else None
            self.J_x = jh if jh is not None else math.nan
        elif phase == "BRAKE":
            self.J_hat = self.J_x
        elif phase == "ZC_OBSERVER":
            self.observer = ComObserverState(0.0, 0.0, self.omega_hat or 0.0, p.k_e)
            f = self.last_wrench.f
            self._f_u = self._f_x = (float(f[0]), float(f[1]))
            self._e1_u = self._e1_x = eta1_local(p.n, self.J_hat, self.z_i_hat, self._f_u, self._f_x)
            self._e2_u = self._e2_x = eta2_local(p.n, self.J_hat, self.last_wrench.tau)
        elif phase == "VC_M":
            self.m_est = MassEstimate(p.n, p.m_lag)
        elif phase == "M_CONSENSUS":
            mh = self.m_est.m_hat if self.m_est is not None else None
            self.m_x = mh if mh is not None else math.nan
        elif phase == "DONE":
            self.m_hat = self.m_x

    # -- one round -------------------------------------------------------
    def step(self, phase: str, inbox: Mapping[int, Message]) -> Wrench2:
        if phase != self.phase:
            self._enter(phase)
        p = self.p
        dt = p.dt
        tp = self.t_phase
        v = self._v

        # relative positions and angular rate
        learn = phase == "Z_IJ" and tp >= p.spin_duration
        zdots = {}
        for j, msg in inbox.items():
            zd = velocity_difference(v, msg.v)
            zdots[j] = zd
            pair = self.pairs[j]
            if not pair.d_sel.locked:
                pair.learn = learn
            pair.update(zd, dt)
            self.zij_hat[j] = pair.z_ij_hat
        samples = edge_omegas(self.pairs, zdots)
        self._omega_prev = self.omega_hat
        if samples:
            self.omega_hat = fuse_omega(samples)

        # centroid offset, rotated forward with the load
        if all(z is not None for z in self._zij_prev.values()):
            nbr_z = {j: msg.z for j, msg in inbox.items()}
            z = local_centroid(self.z_i_hat, nbr_z, self._zij_prev, p.gamma)
            self.z_i_hat = rotate(z, _edge_rotation(self._zij_prev, self.zij_hat))
        self._zij_prev = dict(self.zij_hat)

        if phase == "OMEGA_ZI" and tp >= p.S_settle:
            # running mean of the local share of S = k_z * sum |z_i|^2
            s = p.n * p.k_z * _sq(self.z_i_hat)
            self._S_count += 1
            self._S_acc = s if self._S_acc is None else self._S_acc + (s - self._S_acc) / self._S_count
        elif phase == "S_CONSENSUS":
            self.S_x = self._mix(self.S_x, inbox, "S")
        elif phase == "J_LLS" and self.omega_hat is not None:
            estimate_J_round(self.J_est, self.omega_hat, dt)
        elif phase == "J_CONSENSUS":
            self.J_x = self._mix(self.J_x, inbox, "J")
        elif phase == "M_CONSENSUS":
            self.m_x = self._mix(self.m_x, inbox, "m")

        just_started = phase == "ZC_OBSERVER" and self._rounds_in_phase == 0
        if phase in _OBSERVER_PHASES and not just_started:
            self._observe(inbox)
        if phase == "VC_M" and self.vC_hat is not None:
            estimate_m_round(self.m_est, self.vC_hat, self._f_x, dt)

        wrench = self._command(phase, tp)
        self.last_wrench = wrench
        self._rounds_in_phase += 1
        return wrench

    def _observe(self, inbox):
        """Refresh the observer inputs by dynamic consensus and advance the observer."""
        p = self.p
        Jh = self.J_hat
        f = self.last_wrench.f
        u_f = (float(f[0]), float(f[1]))
        fx = self._mix2(self._f_x, inbox, "f")
        self._f_x = (fx[0] + u_f[0] - self._f_u[0], fx[1] + u_f[1] - self._f_u[1])
        # Delta f against the refreshed mean, so a common force step cancels exactly
        u_e1 = eta1_local(p.n, Jh, self.z_i_hat, u_f, self._f_x)
        u_e2 = eta2_local(p.n, Jh, self.last_wrench.tau)
        self._e1_x = self._mix(self._e1_x, inbox, "e1") + u_e1 - self._e1_u
        self._e2_x = self._mix(self._e2_x, inbox, "e2") + u_e2 - self._e2_u
        self._f_u, self._e1_u, self._e2_u = u_f, u_e1, u_e2

        y = self.omega_hat if self.omega_hat is not None else 0.0
        y_prev = self._omega_prev if self._omega_prev is not None else y
        self.inputs = DynInputs((p.n / Jh * self._f_x[0], p.n / Jh * self._f_x[1]), self._e1_x, self._e2_x)
        self.monitor.push(y, self.inputs)
        self.observer = observer_step(self.observer, y, self.inputs, p.dt, y_prev)
        self._innov.append((y - self.observer.x3_hat) ** 2)
        self.vC_hat = estimate_vC(self._v, y, self.observer.z_C_hat, self.z_i_hat)

    def _command(self, phase: str, tp: float) -> Wrench2:
        p = self.p
        if phase == "Z_IJ":
            return Wrench2((0.0, 0.0), _pulse(p.spin_torque, p.spin_duration, tp))
        if phase == "J_LLS":
            return spin_force(self.z_i_hat, p.k_z, self.omega_hat or 0.0, p.dt)
        if phase == "BRAKE":
            return braking_force(self.brake_law, self._v)
        if phase in _FORCE_LAW_PHASES:
            w = constant_force(self.force_law, tp + p.switch_offset)
            if phase == "ZC_OBSERVER":
                return Wrench2(w.f, _pulse(p.observer_spin_torque, p.observer_spin_duration, tp))
            return w
        return Wrench2.zero()


def _sq(v) -> float:
    return v[0] * v[0] + v[1] * v[1]
