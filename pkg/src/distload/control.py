"""Local control rules that keep the load observable and bring it to rest.

Every robot applies the same law using only its own measurements, so these
are plain functions of time or of the local contact velocity. The certified
quantities (alpha invariant, omega bound, Lyapunov function) need ground
truth and are used only for checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .planar import Wrench2


@dataclass(frozen=True)
class ConstantForceLaw:
    f_star: tuple = (1.0, 0.0)
    switch_period: float = 10.0

    def __post_init__(self):
        f = tuple(float(v) for v in self.f_star)
        if len(f) != 2 or not all(math.isfinite(v) for v in f):
            raise ValueError(f"f_star must be a finite 2-vector, got {self.f_star}")
        if math.hypot(*f) == 0.0:
            raise ValueError("f_star must be non-zero")
        if not self.switch_period > 0:
            raise ValueError(f"switch_period must be positive (use inf for no switching), got {self.switch_period}")
        object.__setattr__(self, "f_star", f)


@dataclass(frozen=True)
class BrakingLaw:
    b: float = 2.0

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"braking gain must be positive, got {self.b}")


def constant_force(law: ConstantForceLaw, t: float) -> Wrench2:
    """+f* on even half-cycles [2kT, (2k+1)T), -f* on odd ones; zero torque."""
    if math.isinf(law.switch_period):
        sign = 1.0
    else:
        sign = 1.0 if int(math.floor(t / law.switch_period)) % 2 == 0 else -1.0
    return Wrench2((sign * law.f_star[0], sign * law.f_star[1]), 0.0)


def braking_force(law: BrakingLaw, v_Ci_meas) -> Wrench2:
    return Wrench2((-law.b * v_Ci_meas[0], -law.b * v_Ci_meas[1]), 0.0)


def alpha_invariant(omega: float, z_C, f_star, n: int, J: float) -> float:
    """omega^2 - 2 n J^-1 z_C^T f*, conserved under equal constant forces."""
    if not J > 0:
        raise ValueError("J must be positive")
    return omega**2 - 2.0 * n / J * float(np.dot(z_C, f_star))


def omega_bound(omega0: float, f_star, z_C_norm: float, n: int, J: float) -> float:
    if not J > 0:
        raise ValueError("J must be positive")
    return math.sqrt(omega0**2 + 4.0 * n / J * float(np.linalg.norm(f_star)) * z_C_norm)


def critical_condition(omega0: float, z_C0, f_star, n: int, J: float) -> float:
    """Residual that vanishes on the degenerate start where omega dies out in finite time."""
    if not J > 0:
        raise ValueError("J must be positive")
    z = np.asarray(z_C0, dtype=float)
    f = np.asarray(f_star, dtype=float)
    lhs = 2.0 * n * float(z @ f) - J * omega0**2
    rhs = 2.0 * n * float(np.linalg.norm(z)) * float(np.linalg.norm(f))
    return lhs - rhs


def lyapunov_V(omega: float, v_C, m: float, J: float) -> float:
    if not (m > 0 and J > 0):
        raise ValueError("m and J must be positive")
    v = np.asarray(v_C, dtype=float)
    return 0.5 * (J * omega**2 + m * float(v @ v))
