"""Recursive least squares for a single scalar parameter.

The model is y = theta * phi where phi and y may be scalars or equal-length
vectors (a vector observation is just several scalar rows sharing theta).
The precision form is used, starting from zero prior information, so with
forgetting = 1 the estimate is the batch least-squares solution after every
sample.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace


def _rows(phi, y):
    if isinstance(phi, (int, float)):
        return (float(phi),), (float(y),)
    p = tuple(float(v) for v in phi)
    o = tuple(float(v) for v in y)
    if len(p) != len(o):
        raise ValueError(f"regressor has {len(p)} rows but observation has {len(o)}")
    return p, o


@dataclass(frozen=True)
class RlsState:
    theta_hat: float = 0.0
    P: float = math.inf
    count: int = 0
    forgetting: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting factor must be in (0, 1], got {self.forgetting}")
        if not self.P > 0:
            raise ValueError(f"P must be positive, got {self.P}")


def rls_update(state: RlsState, phi, y) -> RlsState:
    """Absorb one sample. A zero regressor carries no information and is ignored."""
    p, o = _rows(phi, y)
    if not all(math.isfinite(v) for v in p + o):
        raise ValueError("non-finite sample passed to rls_update")
    pp = sum(v * v for v in p)
    if pp == 0.0:
        return state
    info = 0.0 if math.isinf(state.P) else state.forgetting / state.P
    info += pp
    innov = sum(pi * (oi - state.theta_hat * pi) for pi, oi in zip(p, o))
    return replace(
        state,
        theta_hat=state.theta_hat + innov / info,
        P=1.0 / info,
        count=state.count + 1,
    )


def rls_variance(state: RlsState) -> float:
    """Inverse of the accumulated regressor energy; shrinks as data accrue."""
    if state.count == 0:
        raise ValueError("rls_variance is undefined before the first sample")
    return state.P


def _sq_residual(p, o, theta):
    return sum((oi - theta * pi) ** 2 for pi, oi in zip(p, o))


@dataclass
class SignSelector:
    """Two sign-constrained hypotheses theta = +|m| and theta = -|m|.

    Both hypotheses share the magnitude estimate ``mag``; only their windowed
    residuals differ. The active sign changes only when the other hypothesis
    explains the window at least ``hysteresis`` times better.
    """

    mag: RlsState = field(default_factory=RlsState)
    active: int = 1
    window: int = 50
    hysteresis: float = 3.0
    res_pos: deque = field(default_factory=deque)
    res_neg: deque = field(default_factory=deque)
    locked: bool = False

    @property
    def theta_hat(self) -> float:
        return self.active * abs(self.mag.theta_hat)

    @property
    def count(self) -> int:
        return self.mag.count

    def residual_sums(self):
        return sum(self.res_pos), sum(self.res_neg)

    def reset_window(self):
        self.res_pos.clear()
        self.res_neg.clear()

    def copy(self) -> "SignSelector":
        return replace(self, res_pos=deque(self.res_pos), res_neg=deque(self.res_neg))


def sign_select_update(sel: SignSelector, phi, y) -> SignSelector:
    """Feed one sample to both hypotheses and re-select the active sign."""
    if sel.locked:
        return sel
    p, o = _rows(phi, y)
    if not all(math.isfinite(v) for v in p + o):
        raise ValueError("non-finite sample passed to sign_select_update")
    if sum(v * v for v in p) == 0.0:
        return sel
    out = sel.copy()
    if out.mag.count == 0:
        corr = sum(pi * oi for pi, oi in zip(p, o))
        out.active = 1 if corr >= 0.0 else -1
        out.mag = rls_update(out.mag, tuple(out.active * v for v in p), o)
    m = abs(out.mag.theta_hat)
    for buf, s in ((out.res_pos, 1.0), (out.res_neg, -1.0)):
        buf.append(_sq_residual(p, o, s * m))
        if len(buf) > out.window:
            buf.popleft()
    r_pos, r_neg = out.residual_sums()
    r_act, r_oth = (r_pos, r_neg) if out.active > 0 else (r_neg, r_pos)
    if out.hysteresis * r_oth < r_act:
        out.active = -out.active
    if sel.mag.count > 0:
        out.mag = rls_update(out.mag, tuple(out.active * v for v in p), o)
    return out
