"""Per-robot kinematic estimation: relative contact positions and angular rate.

Planar vectors are plain ``(x, y)`` float tuples on this side of the code
base; the estimators run every round for every edge, and tuple arithmetic is
an order of magnitude cheaper than small numpy arrays.

Each edge estimate factors z_ij = d_ij * y_ij. The axis y_ij comes straight
from the measured relative velocity; the signed coordinate d_ij is learned by
regressing the change of the measured axis on the integral of the relative
velocity (so nothing is numerically differentiated). Because the raw axis is
noisy, the composed estimate is a rotation-predicted filter pulled toward
d_ij * y_ij with gain ``kappa``.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Mapping, Optional

from .rls import SignSelector, sign_select_update


class _Frozen:
    def __repr__(self):
        return "FROZEN"

    def __bool__(self):
        return False


FROZEN = _Frozen()


def velocity_difference(v_i, v_j) -> tuple:
    return (v_i[0] - v_j[0], v_i[1] - v_j[1])


def axis_estimate(zdot_ij, threshold: float):
    """Unit vector perp(zdot)/|zdot|, or FROZEN when |zdot| <= threshold."""
    s = math.hypot(zdot_ij[0], zdot_ij[1])
    if s <= threshold or s == 0.0:
        return FROZEN
    return (-zdot_ij[1] / s, zdot_ij[0] / s)


def estimate_omega(z_ij_hat, zdot_ij) -> float:
    """Angular rate implied by zdot = omega * perp(z)."""
    nn = z_ij_hat[0] * z_ij_hat[0] + z_ij_hat[1] * z_ij_hat[1]
    if nn == 0.0:
        raise ValueError("cannot estimate omega from a zero-length relative position")
    # -z^T perp(zdot) = z_x * zdot_y - z_y * zdot_x
    return (z_ij_hat[0] * zdot_ij[1] - z_ij_hat[1] * zdot_ij[0]) / nn


def fuse_omega(samples: Iterable[float]) -> float:
    s = list(samples)
    if not s:
        raise ValueError("fuse_omega needs at least one sample")
    # mean as offset from the first sample, so identical samples return that value exactly
    return s[0] + math.fsum(x - s[0] for x in s) / len(s)


def rotate(v, angle: float) -> tuple:
    c, s = math.cos(angle), math.sin(angle)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def eerd(truth: Mapping, estimates: Mapping, g) -> float:
    """Sum over undirected edges (i < j) of |z_ij - z_ij_hat|."""
    total = 0.0
    for e in g.sorted_edges():
        if e not in estimates:
            raise KeyError(f"no estimate for edge {e}")
        t, h = truth[e], estimates[e]
        total += math.hypot(t[0] - h[0], t[1] - h[1])
    return total


# Adams-Moulton weights keyed by the number of past samples used
_AM = {
    1: (1 / 2, 1 / 2),
    2: (5 / 12, 8 / 12, -1 / 12),
    3: (9 / 24, 19 / 24, -5 / 24, 1 / 24),
    4: (251 / 720, 646 / 720, -264 / 720, 106 / 720, -19 / 720),
    5: (475 / 1440, 1427 / 1440, -798 / 1440, 482 / 1440, -173 / 1440, 27 / 1440),
}


class PairEstimate:
    """Robot i's running belief about z_ij for one neighbour j."""

    def __init__(
        self,
        speed_threshold: float = 0.5,
        window: int = 50,
        kappa: float = 0.05,
        learn: bool = True,
    ):
        if not 0.0 < kappa <= 1.0:
            raise ValueError(f"kappa must be in (0, 1], got {kappa}")
        if window < 1:
            raise ValueError(f"window must be at least 1, got {window}")
        self.speed_threshold = float(speed_threshold)
        self.window = int(window)
        self.kappa = float(kappa)
        self.d_sel = SignSelector()
        self.learn = learn
        self.z_ij_hat: Optional[tuple] = None
        self.y_ij: Optional[tuple] = None
        self.frozen = True
        self.ever_unfrozen = False
        self._sign = 0
        self._zd_prev: Optional[tuple] = None
        self._zd_hist: deque = deque(maxlen=5)
        self._P = (0.0, 0.0)
        self._hist: deque = deque(maxlen=window + 1)

    @property
    def d_hat(self) -> Optional[float]:
        th = self.d_sel.theta_hat
        if self.d_sel.count == 0 or th == 0.0:
            return None
        return 1.0 / th

    def lock(self):
        """Stop learning d_ij; the axis filter keeps running."""
        self.learn = False
        self.d_sel.locked = True

    def freeze(self):
        self.frozen = True
        self._zd_prev = None
        self._zd_hist.clear()
        self._hist.clear()
        self._P = (0.0, 0.0)
        self.d_sel.reset_window()

    def _integrate(self, zd, dt):
        # Adams-Moulton over [t_{k-1}, t_k], order rising to six as history fills
        h = self._zd_hist
        c = _AM[len(h)]
        ix = c[0] * zd[0]
        iy = c[0] * zd[1]
        for w, v in zip(c[1:], reversed(h)):
            ix += w * v[0]
            iy += w * v[1]
        self._P = (self._P[0] + ix * dt, self._P[1] + iy * dt)

    def update(self, zdot_ij, dt: float) -> "PairEstimate":
        y = axis_estimate(zdot_ij, self.speed_threshold)
        if y is FROZEN:
            if not self.frozen:
                self.freeze()
            return self
        zd = (float(zdot_ij[0]), float(zdot_ij[1]))
        if self._zd_hist:
            self._integrate(zd, dt)
        # regression samples start once the integral runs at full order
        full = len(self._zd_hist) == self._zd_hist.maxlen
        self._zd_hist.append(zd)
        if self.learn and self._hist:
            P0, y0 = self._hist[0]
            phi = (self._P[0] - P0[0], self._P[1] - P0[1])
            obs = (y[0] - y0[0], y[1] - y0[1])
            self.d_sel = sign_select_update(self.d_sel, phi, obs)
        if full:
            self._hist.append((self._P, y))
        self._compose(y, zd, dt)
        self.frozen = False
        self.ever_unfrozen = True
        self._zd_prev = zd
        return self

    def _compose(self, y, zd, dt):
        d = self.d_hat
        if d is None:
            return
        target = (d * y[0], d * y[1])
        sign = 1 if d > 0 else -1
        z = self.z_ij_hat
        if z is None or sign != self._sign or self.kappa == 1.0:
            z = target
        else:
            if self._zd_prev is not None:
                w0 = estimate_omega(z, self._zd_prev)
                w1 = estimate_omega(rotate(z, w0 * dt), zd)
                z = rotate(z, 0.5 * (w0 + w1) * dt)
            k = self.kappa
            z = (z[0] + k * (target[0] - z[0]), z[1] + k * (target[1] - z[1]))
            nz = math.hypot(z[0], z[1])
            if nz > 0.0:
                z = (z[0] * abs(d) / nz, z[1] * abs(d) / nz)
            else:
                z = target
        self._sign = sign
        self.z_ij_hat = z
        self.y_ij = (z[0] / d, z[1] / d)


def dij_update(pair: PairEstimate, zdot_ij, dt: float) -> PairEstimate:
    """Advance one edge estimate by one round (updates ``pair`` in place)."""
    return pair.update(zdot_ij, dt)


def edge_omegas(pairs: Mapping[int, PairEstimate], zdots: Mapping[int, tuple]) -> list:
    """Per-edge omega samples, skipping frozen edges unless all are frozen."""
    live = [j for j, p in pairs.items() if p.z_ij_hat is not None and not p.frozen]
    use = live or [j for j, p in pairs.items() if p.z_ij_hat is not None]
    return [estimate_omega(pairs[j].z_ij_hat, zdots[j]) for j in use]
