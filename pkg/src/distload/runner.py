"""Scenario orchestration: physics loop, communication rounds, phase machine, logging.

The runner is the only place where ground truth and estimates meet, and it
uses truth solely to advance the physics, to synthesise measurements and to
score the estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import planar
from .agent import PHASE_INDEX, Message, Robot, RobotParams
from .config import PHASES, ScenarioConfig
from .consensus import default_gamma, spread
from .control import critical_condition
from .dynamic import eec
from .graph import build_topology, exchange, metropolis_weights
from .kinematic import eerd
from .rls import rls_variance
from .trace import TraceWriter, header, write_summary


class TruthLeak(RuntimeError):
    """Raised when ground-truth objects reach an estimator input."""


_TRUTH_TYPES = (planar.LoadState, planar.LoadParams)


def audit_inputs(obj, where: str = "input"):
    """Walk an estimator input and raise TruthLeak if any truth object is inside."""
    if isinstance(obj, _TRUTH_TYPES):
        raise TruthLeak(f"{where} carries ground truth ({type(obj).__name__})")
    if isinstance(obj, Message):
        for k, v in vars(obj).items():
            audit_inputs(v, f"{where}.{k}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            audit_inputs(v, f"{where}[{k}]")
    elif isinstance(obj, (list, tuple)):
        for k, v in enumerate(obj):
            audit_inputs(v, f"{where}[{k}]")


# -- phase machine ------------------------------------------------------------


@dataclass
class PhaseState:
    index: int = 0
    entry_times: dict = field(default_factory=lambda: {"Z_IJ": 0.0})
    timed_out: dict = field(default_factory=dict)

    @property
    def phase(self) -> str:
        return PHASES[self.index]

    @property
    def done(self) -> bool:
        return self.phase == "DONE"


def phase_advance(state: PhaseState, signals: dict, t: float, cfg: ScenarioConfig) -> PhaseState:
    """Return the phase state for time ``t`` (at most one transition per call).

    Timed mode switches at the cumulative configured durations. Adaptive mode
    switches as soon as ``signals['converged']`` is true for the current phase,
    or when the phase has used up its configured duration, which sets the
    phase's timeout flag.
    """
    if state.done:
        return state
    cur = state.phase
    entered = state.entry_times[cur]
    budget = cfg.schedule.durations[cur]
    eps = 1e-9
    if cfg.schedule.mode == "timed":
        go = t + eps >= entered + budget
        timeout = False
    else:
        timeout = t + eps >= entered + budget
        go = bool(signals.get("converged", False)) or timeout
        timeout = timeout and not signals.get("converged", False)
    if not go:
        return state
    nxt = PHASES[state.index + 1]
    times = dict(state.entry_times)
    times[nxt] = t
    flags = dict(state.timed_out)
    if cfg.schedule.mode == "adaptive":
        flags[cur] = bool(timeout)
    return PhaseState(state.index + 1, times, flags)


def convergence_signals(phase: str, robots, cfg: ScenarioConfig, speeds, t_phase: float) -> dict:
    """Network-level convergence indicators built from the robots' own estimator state."""
    th = cfg.schedule.thresholds
    out = {"converged": False}
    p = robots[0].p
    if phase == "Z_IJ":
        pairs = [pr for r in robots for pr in r.pairs.values()]
        if t_phase < p.spin_duration or any(pr.d_sel.count == 0 for pr in pairs):
            return out
        v = max(rls_variance(pr.d_sel.mag) for pr in pairs)
        out.update(value=v, converged=v < th["dij_variance"])
    elif phase == "OMEGA_ZI":
        res = 0.0
        for r in robots:
            ax = ay = 0.0
            for j, z in r.zij_hat.items():
                zj = robots[j].z_i_hat
                ax += zj[0] + z[0] - r.z_i_hat[0]
                ay += zj[1] + z[1] - r.z_i_hat[1]
            res = max(res, math.hypot(ax, ay))
        ready = t_phase >= p.S_settle + 1.0
        out.update(value=res, converged=ready and res < th["zi_residual"])
    elif phase in ("S_CONSENSUS", "J_CONSENSUS", "M_CONSENSUS"):
        attr = {"S_CONSENSUS": "S_x", "J_CONSENSUS": "J_x", "M_CONSENSUS": "m_x"}[phase]
        x = np.array([getattr(r, attr) for r in robots])
        if np.all(np.isfinite(x)):
            rel = spread(x) / max(abs(float(x.mean())), 1e-300)
            out.update(value=rel, converged=rel < th["consensus_spread"])
    elif phase == "J_LLS":
        ests = [r.J_est for r in robots]
        if all(e is not None and e.rls.count > 0 and e.J_hat is not None for e in ests):
            v = max(rls_variance(e.rls) * e.S_hat**2 for e in ests)
            out.update(value=v, converged=v < th["J_variance"])
    elif phase == "BRAKE":
        v = float(np.max(speeds))
        out.update(value=v, converged=v < th["speed"])
    elif phase == "ZC_OBSERVER":
        ready = t_phase >= p.observer_spin_duration + p.monitor_size * p.dt
        innov = max(r.innovation_rms for r in robots)
        out.update(value=innov, converged=ready and innov < th["observer_innovation"])
    elif phase == "VC_M":
        ests = [r.m_est for r in robots]
        if all(e is not None and e.rls.count > 0 and e.m_hat is not None for e in ests):
            F = cfg.n * math.hypot(*cfg.laws.f_star)
            v = max(rls_variance(e.rls) * F**2 for e in ests)
            out.update(value=v, converged=v < th["m_variance"])
    return out


# -- scenario construction ----------------------------------------------------


def build_robots(cfg: ScenarioConfig, g, W) -> list:
    gamma = cfg.estimation.gamma if cfg.estimation.gamma is not None else default_gamma(g)
    dt = cfg.estimator_dt
    params = RobotParams(
        n=cfg.n,
        dt=dt,
        freeze_threshold=cfg.laws.freeze_threshold,
        dij_window=int(cfg.estimation.dij_window),
        kappa=cfg.kappa,
        gamma=gamma,
        k_z=cfg.laws.k_z,
        k_e=cfg.laws.k_e,
        b=cfg.laws.b,
        f_star=tuple(cfg.laws.f_star),
        switch_period=cfg.laws.switch_period,
        switch_offset=cfg.laws.switch_offset,
        spin_torque=cfg.laws.spin_torque,
        spin_duration=cfg.laws.spin_duration,
        observer_spin_torque=cfg.laws.observer_spin_torque,
        observer_spin_duration=cfg.laws.observer_spin_duration,
        J_lag=max(1, int(round(cfg.estimation.J_window / dt))),
        m_lag=max(1, int(round(cfg.estimation.m_window / dt))),
        S_settle=cfg.estimation.S_settle,
        monitor_size=max(1, int(round(cfg.estimation.monitor_window / dt))),
        monitor_threshold=cfg.estimation.monitor_threshold,
    )
    robots = []
    for i in range(cfg.n):
        weights = {i: W[i, i], **{j: W[i, j] for j in g.neighbors(i)}}
        robots.append(Robot(i, weights, params))
    return robots


def initial_state(cfg: ScenarioConfig) -> planar.LoadState:
    L = cfg.load
    return planar.LoadState(np.array(L.p_C0, float), L.theta0, np.array(L.v_C0, float), L.omega0)


def _rel(err: float, scale: float) -> float:
    return err / scale if scale > 0 else err


@dataclass
class RunResult:
    summary: dict
    history: dict
    trace_path: Optional[Path] = None
    summary_path: Optional[Path] = None


def run(cfg: ScenarioConfig, out_dir=None, write: bool = True, max_time: Optional[float] = None) -> RunResult:
    """Execute one scenario and return its summary and a compact history.

    ``max_time`` truncates the run (used by tests that only need the early
    phases); the schedule is unchanged.
    """
    g = build_topology(cfg.topology, cfg.n)
    W = metropolis_weights(g)
    params = planar.LoadParams(cfg.load.m, cfg.load.J, cfg.contact_offsets())
    state = initial_state(cfg)
    robots = build_robots(cfg, g, W)
    rng = np.random.default_rng(cfg.seed)
    dt_e = cfg.estimator_dt
    sub = cfg.substeps
    dt_p = dt_e / sub
    n = cfg.n
    edges = g.sorted_edges()
    z_C_norm = float(np.linalg.norm(params.z_C_body))

    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    writer = TraceWriter(out / cfg.output.trace, n) if write else None

    ps = PhaseState()
    total = cfg.total_time
    N = cfg.rounds
    if max_time is not None:
        N = min(N, int(round(max_time / dt_e)))
    hist = {k: [] for k in ("t", "phase", "eerd", "eec", "omega", "theta", "J_mean", "m_mean", "zC_err", "vC_err", "V")}
    snapshots: dict = {}
    warnings: list = []
    peak_vC = {"ZC_OBSERVER": 0.0, "VC_M": 0.0}
    monitor_flags = 0

    def score(phase_name: str, t: float):
        """Estimate-vs-truth errors recorded when ``phase_name`` completes.

        Robots last stepped on the state of the previous round, so that is
        the state their estimates describe.
        """
        state = seen
        zc_true = planar.com_offset(state, params)
        zi_true = planar.centroid_offsets(state, params)
        snap = {"t": t}
        if phase_name == "OMEGA_ZI":
            zij_err = omega_err = zi_err = 0.0
            for r in robots:
                for j, zh in r.zij_hat.items():
                    tz = zi_true[r.index] - zi_true[j]
                    e = math.inf if zh is None else math.hypot(zh[0] - tz[0], zh[1] - tz[1])
                    zij_err = max(zij_err, _rel(e, float(np.linalg.norm(tz))))
                wh = r.omega_hat if r.omega_hat is not None else math.inf
                omega_err = max(omega_err, _rel(abs(wh - state.omega), abs(state.omega)))
                e = math.hypot(r.z_i_hat[0] - zi_true[r.index][0], r.z_i_hat[1] - zi_true[r.index][1])
                zi_err = max(zi_err, _rel(e, float(np.linalg.norm(zi_true[r.index]))))
            snap.update(zij_rel_err=zij_err, omega_rel_err=omega_err, zi_rel_err=zi_err)
        elif phase_name == "J_CONSENSUS":
            J = [r.J_x for r in robots]
            snap.update(J_hat=J, J_rel_err=max(abs(j - cfg.load.J) / cfg.load.J for j in J))
        elif phase_name == "VC_M":
            zc_err = max(
                _rel(math.hypot(r.z_C_hat[0] - zc_true[0], r.z_C_hat[1] - zc_true[1]), z_C_norm) for r in robots
            )
            scale = max(float(np.linalg.norm(state.v_C)), peak_vC["VC_M"])
            vc_err = max(
                _rel(math.hypot(r.vC_hat[0] - state.v_C[0], r.vC_hat[1] - state.v_C[1]), scale) for r in robots
            )
            ms = [r.m_report for r in robots]
            snap.update(zC_rel_err=zc_err, vC_rel_err=vc_err, vC_scale=scale, m_local=ms)
        elif phase_name == "M_CONSENSUS":
            m = [r.m_x for r in robots]
            snap.update(m_hat=m, m_rel_err=max(abs(x - cfg.load.m) / cfg.load.m for x in m))
        snapshots[phase_name] = snap

    k = 0
    t = 0.0
    seen = state
    try:
        for k in range(N):
            t = k * dt_e
            # sensing
            v_true = planar.contact_velocities(state, params)
            if cfg.sigma > 0:
                v_meas = v_true + rng.normal(0.0, cfg.sigma, size=v_true.shape)
            else:
                v_meas = v_true.copy()
            speeds = np.linalg.norm(v_meas, axis=1)

            # phase machine
            prev = ps.phase
            sig = convergence_signals(ps.phase, robots, cfg, speeds, t - ps.entry_times[ps.phase])
            ps = phase_advance(ps, sig, t, cfg)
            if ps.phase != prev:
                score(prev, t)
                if ps.phase == "ZC_OBSERVER":
                    res = critical_condition(state.omega, planar.com_offset(state, params), cfg.laws.f_star, n, cfg.load.J)
                    scale = 2.0 * n * z_C_norm * math.hypot(*cfg.laws.f_star)
                    if abs(res) < 1e-6 * scale:
                        warnings.append({"t": t, "warning": "near-critical start for the constant-force law", "residual": res})
            if ps.done:
                break
            phase = ps.phase

            # communication round
            boxes = [r.outbox((float(v_meas[i, 0]), float(v_meas[i, 1])), phase) for i, r in enumerate(robots)]
            inboxes = exchange(g, boxes)
            if cfg.hygiene_check:
                for i, ib in enumerate(inboxes):
                    audit_inputs(ib, f"robot[{i}].inbox")
            wrenches = []
            for r, ib in zip(robots, inboxes):
                wrenches.append(r.step(phase, ib))
                if r.monitor.full and r.monitor.unreliable and phase in ("ZC_OBSERVER", "VC_M"):
                    monitor_flags += 1

            # metrics and trace
            zi_true = planar.centroid_offsets(state, params)
            zc_true = planar.com_offset(state, params)
            est_edges = {}
            for (i, j) in edges:
                z = robots[i].zij_hat[j]
                est_edges[(i, j)] = z if z is not None else (0.0, 0.0)
            true_edges = {(i, j): zi_true[i] - zi_true[j] for (i, j) in edges}
            e_rd = eerd(true_edges, est_edges, g)
            e_c = eec(zi_true, [r.z_i_hat for r in robots])
            if phase in peak_vC:
                peak_vC[phase] = max(peak_vC[phase], float(np.linalg.norm(state.v_C)))

            hist["t"].append(t)
            hist["phase"].append(PHASE_INDEX[phase])
            hist["eerd"].append(e_rd)
            hist["eec"].append(e_c)
            hist["omega"].append(state.omega)
            hist["theta"].append(state.theta)
            Js = [r.J_report for r in robots]
            hist["J_mean"].append(float(np.mean([x if x is not None else np.nan for x in Js])))
            ms = [r.m_report for r in robots]
            hist["m_mean"].append(float(np.mean([x if x is not None else np.nan for x in ms])))
            if robots[0].observer is not None:
                hist["zC_err"].append(max(math.hypot(r.z_C_hat[0] - zc_true[0], r.z_C_hat[1] - zc_true[1]) for r in robots))
            else:
                hist["zC_err"].append(math.nan)
            hist["vC_err"].append(
                max(math.hypot(r.vC_hat[0] - state.v_C[0], r.vC_hat[1] - state.v_C[1]) for r in robots)
                if robots[0].vC_hat is not None
                else math.nan
            )
            hist["V"].append(planar.kinetic_energy(state, params))

            if writer is not None:
                row = [t, phase, *state.p_C, state.theta, *state.v_C, state.omega, *zc_true, e_rd, e_c]
                for r in robots:
                    zc = r.z_C_hat or (None, None)
                    vc = r.vC_hat or (None, None)
                    row.extend((*r.z_i_hat, r.omega_hat, r.J_report, *zc, *vc, r.m_report))
                writer.write(row)

            # physics
            seen = state
            state = planar.advance(state, params, wrenches, dt_p, sub)
        else:
            k = N
            t = N * dt_e
            if max_time is None or N == cfg.rounds:
                sig = {"converged": True} if cfg.schedule.mode == "adaptive" else {}
                prev = ps.phase
                ps = phase_advance(ps, sig, t, cfg)
                if ps.phase != prev:
                    score(prev, t)
    finally:
        if writer is not None:
            writer.close()

    for r in robots:
        r.finish()
    completed = ps.done
    rounds = len(hist["t"])
    summary = {
        "seed": cfg.seed,
        "sigma": cfg.sigma,
        "n": n,
        "rounds": rounds,
        "estimator_rate": cfg.estimator_rate,
        "simulated_time": rounds * dt_e,
        "completed": completed,
        "phase_entry_times": ps.entry_times,
        "phase_timeouts": ps.timed_out,
        "truth": {"m": cfg.load.m, "J": cfg.load.J, "z_C_body": params.z_C_body.tolist()},
        "snapshots": snapshots,
        "warnings": warnings,
        "observability_flags": monitor_flags,
        "config": cfg.to_dict(),
        "columns": header(n),
    }
    if completed:
        Jf = [r.J_x for r in robots]
        mf = [r.m_hat for r in robots]
        summary["final"] = {
            "J_hat": Jf,
            "m_hat": mf,
            "J_consensus": float(np.mean(Jf)),
            "m_consensus": float(np.mean(mf)),
            "J_rel_err": abs(float(np.mean(Jf)) - cfg.load.J) / cfg.load.J,
            "m_rel_err": abs(float(np.mean(mf)) - cfg.load.m) / cfg.load.m,
            "eerd": hist["eerd"][-1] if rounds else None,
            "eec": hist["eec"][-1] if rounds else None,
        }
    spath = None
    if write:
        spath = out / cfg.output.summary
        write_summary(spath, summary)
    history = {k: np.asarray(v) for k, v in hist.items()}
    return RunResult(summary, history, (out / cfg.output.trace) if write else None, spath)
