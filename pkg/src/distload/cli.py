"""Command-line entry point: ``distload run|validate|sweep``.

Exit code 0 on success. On failure a single JSON object describing the
error is printed to stdout and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, from_dict, load_config, validate
from .runner import run

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=str))


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else from_dict({})
    if args.seed is not None:
        cfg.seed = args.seed
    if args.sigma is not None:
        cfg.sigma = args.sigma
    if args.out_dir is not None:
        cfg.output.dir = args.out_dir
    if args.schedule is not None:
        cfg.schedule.mode = args.schedule
    return validate(cfg)


def _brief(summary: dict) -> dict:
    out = {k: summary[k] for k in ("seed", "sigma", "n", "rounds", "simulated_time", "completed")}
    final = summary.get("final") or {}
    for k in ("J_consensus", "m_consensus", "J_rel_err", "m_rel_err", "eerd", "eec"):
        if k in final:
            out[k] = final[k]
    out["observability_flags"] = summary["observability_flags"]
    out["warnings"] = summary["warnings"]
    return out


def cmd_run(args) -> int:
    cfg = _load(args)
    res = run(cfg)
    brief = _brief(res.summary)
    brief.update(trace=str(res.trace_path), summary=str(res.summary_path))
    _emit(brief)
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    _emit({"valid": True, "rounds": cfg.rounds, "total_time": cfg.total_time, "phase_starts": cfg.phase_starts()})
    return 0


def cmd_sweep(args) -> int:
    if args.seeds < 1:
        raise ConfigError("--seeds", "must be at least 1")
    cfg = _load(args)
    base_dir = Path(cfg.output.dir)
    first = cfg.seed
    rows = []
    for s in range(first, first + args.seeds):
        cfg.seed = s
        cfg.output.dir = str(base_dir / f"seed_{s}")
        rows.append(_brief(run(cfg).summary))
    agg = {"seeds": [r["seed"] for r in rows], "runs": rows}
    for k in ("J_rel_err", "m_rel_err"):
        vals = [r[k] for r in rows if k in r]
        if vals:
            agg[f"max_{k}"] = max(vals)
            agg[f"mean_{k}"] = statistics.fmean(vals)
    base_dir.mkdir(parents=True, exist_ok=True)
    (base_dir / "sweep.json").write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(agg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distload", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", help="JSON scenario file (default scenario if omitted)")
    common.add_argument("--seed", type=int, help="override the RNG seed")
    common.add_argument("--sigma", type=float, help="override the velocity noise std (m/s)")
    common.add_argument("--out-dir", help="override the output directory")
    common.add_argument("--schedule", choices=("timed", "adaptive"), help="override the phase schedule mode")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one scenario").set_defaults(func=cmd_run)
    sub.add_parser("validate", parents=[common], help="check a config and exit").set_defaults(func=cmd_validate)
    sw = sub.add_parser("sweep", parents=[common], help="run consecutive seeds starting at --seed")
    sw.add_argument("--seeds", type=int, required=True, help="number of seeds")
    sw.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        _emit(e.to_json())
        return EXIT_CONFIG
    except (OSError, ValueError, ArithmeticError) as e:
        _emit({"error": "runtime_failure", "type": type(e).__name__, "message": str(e)})
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
