"""Command-line front end.

    floquet-invisibility spectrum    --config configs/fig2d.toml --out out/fig2d
    floquet-invisibility wavepacket  --config configs/fig4a.toml --out out/fig4a
    floquet-invisibility boundstates --config configs/boundstates.toml --out out/bs
    floquet-invisibility verify      [--config configs/verify.toml] [--out out/verify]

Errors are echoed to stderr as one JSON object and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import output
from .boundstates import find_bound_states
from .checks import run_all
from .config import ExperimentConfig, load_config, validate
from .errors import FloquetError
from .single import energy_grid, spectral_scan
from .timedomain import free_propagate, init_gaussian, invisibility_metric, propagate, scattered_probabilities

DEVIATION_THRESHOLD = 1e-2
NORM_THRESHOLD = 1e-2


def run_spectrum(cfg, out):
    model = cfg.model()
    E = energy_grid(model, cfg.grid, cfg.e_min, cfg.e_max)
    rows = spectral_scan(model, E, cfg.N, cfg.method)
    output.write_spectrum_csv(out / "spectrum.csv", rows, cfg.channel_columns)
    if cfg.plot:
        output.plot_spectrum_svg(out / "spectrum.svg", rows, cfg.ceiling, cfg.logy, cfg.name)
    bad = sum(r.status not in ("ok", "near_singular") for r in rows)
    return {"rows": len(rows), "failed_rows": bad}


def wavepacket_metrics(traj, reference, model):
    dev, resid = invisibility_metric(traj.final, reference)
    _, ref_resid = invisibility_metric(reference, reference)
    right, left = scattered_probabilities(traj.final)
    norm = traj.final.norm
    return {
        "max_site_deviation": dev,
        "residual_near_scatterer": resid,
        "reference_residual_near_scatterer": ref_resid,
        "norm_final": norm,
        "norm_min": float(np.min(traj.norms)),
        "norm_max": float(np.max(traj.norms)),
        "probability_right": right,
        "probability_left": left,
        "thresholds": {"max_site_deviation": DEVIATION_THRESHOLD, "norm": NORM_THRESHOLD},
        "invisible": bool(dev < DEVIATION_THRESHOLD and abs(norm - 1) < NORM_THRESHOLD),
        "support": list(model.support),
    }


def run_wavepacket(cfg, out):
    model = cfg.model()
    state = init_gaussian(cfg.n0, cfg.q0, cfg.w, cfg.L, model)
    traj = propagate(state, model, cfg.t_end, cfg.dt, cfg.stride)
    ref = free_propagate(state, cfg.t_end, model.kappa)
    metrics = wavepacket_metrics(traj, ref, model)
    output.write_snapshots_csv(out / "snapshots.csv", traj)
    output.write_norm_csv(out / "norm.csv", traj)
    output.write_json(out / "metrics.json", metrics)
    if cfg.plot:
        output.plot_spacetime_svg(out / "spacetime.svg", traj, cfg.name)
    return metrics


def run_boundstates(cfg, out):
    report = find_bound_states(cfg.model(), cfg.bs_channels, cfg.real_step)
    data = report.to_dict()
    output.write_json(out / "boundstates.json", data)
    return {"no_bound_states": report.no_bound_states, "candidates": len(report.candidate_roots)}


def run_verify(cfg, out):
    print(f"{'check':>20}  result")
    results = run_all(include_extra=True, echo=print, seed=cfg.seed)
    failed = [k for k, r in results if not r.passed]
    summary = {
        "results": [{"check": k, "name": r.name, "passed": r.passed, "detail": r.detail} for k, r in results],
        "failed": failed,
    }
    output.write_json(out / "verify.json", summary)
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    return summary


RUNNERS = {
    "spectrum": run_spectrum,
    "wavepacket": run_wavepacket,
    "boundstates": run_boundstates,
    "verify": run_verify,
}


def run_experiment(cfg, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.kind](cfg, out)


def build_parser():
    p = argparse.ArgumentParser(prog="floquet-invisibility", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for kind in RUNNERS:
        s = sub.add_parser(kind)
        s.add_argument("--config", required=kind != "verify", type=Path)
        s.add_argument("--out", type=Path, default=Path("out") / kind)
        s.add_argument("--grid", type=int, help="override the energy-grid size")
        s.add_argument("--dt", type=float, help="override the RK4 step")
    return p


def _resolve(args):
    if args.config is None:
        cfg = validate(ExperimentConfig(kind=args.command, name="verify"))
    else:
        cfg = load_config(args.config, args.command)
    over = {k: getattr(args, k) for k in ("grid", "dt") if getattr(args, k) is not None}
    return cfg.replace(**over) if over else cfg


def _fail(payload):
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        result = run_experiment(cfg, args.out)
    except FloquetError as exc:
        return _fail(exc.to_dict())
    except (OSError, ValueError) as exc:
        return _fail({"error": type(exc).__name__, "message": str(exc)})
    if cfg.kind == "verify":
        return 0 if not result["failed"] else 2
    if cfg.kind == "spectrum" and result["failed_rows"]:
        print(f"{result['failed_rows']} grid points failed; see the status column", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
