"""Command-line harness.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 oracle deviation above the configured bound.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import subprocess
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import relaxation_analytics
from .config import ConfigError, RunConfig, load_config
from .experiments import compare_with_oracle, relaxation_run, sample_low_field_configurations, steady_run
from .field import effective_detuning, effective_kappa, field_snapshot, mean_photon_number_uniform, threshold_pump
from .oracle import OracleError
from .params import validate_regime
from .sde.engine import NumericalFailure
from .stats import (
    InitialCondition,
    momentum_histogram,
    write_csv,
    write_histogram_csv,
    write_sweep_csv,
    write_width_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_BOUND = 0, 1, 2, 3
FAST_TRAJECTORIES = 200


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _version_string() -> str:
    try:
        rev = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, cwd=Path(__file__).parent, timeout=5,
        )
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(float(obj)) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _manifest(args, cfg: RunConfig, out: Path) -> None:
    _write_json(
        out / "manifest.json",
        {
            "command": args.command,
            "argv": sys.argv[1:],
            "config": cfg.raw,
            "seed": cfg.sim["seed"],
            "version": _version_string(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    )


def _trajectories(args, cfg: RunConfig) -> int:
    if args.trajectories is not None:
        return args.trajectories
    if args.fast:
        return FAST_TRAJECTORIES
    return int(cfg.sim["trajectories"])


def _integrator(args, cfg: RunConfig, **extra):
    kw = dict(model=args.model, seed=args.seed, spontaneous=args.spontaneous, cross_noise=args.cross_noise, dt=args.dt)
    kw.update(extra)
    return cfg.integrator(**kw)


def _ms_to_time(params, ms):
    return params.units.from_si(np.asarray(ms, dtype=float) * 1e-3, "time")


def cmd_relax(args, cfg: RunConfig, out: Path) -> int:
    params = cfg.params(args.detuning)
    config = _integrator(args, cfg)
    n_traj = _trajectories(args, cfg)
    sampler = InitialCondition(float(cfg.sim["temperature"]))
    t_max = float(_ms_to_time(params, cfg.sim["t_max_ms"]))
    snaps = np.atleast_1d(_ms_to_time(params, cfg.sim["snapshot_ms"]))
    times = np.union1d(np.linspace(0.0, t_max, int(cfg.sim["n_outputs"])), snaps)
    run = relaxation_run(params, config, n_traj, times, sampler, workers=args.workers)
    write_width_csv(out / "widths.csv", run.summary, params)
    for ms, t in zip(np.atleast_1d(cfg.sim["snapshot_ms"]), snaps):
        i = int(np.argmin(np.abs(run.result.times - t)))
        write_histogram_csv(out / f"histogram_{ms:g}ms.csv", momentum_histogram(run.result.momenta[:, i, :]))
    dev = run.summary.deviations()
    report = {
        **run.result.report(),
        "analytics": run.analytics.as_dict(),
        "max_deviation_stderr": float(np.nanmax(dev)) if np.any(np.isfinite(dev)) else None,
        "final_width": float(run.summary.widths[-1]),
    }
    _write_json(out / "run_report.json", report)
    print(f"final width {run.summary.widths[-1]:.4f} +- {run.summary.stderr[-1]:.4f} hbar k "
          f"(analytic {run.summary.analytic[-1]:.4f}); max deviation {report['max_deviation_stderr']:.2f} stderr")
    return EXIT_OK


def _steady(args, cfg, ratio, pump_ratio, model=None):
    params = cfg.params(ratio, pump_ratio)
    config = _integrator(args, cfg, **({"model": model} if model else {}))
    return steady_run(
        params, config, _trajectories(args, cfg),
        rate_times=float(cfg.sim["steady_rate_times"]), fraction=float(cfg.sim["steady_fraction"]),
        sampler=InitialCondition(float(cfg.sim["temperature"])), workers=args.workers,
    )


def cmd_steady(args, cfg: RunConfig, out: Path) -> int:
    run = _steady(args, cfg, args.detuning, None)
    write_sweep_csv(out / "steady.csv", [run.row()], ("excess_kurtosis", "kurtosis_stderr"))
    write_histogram_csv(out / "histogram.csv", momentum_histogram(run.result.momenta[:, -1, :]))
    _write_json(out / "run_report.json", {**run.result.report(), "row": run.row(), "analytics": run.analytics.as_dict()})
    print(f"dp_inf {run.estimate.width:.4f} +- {run.estimate.stderr:.4f} (analytic {run.analytic_width:.4f}); "
          f"excess kurtosis {run.snapshot.excess_kurtosis:.3f} +- {run.snapshot.kurtosis_stderr:.3f}")
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig, out: Path) -> int:
    ratios = args.detunings or cfg.sim["sweep_over_kappa"]
    pump = float(cfg.sim["sweep_pump_over_threshold"])
    rows, reports = [], []
    for r in ratios:
        run = _steady(args, cfg, float(r), pump)
        rows.append(run.row())
        reports.append(run.result.report())
        print(f"Delta_c/kappa={r:+.2f}: dp_inf {run.estimate.width:.4f} +- {run.estimate.stderr:.4f} "
              f"(analytic {run.analytics.width_inf:.4f}, with spontaneous {run.analytics.width_inf_spontaneous:.4f})")
    write_sweep_csv(out / "sweep.csv", rows, ("delta_c_over_kappa", "excess_kurtosis", "kurtosis_stderr", "pump_rabi"))
    _write_json(out / "run_report.json", {"points": reports, "rows": rows})
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig, out: Path) -> int:
    ratios = args.detunings or cfg.sim["sweep_over_kappa"]
    pump = float(cfg.sim["sweep_pump_over_threshold"])
    rows, reports = [], []
    for r in ratios:
        a = _steady(args, cfg, float(r), pump, model="A")
        b = _steady(args, cfg, float(r), pump, model="B")
        comb = math.hypot(a.estimate.stderr, b.estimate.stderr)
        z = abs(a.estimate.width - b.estimate.width) / comb
        rows.append({
            "delta_c_over_kappa": r, "dp_A": a.estimate.width, "stderr_A": a.estimate.stderr,
            "dp_B": b.estimate.width, "stderr_B": b.estimate.stderr, "z": z, "dp_analytic": a.analytics.width_inf,
        })
        reports.append({"A": a.result.report(), "B": b.result.report()})
        print(f"Delta_c/kappa={r:+.2f}: A {a.estimate.width:.4f}+-{a.estimate.stderr:.4f}  "
              f"B {b.estimate.width:.4f}+-{b.estimate.stderr:.4f}  |z|={z:.2f}")
    header = ["delta_c_over_kappa", "dp_A", "stderr_A", "dp_B", "stderr_B", "z", "dp_analytic"]
    write_csv(out / "compare.csv", header, ([row[h] for h in header] for row in rows))
    _write_json(out / "run_report.json", {"points": reports, "rows": rows})
    return EXIT_OK


def cmd_oracle(args, cfg: RunConfig, out: Path) -> int:
    params = cfg.params(args.detuning)
    o = cfg.oracle
    rng = np.random.default_rng(cfg.sim["seed"] if args.seed is None else args.seed)
    if args.positions:
        positions = np.array(args.positions, dtype=float).reshape(1, -1)
        if positions.shape[1] != params.n_atoms:
            raise ConfigError(f"expected {params.n_atoms} positions")
    else:
        positions = sample_low_field_configurations(params, int(o["n_configs"]), rng, float(o["max_photons"]))
    comp = compare_with_oracle(positions, params, n_max=int(o["n_max"]), spontaneous=bool(args.spontaneous))
    rows = list(comp.rows())
    header = ["index", "photon_number", "phi", "friction", "diffusion", "cross"]
    write_csv(out / "oracle.csv", header, ([r[h] for h in header] for r in rows))
    worst = comp.worst
    bound = float(o["bound"])
    _write_json(out / "run_report.json", {"worst": worst, "median": comp.median, "bound": bound})
    print("coefficient   median      max   (relative, max-norm)")
    for k in ("phi", "friction", "diffusion", "cross"):
        print(f"{k:<12} {comp.median[k]:9.2e} {worst[k]:9.2e}")
    exceeded = [k for k, v in worst.items() if v > bound]
    if exceeded:
        print(f"deviation above bound {bound:g}: {', '.join(exceeded)}", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def cmd_field_info(args, cfg: RunConfig, out: Path) -> int:
    params = cfg.params(args.detuning)
    if args.positions:
        x = np.array(args.positions, dtype=float)
        if x.size != params.n_atoms:
            raise ConfigError(f"expected {params.n_atoms} positions")
    else:
        x = np.random.default_rng(cfg.sim["seed"] if args.seed is None else args.seed).uniform(
            0, 2 * math.pi / params.cavity.wavenumber, params.n_atoms
        )
    spont = bool(args.spontaneous)
    snap = field_snapshot(x, params, spont)
    info = {
        "positions": x,
        "alpha_real": snap.alpha.real,
        "alpha_imag": snap.alpha.imag,
        "n_photons": snap.n_photons,
        "delta_eff": float(effective_detuning(x, params)),
        "kappa_eff": float(effective_kappa(x, params, spont)),
        "n_cav_uniform": mean_photon_number_uniform(params),
        "threshold_pump": threshold_pump(params),
        "pump_over_threshold": params.atom.pump_rabi / threshold_pump(params),
    }
    _write_json(out / "field_info.json", info)
    for k, v in info.items():
        print(f"{k:<20} {np.array2string(np.asarray(v), precision=6)}")
    return EXIT_OK


def cmd_analytics(args, cfg: RunConfig, out: Path) -> int:
    params = cfg.params(args.detuning)
    an = relaxation_analytics(params)
    table = an.as_dict()
    table["temperature_uK"] = float(params.units.to_si(an.temperature, "temperature") * 1e6)
    table["cooling_rate_per_ms"] = float(an.cooling_rate / params.units.to_si(1.0, "time") * 1e-3)
    table["n_cav"] = mean_photon_number_uniform(params)
    table["threshold_pump"] = threshold_pump(params)
    diags = validate_regime(params, an.width_inf if an.has_steady_state else math.sqrt(params.mass))
    _write_json(out / "analytics.json", {"analytics": table, "regime": [d.__dict__ for d in diags]})
    for k, v in table.items():
        print(f"{k:<24} {v: .6g}")
    for d in diags:
        print(f"regime {d.name:<22} {d.ratio: .3g} [{d.status}]")
    return EXIT_OK


COMMANDS = {
    "relax": cmd_relax,
    "steady": cmd_steady,
    "sweep-detuning": cmd_sweep,
    "compare-models": cmd_compare,
    "oracle-check": cmd_oracle,
    "field-info": cmd_field_info,
    "analytics": cmd_analytics,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out-dir", type=Path, default=Path("cavcool-out"))
    common.add_argument("--trajectories", type=int)
    common.add_argument("--fast", action="store_true", help=f"use {FAST_TRAJECTORIES} trajectories")
    common.add_argument("--spontaneous", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--cross-noise", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--model", choices=["A", "B"])
    common.add_argument("--dt", type=float)
    common.add_argument("--detuning", type=float, help="cavity detuning in units of kappa")
    parser = _Parser(prog="cavcool", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("sweep-detuning", "compare-models"):
            p.add_argument("--detunings", type=float, nargs="+", help="detunings in units of kappa")
        if name in ("oracle-check", "field-info"):
            p.add_argument("--positions", type=float, nargs="+", help="atom positions in units of 1/k")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trajectories is not None and args.trajectories < 1:
        parser.error("--trajectories must be positive")
    if args.workers < 1:
        parser.error("--workers must be positive")
    try:
        cfg = load_config(args.config)
        if args.spontaneous is None:
            args.spontaneous = bool(cfg.sim["spontaneous"]) if args.command != "oracle-check" else True
        cfg = cfg.update_simulation(seed=args.seed, model=args.model, dt=args.dt)
        out = args.out_dir
        out.mkdir(parents=True, exist_ok=True)
        _manifest(args, cfg, out)
        return COMMANDS[args.command](args, cfg, out)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"cavcool: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, OracleError, np.linalg.LinAlgError) as exc:
        print(f"cavcool: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
