"""Command-line entry point: ``kdnls <command> [options]``.

Exit codes: 0 ok, 1 configuration error, 2 numerical blow-up, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import itertools
import json
import logging
import os
import shutil
import subprocess
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as dg
from . import experiments as ex
from . import spectral as sp
from .config import RunConfig, load_config
from .dynamics import RhsKind
from .errors import ConfigInvalid, KdnlsError
from .integrators import evolve
from .presets import build
from .spectral import GridSpec

log = logging.getLogger("kdnls")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_VERIFY = 0, 1, 2, 3


# --------------------------------------------------------------------------
# Persistence helpers
# --------------------------------------------------------------------------

def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        t = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return t.isoformat()


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).resolve().parent)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


@contextmanager
def atomic_dir(final: Path):
    """Yield a scratch directory that replaces ``final`` only if the block succeeds."""
    final = Path(final)
    final.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".tmp-{final.name}-", dir=final.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if final.exists():
        old = final.parent / f".old-{final.name}-{os.getpid()}"
        os.replace(final, old)
    os.replace(tmp, final)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, tuple)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})


def _datum(cfg: RunConfig):
    ini = cfg.initial
    return build(cfg.grid, preset=ini.preset, params=ini.params, spectrum=ini.spectrum, seed=cfg.seed)


def _datum_spec(cfg: RunConfig) -> dict:
    if cfg.initial.spectrum is not None:
        return {"spectrum": cfg.initial.spectrum}
    return {"preset": cfg.initial.preset, "params": cfg.initial.params, "seed": cfg.seed}


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def execute_run(cfg: RunConfig, out_root: Path) -> dict:
    """Evolve, diagnose and persist one configuration; returns the manifest."""
    phi = _datum(cfg)
    p = cfg.params_for(phi)
    traj = evolve(phi, p, cfg.kind, cfg.solver)
    status = "blowup" if traj.blowup else "completed"
    records = dg.diagnostics_table(traj, with_identities=cfg.output.identities)
    mass_res = dg.mass_identity_residual(traj)
    c_fit, holds = dg.lower_bound_probe(traj)
    id_max = {k: float(np.nanmax([r.identity_residuals.get(k, np.nan) for r in records] + [-np.inf]))
              for k in dg.IDENTITY_NAMES} if cfg.output.identities else {}
    manifest = {
        "run_id": cfg.run_id,
        "created_at": _timestamp(),
        "status": status,
        "version": __version__,
        "git": _git_describe(),
        "name": cfg.name,
        "kind": cfg.kind.value,
        "params": asdict(p),
        "config": asdict(cfg.solver),
        "grid": {"N": cfg.grid.N, "domain_length": cfg.grid.domain_length},
        "initial_datum_spec": _datum_spec(cfg),
        "config_canonical": cfg.canonical(),
        "summary": {
            "num_snapshots": len(traj),
            "t_reached": float(traj.times[-1]),
            "mass_initial": float(records[0].mass),
            "mass_final": float(records[-1].mass),
            "max_abs_mass_identity_residual": float(np.max(np.abs(mass_res))),
            "lower_bound_C": c_fit,
            "lower_bound_holds": holds,
            "max_identity_residuals": {k: (v if np.isfinite(v) else None) for k, v in id_max.items()},
        },
    }
    final = Path(out_root) / cfg.run_id
    with atomic_dir(final) as tmp:
        snapdir = tmp / "snapshots"
        snapdir.mkdir()
        picks = sorted(set(np.linspace(0, len(traj) - 1, min(cfg.output.snapshots, len(traj))).round().astype(int)))
        for k in picks:
            sp.write_spectrum(snapdir / f"u_{k:07d}.csv", traj.state(k), float(traj.times[k]))
        dg.write_diagnostics_csv(records, tmp / "diagnostics.csv")
        dg.emit_plot_script({cfg.run_id: final / "diagnostics.csv"}, tmp / "plot_diagnostics.py",
                            output=str(final / "diagnostics.png"))
        _write_json(tmp / "manifest.json", manifest)
    manifest["path"] = str(final)
    return manifest


def cmd_run(args) -> int:
    cfg = _load(args)
    m = execute_run(cfg, _out(args))
    print(f"{m['status']}: {m['path']}")
    print(f"  max |mass identity residual| = {m['summary']['max_abs_mass_identity_residual']:.3e}")
    return EXIT_BLOWUP if m["status"] == "blowup" else EXIT_OK


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def _sweep_member(item):
    cfg, out_root = item
    try:
        m = execute_run(cfg, out_root)
        return {"run_id": m["run_id"], "status": m["status"], "path": m["path"]}
    except Exception as exc:  # recorded per run; the sweep continues
        return {"run_id": cfg.run_id, "status": "error", "error": f"{type(exc).__name__}: {exc}"}


def sweep_members(cfg: RunConfig) -> list[tuple[dict, RunConfig]]:
    axes = sorted(cfg.sweep)
    combos = itertools.product(*(cfg.sweep[a] for a in axes)) if axes else [()]
    return [(dict(zip(axes, c)), cfg.with_overrides(**dict(zip(axes, c)))) for c in combos]


def order_report(cfg: RunConfig) -> dict:
    """Observed orders for dt and N sweep axes (other axes held at their base value)."""
    phi = _datum(cfg)
    p = cfg.params_for(phi)
    rep = {}
    if len(cfg.sweep.get("dt", [])) >= 2:
        dts = sorted(cfg.sweep["dt"], reverse=True)
        order, errs = ex.temporal_order(phi, p, cfg.kind, dts, cfg.solver.t_final)
        rep["temporal"] = {"dt": dts, "errors": errs, "order": order}
    if len(cfg.sweep.get("N", [])) >= 2:
        sizes = sorted(cfg.sweep["N"])
        fine = GridSpec(2 * sizes[-1])
        ini = cfg.initial
        phi_fine = build(fine, preset=ini.preset, params=ini.params, spectrum=ini.spectrum, seed=cfg.seed)
        p_fine = cfg.params_for(phi_fine)
        errs = ex.spatial_errors(phi_fine, p_fine, cfg.kind, sizes, cfg.solver.dt, cfg.solver.t_final)
        rep["spatial"] = {"N": sizes, "reference_N": fine.N, "errors": errs,
                          "drop": [a / b if b > 0 else float("inf") for a, b in zip(errs, errs[1:])]}
    return rep


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out(args)
    members = sweep_members(cfg)
    items = [(c, out) for _, c in members]
    if args.threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_sweep_member, items))
    else:
        results = [_sweep_member(it) for it in items]
    for (axes, _), r in zip(members, results):
        r["axes"] = axes
        print(f"{r['status']:>9}  {r['run_id']}  {axes}")
    index = {"sweep": cfg.sweep, "base_run_id": cfg.run_id, "runs": results}
    try:
        index["orders"] = order_report(cfg)
    except Exception as exc:
        index["orders"] = {"error": f"{type(exc).__name__}: {exc}"}
    for kind, rep in index["orders"].items():
        if kind == "temporal":
            print(f"temporal order: {rep['order']:.3f}")
        elif kind == "spatial":
            print(f"spatial error drop: {rep['drop']}")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"sweep-{cfg.run_id}.json", index)
    if any(r["status"] == "blowup" for r in results):
        return EXIT_BLOWUP
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from . import verify
    with sp.debug_mutations(dealias=not args.no_dealias, flip_hilbert=args.flip_hilbert):
        results = verify.run_checks()
    print(verify.format_table(results))
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else f"{sum(not r.passed for r in results)} check(s) failed")
    return EXIT_OK if ok else EXIT_VERIFY


# --------------------------------------------------------------------------
# studies
# --------------------------------------------------------------------------

def cmd_gauge_check(args) -> int:
    cfg = _load(args)
    if cfg.kind is not RhsKind.RENORMALIZED:
        raise ConfigInvalid("equation.kind", "gauge-check needs the renormalized equation")
    phi = _datum(cfg)
    p = cfg.params_for(phi)
    traj = evolve(phi, p, cfg.kind, cfg.solver)
    rows = ex.gauge_campaign(traj, every=cfg.gauge.every, signs=cfg.gauge.signs, h=cfg.gauge.h)
    worst = max((v for r in rows for k, v in r.items() if k.startswith("res_")), default=float("nan"))
    worst_raw = max((v for r in rows for k, v in r.items() if k.startswith("raw_")), default=float("nan"))
    with atomic_dir(_out(args) / f"gauge-{cfg.run_id}") as tmp:
        _write_csv(tmp / "gauge_residuals.csv", rows)
        _write_json(tmp / "summary.json", {"run_id": cfg.run_id, "created_at": _timestamp(),
                                           "num_times": len(rows), "max_residual": worst,
                                           "max_raw_residual": worst_raw,
                                           "blowup": traj.blowup})
    print(f"gauge residual over {len(rows)} times: max = {worst:.3e} (raw {worst_raw:.3e})")
    return EXIT_BLOWUP if traj.blowup else EXIT_OK


def cmd_equivalence(args) -> int:
    cfg = _load(args)
    phi = _datum(cfg)
    p = cfg.params_for(phi)
    rep = ex.equivalence_check(phi, p, cfg.solver)
    with atomic_dir(_out(args) / f"equivalence-{cfg.run_id}") as tmp:
        _write_csv(tmp / "differences.csv", [{"t": float(t), "l2_difference": float(d)}
                                            for t, d in zip(rep.times, rep.differences)])
        _write_json(tmp / "summary.json", {"run_id": cfg.run_id, "created_at": _timestamp(),
                                           "shift_speed": rep.shift_speed,
                                           "sup_l2_difference": rep.sup_l2_difference})
    print(f"shift speed {rep.shift_speed:.6g}; sup-t L2 difference = {rep.sup_l2_difference:.3e}")
    return EXIT_OK


def cmd_bona_smith(args) -> int:
    cfg = _load(args)
    phi = _datum(cfg)
    b = cfg.bona_smith
    rep = ex.bona_smith_study(phi, cfg.equation.alpha, cfg.equation.beta, b.eps_list, lam=b.lam,
                              s=b.s, dt=cfg.solver.dt, t_final=cfg.solver.t_final,
                              stride=cfg.solver.snapshot_stride, workers=args.threads)
    probe = ex.uniqueness_probe(phi, cfg.params_for(phi), cfg.kind, cfg.solver) \
        if cfg.kind is not RhsKind.REGULARIZED else None
    with atomic_dir(_out(args) / f"bona-smith-{cfg.run_id}") as tmp:
        out = rep.as_dict()
        out.update(run_id=cfg.run_id, created_at=_timestamp())
        if probe is not None:
            out["uniqueness_probe"] = probe
        _write_json(tmp / "bona_smith.json", out)
    print(f"cutoffs {rep.cutoffs}; differences to smallest eps {['%.3e' % d for d in rep.diffs_to_smallest]}")
    print(f"fitted gamma = {rep.fitted_gamma:.3f}; monotone = {rep.cauchy_ok}")
    return EXIT_BLOWUP if any(rep.blowups) else EXIT_OK


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

def cmd_report(args) -> int:
    out = _out(args)
    dirs = [Path(d) for d in args.runs] if args.runs else sorted(
        d for d in out.glob("*") if (d / "manifest.json").exists())
    rows, paths = [], {}
    for d in dirs:
        try:
            m = json.loads((d / "manifest.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            log.warning("skipping %s: %s", d, exc)
            continue
        s = m["summary"]
        ids = [v for v in s.get("max_identity_residuals", {}).values() if v is not None]
        rows.append((m["run_id"], m["status"], m["kind"], m["params"]["alpha"], m["params"]["beta"],
                     m["grid"]["N"], m["config"]["dt"], s["t_reached"],
                     s["max_abs_mass_identity_residual"], max(ids) if ids else float("nan")))
        paths[m["run_id"]] = str((d / "diagnostics.csv").resolve())
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# Run report", "",
             "| run | status | kind | alpha | beta | N | dt | t | mass residual | identity residual |",
             "|---|---|---|---|---|---|---|---|---|---|"]
    for r in rows:
        lines.append("| " + " | ".join([r[0], r[1], r[2], f"{r[3]:g}", f"{r[4]:g}", str(r[5]),
                                        f"{r[6]:g}", f"{r[7]:g}", f"{r[8]:.2e}", f"{r[9]:.2e}"]) + " |")
    (out / "report.md").write_text("\n".join(lines) + "\n")
    if paths:
        dg.emit_plot_script(paths, out / "plot_report.py", output=str((out / "report.png").resolve()))
    print(f"report on {len(rows)} run(s) written to {out / 'report.md'}")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigInvalid("--config", "this command needs a config file")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def _out(args) -> Path:
    return Path(os.environ.get("KDNLS_OUT") or args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", default="runs", help="output root (env KDNLS_OUT overrides)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kdnls", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "run": (cmd_run, "evolve one configuration and persist a run directory"),
        "sweep": (cmd_sweep, "run the cartesian product of the sweep axes"),
        "verify": (cmd_verify, "run the built-in invariant suite"),
        "gauge-check": (cmd_gauge_check, "residual of the gauge-transformed equation along a run"),
        "equivalence": (cmd_equivalence, "compare the original and renormalized equations"),
        "bona-smith": (cmd_bona_smith, "regularization convergence study"),
        "report": (cmd_report, "summarize run directories"),
    }
    for name, (fn, help_) in handlers.items():
        sp_ = sub.add_parser(name, parents=[common], help=help_)
        sp_.set_defaults(func=fn)
        if name == "verify":
            sp_.add_argument("--flip-hilbert", action="store_true", help=argparse.SUPPRESS)
            sp_.add_argument("--no-dealias", action="store_true", help=argparse.SUPPRESS)
        if name == "report":
            sp_.add_argument("runs", nargs="*", help="run directories (default: all under --out)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KdnlsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
