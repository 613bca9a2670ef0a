"""Numerical studies built on the solver: equivalence, gauge campaigns,
Bona-Smith convergence, scheme orders, smoothing and a uniqueness probe.

Each study returns plain data (dataclasses or dicts) so the CLI, the
acceptance tests and ``kdnls verify`` can share it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .diagnostics import convergence_rate
from .dynamics import EquationParams, RhsKind
from .errors import InsufficientStencil
from .gauge import gauge_residual_pair
from .integrators import SolverConfig, Trajectory, evolve, mollify_cutoff, mollify_initial
from .spectral import Field, GridSpec

log = logging.getLogger(__name__)


def resample(u: Field, grid: GridSpec) -> Field:
    """Copy the coefficients of ``u`` onto ``grid`` (truncating or zero-padding)."""
    h = grid.N // 2
    return Field.from_modes(grid, {int(n): u.mode(int(n)) for n in u.grid.wavenumbers
                                   if -h <= n < h})


def _final(phi, p, kind, dt, t_final) -> Field:
    cfg = SolverConfig(dt=dt, t_final=t_final, snapshot_stride=int(round(t_final / dt)))
    tr = evolve(phi, p, kind, cfg)
    if tr.blowup:
        raise FloatingPointError(f"blow-up with dt = {dt}")
    return tr.state(len(tr) - 1)


def _rel_l2(u: Field, ref: Field) -> float:
    return sp.sobolev_norm(u - ref, 0.0) / sp.sobolev_norm(ref, 0.0)


# --------------------------------------------------------------------------
# Renormalization / translation equivalence
# --------------------------------------------------------------------------

def translate_renormalized(traj: Trajectory) -> np.ndarray:
    """Coefficients of u_ren(t, x + c t), c = 2 alpha P0(|phi|^2), for every snapshot."""
    c = traj.params.renorm_c0
    n = traj.grid.wavenumbers
    return traj.coeffs * np.exp(1j * np.outer(traj.times, n) * c)


@dataclass
class EquivalenceReport:
    shift_speed: float
    sup_l2_difference: float
    times: np.ndarray
    differences: np.ndarray


def equivalence_check(phi: Field, p: EquationParams, cfg: SolverConfig) -> EquivalenceReport:
    """Solve both equations from ``phi`` and compare after the spectral shift."""
    orig = evolve(phi, p, RhsKind.ORIGINAL, cfg)
    ren = evolve(phi, p, RhsKind.RENORMALIZED, cfg)
    shifted = translate_renormalized(ren)
    k = min(len(orig), len(ren))
    diffs = np.sqrt(sp.TWO_PI * np.sum(np.abs(orig.coeffs[:k] - shifted[:k]) ** 2, axis=1))
    return EquivalenceReport(shift_speed=p.renorm_c0, sup_l2_difference=float(np.max(diffs)),
                             times=orig.times[:k], differences=diffs)


# --------------------------------------------------------------------------
# Gauge-equation residual campaign
# --------------------------------------------------------------------------

def gauge_campaign(traj: Trajectory, every: int = 1, signs=(1, -1), h: float | None = None,
                   s: float | None = None) -> list[dict]:
    """Normalized and raw v_pm residuals at every ``every``-th admissible snapshot."""
    rows = []
    for k in range(0, len(traj), max(1, every)):
        t = float(traj.times[k])
        row = {"t": t}
        try:
            for sign in signs:
                tag = "plus" if sign > 0 else "minus"
                raw, rel = gauge_residual_pair(traj, traj.params, t, sign, s=s, h=h)
                row[f"res_{tag}"] = rel
                row[f"raw_{tag}"] = raw
        except InsufficientStencil:
            continue
        rows.append(row)
    return rows


# --------------------------------------------------------------------------
# Bona-Smith study
# --------------------------------------------------------------------------

@dataclass
class BonaSmithReport:
    lam: float
    eps_list: list
    cutoffs: list
    pairwise_diffs: np.ndarray  # sup_t ||u_eps - u_eps'||_{H^s}
    diffs_to_smallest: list
    fitted_gamma: float
    cauchy_ok: bool
    s: float = 2.0
    blowups: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "eps_list": list(self.eps_list), "cutoffs": list(self.cutoffs),
                "s": self.s, "pairwise_diffs": np.asarray(self.pairwise_diffs).tolist(),
                "diffs_to_smallest": list(self.diffs_to_smallest),
                "fitted_gamma": self.fitted_gamma, "cauchy_ok": self.cauchy_ok,
                "blowups": list(self.blowups)}


def _regularized_member(args) -> Trajectory:
    phi, alpha, beta, eps, lam, cfg = args
    phi_eps = mollify_initial(phi, eps, lam)
    p = EquationParams.for_datum(phi_eps, alpha, beta, epsilon=eps)
    log.info("bona-smith: eps = %g, cutoff = %d", eps, mollify_cutoff(eps, lam))
    return evolve(phi_eps, p, RhsKind.REGULARIZED, cfg)


def bona_smith_study(phi: Field, alpha: float, beta: float, eps_list, lam: float = 0.4,
                     s: float = 2.0, dt: float = 1e-4, t_final: float = 0.2,
                     stride: int = 10, workers: int = 1) -> BonaSmithReport:
    """Regularized runs from P_{<= eps^-lam} phi; sup-t H^s differences and their rate in eps."""
    eps_list = [float(e) for e in eps_list]
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    cfg = SolverConfig(dt=dt, t_final=t_final, snapshot_stride=stride)
    for eps in eps_list:  # fail fast before any run starts
        mollify_initial(phi, eps, lam)
    jobs = [(phi, alpha, beta, eps, lam, cfg) for eps in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(_regularized_member, jobs))
    else:
        trajs = [_regularized_member(j) for j in jobs]
    n = phi.grid.wavenumbers
    weight = (1.0 + n.astype(float) ** 2) ** s
    k = min(len(t) for t in trajs)
    m = len(eps_list)
    pair = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = trajs[i].coeffs[:k] - trajs[j].coeffs[:k]
            pair[i, j] = pair[j, i] = float(np.max(np.sqrt(sp.TWO_PI * np.sum(weight * np.abs(d) ** 2, axis=1))))
    to_smallest = [float(pair[i, -1]) for i in range(m - 1)]
    cauchy_ok = all(a > b for a, b in zip(to_smallest, to_smallest[1:]))
    if len(to_smallest) >= 2:
        gamma = convergence_rate(to_smallest, eps_list[:-1])
    else:
        # Two members give one difference; take d ~ eps0^gamma as the rate.
        gamma = float(np.log(to_smallest[0]) / np.log(eps_list[0])) if to_smallest[0] > 0 else float("nan")
    return BonaSmithReport(lam=lam, eps_list=eps_list,
                           cutoffs=[mollify_cutoff(e, lam) for e in eps_list],
                           pairwise_diffs=pair, diffs_to_smallest=to_smallest,
                           fitted_gamma=gamma, cauchy_ok=cauchy_ok, s=s,
                           blowups=[t.blowup for t in trajs])


# --------------------------------------------------------------------------
# Scheme orders
# --------------------------------------------------------------------------

def temporal_order(phi: Field, p: EquationParams, kind, dts, t_final: float,
                   refine: int = 8) -> tuple[float, list]:
    """Observed order of the time stepper against a run with dt_min / refine."""
    dts = [float(d) for d in dts]
    ref = _final(phi, p, kind, min(dts) / refine, t_final)
    errs = [_rel_l2(_final(phi, p, kind, dt, t_final), ref) for dt in dts]
    return convergence_rate(errs, dts), errs


def spatial_errors(phi_fine: Field, p: EquationParams, kind, sizes, dt: float,
                   t_final: float) -> list:
    """Relative L2 error of runs on each N in ``sizes`` against a run on ``phi_fine.grid``."""
    ref = _final(phi_fine, p, kind, dt, t_final)
    errs = []
    for N in sizes:
        g = GridSpec(int(N))
        u = _final(resample(phi_fine, g), p, kind, dt, t_final)
        errs.append(_rel_l2(resample(u, phi_fine.grid), ref))
    return errs


# --------------------------------------------------------------------------
# Smoothing and uniqueness probes
# --------------------------------------------------------------------------

def high_frequency_norm(u: Field, s: float, cutoff: float) -> float:
    return sp.sobolev_norm(sp.apply_multiplier(u, sp.MultiplierKind.proj_gt(cutoff)), s)


def smoothing_check(phi: Field, p: EquationParams, kind, t: float = 0.1, dt: float = 1e-4,
                    s: float = 2.0) -> dict:
    """||P_{>N/4} u||_{H^s} at time 0 and at time t."""
    cutoff = phi.grid.N / 4
    u_t = _final(phi, p, kind, dt, t)
    before = high_frequency_norm(phi, s, cutoff)
    after = high_frequency_norm(u_t, s, cutoff)
    return {"t": t, "cutoff": cutoff, "s": s, "before": before, "after": after,
            "smoothed": bool(after < before)}


def uniqueness_probe(phi: Field, p: EquationParams, kind, cfg: SolverConfig,
                     refine_N: int = 2, refine_dt: int = 2) -> dict:
    """Two discretizations of the same datum; growth of ||P_{<=N/3}(u1 - u2)||_{L2} in time.

    Two runs on identical grids from identical data coincide bit for bit, so
    the comparison is made between (N, dt) and (refine_N * N, dt / refine_dt).
    """
    g2 = GridSpec(phi.grid.N * refine_N)
    cfg2 = SolverConfig(dt=cfg.dt / refine_dt, t_final=cfg.t_final,
                        snapshot_stride=cfg.snapshot_stride * refine_dt)
    a = evolve(phi, p, kind, cfg)
    b = evolve(resample(phi, g2), p, kind, cfg2)
    k = min(len(a), len(b))
    lowpass = sp.MultiplierKind.proj_leq(phi.grid.N / 3)
    diffs = [sp.sobolev_norm(sp.apply_multiplier(a.state(i) - resample(b.state(i), phi.grid), lowpass), 0.0)
             for i in range(k)]
    return {"times": a.times[:k].tolist(), "differences": diffs, "max_difference": float(max(diffs))}
