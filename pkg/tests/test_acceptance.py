"""The eleven acceptance criteria, each at its stated tolerance and time budget.

Every test appends one ``CRITERION n: PASS|FAIL ...`` line to the shared log;
the lines are printed in order at the end of the pytest run.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from kdnls import diagnostics as dg
from kdnls import experiments as ex
from kdnls import spectral as sp
from kdnls.config import load_config
from kdnls.dynamics import EquationParams, mean_abs2, resonant_parts
from kdnls.gauge import gauge_forward, gauge_reconstruct, gauge_residual_pair
from kdnls.integrators import SolverConfig, evolve
from kdnls.presets import build, plane_wave, random_smooth, rough, two_mode
from kdnls.spectral import Field, GridSpec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def record(log, n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    log.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def c4_run():
    """phi = e^{ix} + 1/2 e^{2ix}, alpha = 1, beta = -1, N = 128, dt = 1e-4, T = 0.5, every step kept."""
    t0 = time.perf_counter()
    phi = two_mode(GridSpec(128))
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    tr = evolve(phi, p, "renormalized", SolverConfig(dt=1e-4, t_final=0.5, snapshot_stride=1))
    return tr, time.perf_counter() - t0


INTERIOR = [round(0.04 + 0.05 * j, 4) for j in range(10)]  # 0.04, 0.09, ..., 0.49


def test_criterion_01_operator_algebra(acceptance_log):
    t0 = time.perf_counter()
    g = GridSpec(64)
    x = g.x
    res = {}
    res["H(cos)=sin"] = np.max(np.abs(sp.hilbert(Field.from_values(g, np.cos(x))).values - np.sin(x)))
    worst_p = worst_d = 0.0
    for seed in range(20):
        u = random_smooth(g, seed=seed, kmax=20, decay=0.9)
        total = sp.proj_plus(u) + sp.proj_minus(u) + sp.apply_multiplier(u, sp.P_ZERO)
        worst_p = max(worst_p, np.max(np.abs(total.coeffs - u.coeffs)) / np.max(np.abs(u.coeffs)))
        d = sp.abs_dx(u) - (-1j * sp.dx(sp.proj_plus(u)) + 1j * sp.dx(sp.proj_minus(u)))
        worst_d = max(worst_d, sp.sobolev_norm(d, 0) / sp.sobolev_norm(sp.abs_dx(u), 0))
    res["P+ + P- + P0 = Id"] = worst_p
    res["D = -i dx P+ + i dx P-"] = worst_d
    res["dx^-1 sin = -cos"] = np.max(np.abs(sp.antiderivative(Field.from_values(g, np.sin(x))).values + np.cos(x)))
    elapsed = time.perf_counter() - t0
    worst = max(res.values())
    ok = worst <= 1e-13 and elapsed < 1.0
    record(acceptance_log, 1, ok, f"max residual {worst:.2e} (tol 1e-13), {elapsed:.2f} s (< 1 s)")
    assert ok, res


def test_criterion_02_plane_wave(acceptance_log):
    t0 = time.perf_counter()
    g = GridSpec(64)
    n, A, alpha = 1, 1.0, 1.0
    phi = plane_wave(g, n, A)
    p = EquationParams(alpha=alpha, beta=-1.0)
    tr = evolve(phi, p, "original", SolverConfig(dt=1e-3, t_final=1.0, snapshot_stride=10))
    err = 0.0
    for k, t in enumerate(tr.times):
        exact = plane_wave(g, n, A * np.exp(1j * (-n * n * t + alpha * n * abs(A) ** 2 * t)))
        err = max(err, sp.sobolev_norm(tr.state(k) - exact, 0) / sp.sobolev_norm(exact, 0))
    masses = np.array([dg.mass(s) for s in tr.states])
    drift = float(np.max(np.abs(masses - masses[0])))
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-10 and drift <= 1e-12 and elapsed < 5.0
    record(acceptance_log, 2, ok, f"sup-t rel L2 error {err:.2e} (tol 1e-10), mass drift {drift:.2e} "
                                  f"(tol 1e-12), {elapsed:.2f} s (< 5 s)")
    assert ok


def test_criterion_03_single_mode_cancellation(acceptance_log):
    t0 = time.perf_counter()
    g = GridSpec(64)
    worst = 0.0
    for k in (1, 2, 5, -3, 17):
        for A in (1.0, 0.4 - 0.8j, 2.0j):
            for beta in (-1.0, -0.3):
                u = Field.from_modes(g, {k: A})
                p = EquationParams(alpha=0.0, beta=beta)
                _, nu = resonant_parts(u, u, u, u, p)
                out = nu.coeffs + beta * mean_abs2(u) * np.abs(g.wavenumbers) * u.coeffs
                worst = max(worst, float(np.max(np.abs(out))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    record(acceptance_log, 3, ok, f"max assembled residual {worst:.2e} (tol 1e-12), {elapsed:.2f} s (< 1 s)")
    assert ok


def test_criterion_04_mass_identity(acceptance_log, c4_run):
    tr, run_time = c4_run
    t0 = time.perf_counter()
    m0 = dg.mass(tr.state(0))
    res = float(np.max(np.abs(dg.mass_identity_residual(tr))) / m0)
    masses = sp.TWO_PI * np.sum(np.abs(tr.coeffs) ** 2, axis=1)
    decreasing = bool(np.all(np.diff(masses) < 0))
    elapsed = run_time + time.perf_counter() - t0
    ok = res <= 1e-8 and decreasing and elapsed < 60.0
    record(acceptance_log, 4, ok, f"max residual / mass(0) {res:.2e} (tol 1e-8), strictly decreasing "
                                  f"{decreasing}, {elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_05_six_identities(acceptance_log, c4_run):
    tr, run_time = c4_run
    t0 = time.perf_counter()
    worst = {name: 0.0 for name in dg.IDENTITY_NAMES}
    for t in INTERIOR:
        for name, v in dg.identity_residuals_all(tr, t, 1e-3).items():
            worst[name] = max(worst[name], v)
    elapsed = run_time + time.perf_counter() - t0
    top = max(worst.values())
    ok = top <= 1e-5 and elapsed < 60.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(acceptance_log, 5, ok, f"max residual {top:.2e} (tol 1e-5) at 10 times [{detail}], "
                                  f"{elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_06_energy(acceptance_log, c4_run):
    tr, _ = c4_run
    rng = np.random.default_rng(2024)
    g = GridSpec(64)
    e_min, form_gap = np.inf, 0.0
    for _ in range(1000):
        kmax = int(rng.integers(1, 11))
        u = random_smooth(g, seed=int(rng.integers(2**31)), kmax=kmax, decay=float(rng.uniform(0.3, 1.0)),
                          scale=float(rng.uniform(0.1, 2.0)))
        p = EquationParams(alpha=float(rng.uniform(-2, 2)), beta=float(rng.uniform(-2, 0)))
        e1 = dg.energy_functional(u, p)
        e2 = dg.energy_functional_expanded(u, p)
        e_min = min(e_min, e1)
        form_gap = max(form_gap, abs(e1 - e2) / abs(e1))
    de_gap = 0.0
    for t in INTERIOR:
        fd, assembled = dg.energy_derivative_check(tr, t, 1e-3)
        de_gap = max(de_gap, abs(fd - assembled) / abs(assembled))
    ok = e_min >= 0 and form_gap <= 1e-10 and de_gap <= 1e-4
    record(acceptance_log, 6, ok, f"min E {e_min:.3e} (>= 0) over 1000 fields, compact vs expanded "
                                  f"{form_gap:.2e} (tol 1e-10), FD dE/dt vs assembly {de_gap:.2e} (tol 1e-4)")
    assert ok


def test_criterion_07_gauge(acceptance_log, c4_run):
    tr, run_time = c4_run
    t0 = time.perf_counter()
    g = GridSpec(128)
    p_rt = EquationParams(alpha=1.0, beta=-1.0)
    rt = 0.0
    for seed in range(100):
        u = random_smooth(g, seed=seed, kmax=8)
        back = gauge_reconstruct(gauge_forward(u, p_rt), u.mean)
        rt = max(rt, float(np.max(np.abs(back.coeffs - u.coeffs)) / np.max(np.abs(u.coeffs))))
    # v_- vanishes at t = 0 for this datum (no negative modes), so the normalized
    # residual is sampled from t = 0.01 on; the raw residual is reported from the start.
    times = [round(0.01 * j, 4) for j in range(1, 50)]
    worst = {1: 0.0, -1: 0.0}
    raw_early = 0.0
    for t in times:
        for s in (1, -1):
            worst[s] = max(worst[s], gauge_residual_pair(tr, tr.params, t, s, s=2.0, h=1e-4)[1])
    for t in (2e-4, 1e-3, 5e-3):
        for s in (1, -1):
            raw_early = max(raw_early, gauge_residual_pair(tr, tr.params, t, s, s=2.0, h=1e-4)[0])
    elapsed = run_time + time.perf_counter() - t0
    top = max(worst.values())
    ok = rt <= 1e-11 and top <= 1e-6 and elapsed < 60.0
    record(acceptance_log, 7, ok, f"round trip {rt:.2e} (tol 1e-11) on 100 fields, residual "
                                  f"+ {worst[1]:.2e} / - {worst[-1]:.2e} (tol 1e-6) at {len(times)} times, "
                                  f"raw residual for t <= 5e-3 {raw_early:.1e}, {elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_08_equivalence(acceptance_log):
    t0 = time.perf_counter()
    phi = two_mode(GridSpec(128))
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    rep = ex.equivalence_check(phi, p, SolverConfig(dt=1e-4, t_final=0.25, snapshot_stride=100))
    elapsed = time.perf_counter() - t0
    ok = rep.sup_l2_difference <= 1e-8 and elapsed < 60.0
    record(acceptance_log, 8, ok, f"sup-t L2 difference {rep.sup_l2_difference:.2e} (tol 1e-8), "
                                  f"{elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_09_bona_smith(acceptance_log):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "bona_smith.yaml")
    phi = rough(GridSpec(256), s=2.0, seed=cfg.seed)
    b = cfg.bona_smith
    rep = ex.bona_smith_study(phi, cfg.equation.alpha, cfg.equation.beta, b.eps_list, lam=b.lam, s=b.s,
                              dt=cfg.solver.dt, t_final=cfg.solver.t_final, stride=cfg.solver.snapshot_stride)
    elapsed = time.perf_counter() - t0
    ok = rep.cauchy_ok and rep.fitted_gamma > 0 and elapsed < 600.0
    diffs = ", ".join(f"{d:.3f}" for d in rep.diffs_to_smallest)
    record(acceptance_log, 9, ok, f"cutoffs {rep.cutoffs}, sup-t H^2 diffs to smallest eps [{diffs}], "
                                  f"monotone {rep.cauchy_ok}, gamma {rep.fitted_gamma:.3f} (> 0), "
                                  f"{elapsed:.1f} s (< 600 s)")
    assert ok


def test_criterion_10_scheme_orders(acceptance_log):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "order_sweep.yaml")
    phi = build(cfg.grid, cfg.initial.preset, cfg.initial.params, seed=cfg.seed)
    p = cfg.params_for(phi)
    order, _ = ex.temporal_order(phi, p, cfg.kind, cfg.sweep["dt"], cfg.solver.t_final)
    scfg = load_config(CONFIGS / "spatial_sweep.yaml")
    sizes = sorted(scfg.sweep["N"])
    fine = GridSpec(2 * sizes[-1])
    phi_fine = build(fine, scfg.initial.preset, scfg.initial.params, seed=scfg.seed)
    errs = ex.spatial_errors(phi_fine, scfg.params_for(phi_fine), scfg.kind, sizes, scfg.solver.dt,
                             scfg.solver.t_final)
    drop = errs[0] / errs[1]
    elapsed = time.perf_counter() - t0
    ok = 3.5 <= order <= 4.5 and drop >= 1e3 and elapsed < 120.0
    record(acceptance_log, 10, ok, f"temporal order {order:.3f} (in [3.5, 4.5]), spatial drop N=64->128 "
                                   f"{drop:.2e} (>= 1e3), {elapsed:.1f} s (< 120 s)")
    assert ok


def test_criterion_11_smoothing(acceptance_log):
    g = GridSpec(256)
    phi = rough(g, s=2.0, seed=0)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    res = ex.smoothing_check(phi, p, "renormalized", t=0.1, dt=1e-4, s=2.0)
    ok = bool(res["smoothed"])
    record(acceptance_log, 11, ok, f"||P_>N/4 u||_H2: {res['before']:.3e} at t=0 -> {res['after']:.3e} "
                                   f"at t=0.1, smoothed = {res['smoothed']}")
    assert ok
