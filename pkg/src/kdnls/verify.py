"""Self-check suite run by ``kdnls verify``.

Each check returns a measured value and its tolerance; a check passes when
value <= tol.  Sizes are small so the suite finishes in seconds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import diagnostics as dg
from . import reference as ref
from . import spectral as sp
from .dynamics import EquationParams, RhsKind, mean_abs2, nonlinearity, resonant_parts
from .experiments import equivalence_check
from .gauge import gauge_equation_residual, gauge_forward, gauge_reconstruct, nv_total
from .integrators import SolverConfig, evolve
from .presets import plane_wave, random_smooth, two_mode
from .spectral import Field, GridSpec


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


def _maxabs(a) -> float:
    return float(np.max(np.abs(a)))


def check_hilbert_cos() -> float:
    g = GridSpec(16)
    return _maxabs((sp.hilbert(Field.from_values(g, np.cos(g.x))).values - np.sin(g.x)))


def check_projection_sum() -> float:
    u = random_smooth(GridSpec(32), seed=1, kmax=10)
    total = sp.proj_plus(u) + sp.proj_minus(u) + Field.constant(u.grid, u.mean)
    return _maxabs(total.coeffs - u.coeffs) / _maxabs(u.coeffs)


def check_dx_identity() -> float:
    u = random_smooth(GridSpec(32), seed=2, kmax=10)
    lhs = sp.abs_dx(u)
    rhs = -1j * sp.dx(sp.proj_plus(u)) + 1j * sp.dx(sp.proj_minus(u))
    return sp.sobolev_norm(lhs - rhs, 0) / sp.sobolev_norm(u, 1)


def check_antiderivative_sin() -> float:
    g = GridSpec(16)
    return _maxabs(sp.antiderivative(Field.from_values(g, np.sin(g.x))).values + np.cos(g.x))


def check_product_oracle() -> float:
    # Modes chosen so that an unpadded product folds 9 and 11 back onto the grid.
    g = GridSpec(16)
    a = Field.from_modes(g, {5: 1.0, 3: 0.5})
    b = Field.from_modes(g, {6: 1.0, -2: 0.25})
    return _maxabs(sp.mul(a, b).coeffs - ref.direct_product(a, b).coeffs)


def check_nonlinearity_oracle() -> float:
    u = random_smooth(GridSpec(32), seed=3, kmax=4)
    p = EquationParams(alpha=0.7, beta=-1.3)
    return _maxabs(nonlinearity(u, p).coeffs - ref.fine_nonlinearity(u, p).coeffs)


def check_single_mode_resonance() -> float:
    """For A e^{ikx}, the beta part of Nu cancels beta P0(|u|^2) D_x u."""
    g = GridSpec(32)
    worst = 0.0
    for k, A in ((1, 1.0), (3, 0.5 - 0.2j), (-2, 0.8j)):
        u = plane_wave(g, k, A)
        p = EquationParams(alpha=0.0, beta=-1.0)
        _, nu = resonant_parts(u, u, u, u, p)
        out = nu.coeffs + p.beta * mean_abs2(u) * np.abs(g.wavenumbers) * u.coeffs
        worst = max(worst, _maxabs(out))
    return worst


def check_resonant_oracle() -> float:
    g = GridSpec(16)
    fs = [random_smooth(g, seed=s, kmax=3) for s in (4, 5, 6, 7)]
    p = EquationParams(alpha=0.9, beta=-0.6)
    a0, a1 = resonant_parts(*fs, p)
    b0, b1 = ref.direct_resonant_parts(*fs, p)
    return max(_maxabs(a0.coeffs - b0.coeffs), _maxabs(a1.coeffs - b1.coeffs))


def check_gauge_round_trip() -> float:
    u = random_smooth(GridSpec(128), seed=8, kmax=6)
    p = EquationParams(alpha=1.0, beta=-1.0)
    back = gauge_reconstruct(gauge_forward(u, p), u.mean)
    return _maxabs(back.coeffs - u.coeffs) / _maxabs(u.coeffs)


def check_gauge_monolithic() -> float:
    g = GridSpec(64)
    u = Field.from_modes(g, {1: 1.0, -2: 0.5})
    p = EquationParams.for_datum(u, 1.0, -1.0)
    return max(_maxabs(nv_total(u, p, s).coeffs - ref.monolithic_nv(u, p, s, factor=4).coeffs)
               for s in (1, -1))


def check_plane_wave() -> float:
    g = GridSpec(64)
    phi = plane_wave(g, 1, 1.0)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    tr = evolve(phi, p, RhsKind.ORIGINAL, SolverConfig(dt=1e-3, t_final=0.2, snapshot_stride=50))
    worst = 0.0
    for k, t in enumerate(tr.times):
        exact = plane_wave(g, 1, np.exp(1j * (-t + t)))
        worst = max(worst, sp.sobolev_norm(tr.state(k) - exact, 0) / sp.sobolev_norm(exact, 0))
    return worst


_RUN_CACHE: dict = {}


def _generic_run():
    if "run" not in _RUN_CACHE:
        g = GridSpec(128)
        phi = two_mode(g)
        p = EquationParams.for_datum(phi, 1.0, -1.0)
        cfg = SolverConfig(dt=1e-4, t_final=0.1, snapshot_stride=1, residual_stencil_h=1e-3)
        _RUN_CACHE["run"] = evolve(phi, p, RhsKind.RENORMALIZED, cfg)
    return _RUN_CACHE["run"]


def check_mass_identity() -> float:
    tr = _generic_run()
    r = dg.mass_identity_residual(tr)
    return float(np.max(np.abs(r)) / dg.mass(tr.state(0)))


def check_six_identities() -> float:
    tr = _generic_run()
    return max(dg.identity_residuals_all(tr, 0.05, 1e-3).values())


def check_energy_forms() -> float:
    u = random_smooth(GridSpec(64), seed=9, kmax=6)
    p = EquationParams(alpha=0.8, beta=-1.1)
    e1, e2 = dg.energy_functional(u, p), dg.energy_functional_expanded(u, p)
    return abs(e1 - e2) / max(abs(e1), 1e-300)


def check_gauge_residual() -> float:
    tr = _generic_run()
    return max(gauge_equation_residual(tr, tr.params, 0.05, s, h=1e-4) for s in (1, -1))


def check_equivalence() -> float:
    g = GridSpec(64)
    phi = two_mode(g)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    return equivalence_check(phi, p, SolverConfig(dt=1e-3, t_final=0.05, snapshot_stride=10)).sup_l2_difference


CHECKS = [
    ("hilbert_cos_is_sin", check_hilbert_cos, 1e-13),
    ("projections_sum_to_identity", check_projection_sum, 1e-14),
    ("modulus_derivative_identity", check_dx_identity, 1e-13),
    ("antiderivative_of_sin", check_antiderivative_sin, 1e-13),
    ("dealiased_product_vs_direct_sum", check_product_oracle, 1e-13),
    ("nonlinearity_vs_refined_grid", check_nonlinearity_oracle, 1e-11),
    ("single_mode_resonant_cancellation", check_single_mode_resonance, 1e-12),
    ("resonant_split_vs_direct_sum", check_resonant_oracle, 1e-12),
    ("gauge_round_trip", check_gauge_round_trip, 1e-11),
    ("gauge_groups_vs_monolithic", check_gauge_monolithic, 1e-10),
    ("plane_wave_exact_solution", check_plane_wave, 1e-10),
    ("mass_dissipation_identity", check_mass_identity, 1e-8),
    ("six_differential_identities", check_six_identities, 1e-5),
    ("energy_compact_vs_expanded", check_energy_forms, 1e-10),
    ("gauge_equation_residual", check_gauge_residual, 1e-6),
    ("translation_equivalence", check_equivalence, 1e-8),
]


def run_checks(names=None) -> list[CheckResult]:
    _RUN_CACHE.clear()
    out = []
    for name, fn, tol in CHECKS:
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            value = float(fn())
        except Exception:  # a crashing check is a failed check
            value = float("nan")
        out.append(CheckResult(name, value, tol, time.perf_counter() - t0))
    return out


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'value':>10}  {'tol':>8}  result"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.value:10.3e}  {r.tol:8.1e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
