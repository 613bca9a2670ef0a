"""Scalar functionals of a trajectory and residuals of their evolution laws.

Integrals of polynomial densities are evaluated on a grid refined by
``FINE`` (zero-padded interpolant), where H and D = |d_x| act spectrally on
the refined grid.  This keeps the identity checks independent of the
dealiased-product chain used by the time stepper.

Notation: m = |u|^2, p = Im(conj(u) u_x).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .dynamics import EquationParams, dissipation_rate_coeffs
from .errors import DegenerateFit, InsufficientStencil
from .integrators import Trajectory, five_point_derivative
from .spectral import Field

FINE = 4

IDENTITY_NAMES = ("kinetic", "momentum_m", "momentum_Hm", "mass_cubed", "m2Hm", "mHm2")


class _Fine:
    """Densities of one state on the refined grid."""

    def __init__(self, u: Field, factor: int = FINE):
        M = factor * u.grid.N
        self.k = np.fft.fftfreq(M, 1.0 / M)
        self.u = sp.fine_values(u, factor)
        self.ux = sp.fine_values(sp.dx(u), factor)
        self.m = np.abs(self.u) ** 2
        self.p = np.imag(np.conj(self.u) * self.ux)
        self.Hm = self.H(self.m)
        self.Dm = self.D(self.m)

    def _mult(self, f, s):
        return np.fft.ifft(s * np.fft.fft(f)).real

    def H(self, f):
        return self._mult(f, -1j * np.sign(self.k))

    def D(self, f):
        return self._mult(f, np.abs(self.k))

    def dx(self, f):
        return self._mult(f, 1j * self.k)

    @staticmethod
    def integral(f) -> float:
        return float(sp.TWO_PI * np.mean(f))

    def dhalf2(self, f) -> float:
        """||D^{1/2} f||^2 = int f D f."""
        return self.integral(f * self.D(f))


def mass(u: Field) -> float:
    """int |u|^2 dx (Parseval)."""
    return float(sp.TWO_PI * np.sum(np.abs(u.coeffs) ** 2))


def dissipation_rate(u: Field) -> float:
    return dissipation_rate_coeffs(u.coeffs, u.grid)


def energy_functional(u: Field, p: EquationParams) -> float:
    """E[u] = int |u_x - (3i/4)(alpha m + beta H m) u|^2 dx."""
    f = _Fine(u)
    w = f.ux - 0.75j * (p.alpha * f.m + p.beta * f.Hm) * f.u
    return f.integral(np.abs(w) ** 2)


def energy_functional_expanded(u: Field, p: EquationParams) -> float:
    """The same functional, from its expanded density."""
    f = _Fine(u)
    a, b = p.alpha, p.beta
    dens = (np.abs(f.ux) ** 2
            - 1.5 * (a * f.m + b * f.Hm) * f.p
            + 9.0 / 16.0 * (a * a * f.m**3 + 2 * a * b * f.m**2 * f.Hm + b * b * f.m * f.Hm**2))
    return f.integral(dens)


def identity_functionals(u: Field) -> dict[str, float]:
    """Left-hand-side functionals of the six identities."""
    f = _Fine(u)
    return {
        "kinetic": f.integral(np.abs(f.ux) ** 2),
        "momentum_m": f.integral(f.m * f.p),
        "momentum_Hm": f.integral(f.Hm * f.p),
        "mass_cubed": f.integral(f.m**3),
        "m2Hm": f.integral(f.m**2 * f.Hm),
        "mHm2": f.integral(f.m * f.Hm**2),
    }


def identity_rhs(u: Field, p: EquationParams) -> dict[str, float]:
    """Closed-form time derivatives of the six functionals."""
    f = _Fine(u)
    a, b = p.alpha, p.beta
    m, pp, Hm, Dm = f.m, f.p, f.Hm, f.Dm
    I, D, H, dx = f.integral, f.D, f.H, f.dx
    dux2 = dx(np.abs(f.ux) ** 2)
    mx = dx(m)
    m2 = m * m
    D_m2 = D(m2)
    D_mHm = D(m * Hm)
    H_mDm = H(m * Dm)
    kin_diss = f.dhalf2(mx)
    return {
        "kinetic": -3 * I((a * m + b * Hm) * dux2) + b * kin_diss,
        "momentum_m": -2 * I(m * dux2) + I((2 * a * dx(m2) + 4 * b * m * Dm) * pp),
        "momentum_Hm": (-2 * I(Hm * dux2) - 2 * f.dhalf2(pp) + 0.5 * kin_diss
                        + a * I((1.5 * D_m2 - m * Dm + 2 * Hm * mx) * pp)
                        + b * I((D_mHm + H_mDm + Hm * Dm) * pp)),
        "mass_cubed": 6 * I(dx(m2) * pp) + 5 * b * I(m**3 * Dm),
        "m2Hm": (I((4 * dx(m * Hm) - 2 * D_m2) * pp)
                 + a * I(m2 * (1.5 * D_m2 - 2 * m * Dm))
                 + b * I(m2 * (D_mHm + H_mDm + 2 * Hm * Dm))),
        "mHm2": (I((4 * Hm * Dm - 4 * D_mHm) * pp)
                 + a * I(m * Hm * (3 * D_m2 - 3 * m * Dm))
                 + b * I(m * Hm * (2 * D_mHm + 2 * H_mDm - Hm * Dm))),
    }


def energy_derivative_parts(u: Field, p: EquationParams) -> dict[str, float]:
    """d/dt E assembled from the six identities, split into dissipative part and F + G.

    The weights follow the expanded energy density: 1, -3/2 (alpha, beta),
    9/16 (alpha^2, 2 alpha beta, beta^2).
    """
    r = identity_rhs(u, p)
    a, b = p.alpha, p.beta
    total = (r["kinetic"] - 1.5 * (a * r["momentum_m"] + b * r["momentum_Hm"])
             + 9.0 / 16.0 * (a * a * r["mass_cubed"] + 2 * a * b * r["m2Hm"] + b * b * r["mHm2"]))
    f = _Fine(u)
    dissipative = b / 4.0 * f.dhalf2(f.dx(f.m)) + 3 * b * f.dhalf2(f.p)
    return {"total": total, "dissipative": dissipative, "remainder_FG": total - dissipative}


# --------------------------------------------------------------------------
# Trajectory-level checks
# --------------------------------------------------------------------------

def _masses(traj: Trajectory) -> np.ndarray:
    return sp.TWO_PI * np.sum(np.abs(traj.coeffs) ** 2, axis=1)


def mass_identity_residual(traj: Trajectory) -> np.ndarray:
    """mass(u(t_k)) - mass(phi) - beta * int_0^{t_k} ||D^{1/2}|u|^2||^2."""
    ms = _masses(traj)
    return ms - ms[0] - traj.params.beta * traj.dissipation_accum


def _normalized(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(1.0, abs(rhs))


def identity_residual(traj: Trajectory, which: str, t: float, h: float | None = None) -> float:
    """|FD d/dt of the functional - closed-form RHS| / max(1, |RHS|)."""
    if which not in IDENTITY_NAMES:
        raise ValueError(f"unknown identity {which!r}")
    states, h_used = traj.stencil(t, h)
    vals = [identity_functionals(s)[which] for s in states]
    lhs = five_point_derivative(vals, h_used)
    return _normalized(lhs, identity_rhs(states[2], traj.params)[which])


def identity_residuals_all(traj: Trajectory, t: float, h: float | None = None) -> dict[str, float]:
    states, h_used = traj.stencil(t, h)
    vals = [identity_functionals(s) for s in states]
    rhs = identity_rhs(states[2], traj.params)
    return {k: _normalized(five_point_derivative([v[k] for v in vals], h_used), rhs[k])
            for k in IDENTITY_NAMES}


def energy_derivative_check(traj: Trajectory, t: float, h: float | None = None) -> tuple[float, float]:
    """(finite-difference dE/dt, six-identity assembly) at time ``t``."""
    states, h_used = traj.stencil(t, h)
    es = [energy_functional(s, traj.params) for s in states]
    return five_point_derivative(es, h_used), energy_derivative_parts(states[2], traj.params)["total"]


def lower_bound_probe(traj: Trajectory) -> tuple[float, bool]:
    """Smallest C with mass(t) >= mass(0) exp(-C sqrt(t)) over the run."""
    ms = _masses(traj)
    t = traj.times
    if np.any(ms <= 0):
        return math.inf, False
    ratios = -np.log(ms[1:] / ms[0]) / np.sqrt(t[1:])
    c = float(max(0.0, np.max(ratios))) if len(ratios) else 0.0
    return c, bool(np.isfinite(c))


def convergence_rate(errors, params, floor: float = 1e-13) -> float:
    """Least-squares slope of log(error) against log(param)."""
    e = np.asarray(errors, dtype=float)
    q = np.asarray(params, dtype=float)
    if e.shape != q.shape or len(e) < 2:
        raise ValueError("need matching arrays of at least two (param, error) pairs")
    if np.any(np.diff(q) >= 0):
        raise ValueError("params must be strictly decreasing")
    if np.any(e <= 0) or np.max(e) < floor:
        raise DegenerateFit("errors are at the round-off floor")
    slope, _ = np.polyfit(np.log(q), np.log(e), 1)
    return float(slope)


# --------------------------------------------------------------------------
# Records and output
# --------------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    mass_identity_residual: float
    energy_E: float
    h1_norm: float
    hs_norm: float
    dissipation_rate: float
    identity_residuals: dict[str, float] = field(default_factory=dict)


CSV_COLUMNS = (["t", "mass", "mass_identity_residual", "energy_E", "dissipation_rate"]
               + [f"res_{k}" for k in IDENTITY_NAMES] + ["h1", "hs"])


def diagnostics_table(traj: Trajectory, with_identities: bool = True) -> list[DiagnosticsRecord]:
    """One record per snapshot; identity residuals are NaN where the stencil does not fit."""
    p = traj.params
    s = traj.config.norm_s
    res = mass_identity_residual(traj)
    h = traj.config.stencil_h
    records = []
    # Functionals are computed once per snapshot and differenced in place.
    lhs_vals = [identity_functionals(traj.state(k)) for k in range(len(traj))] if with_identities else None
    step = int(round(h / traj.spacing)) if with_identities else 0
    for k in range(len(traj)):
        u = traj.state(k)
        rec = DiagnosticsRecord(
            t=float(traj.times[k]), mass=mass(u), mass_identity_residual=float(res[k]),
            energy_E=energy_functional(u, p), h1_norm=sp.sobolev_norm(u, 1.0),
            hs_norm=sp.sobolev_norm(u, s), dissipation_rate=dissipation_rate(u))
        if with_identities:
            if step >= 1 and k - 2 * step >= 0 and k + 2 * step < len(traj):
                rhs = identity_rhs(u, p)
                idx = [k + j * step for j in (-2, -1, 0, 1, 2)]
                for name in IDENTITY_NAMES:
                    d = five_point_derivative([lhs_vals[i][name] for i in idx], step * traj.spacing)
                    rec.identity_residuals[name] = _normalized(d, rhs[name])
            else:
                rec.identity_residuals = {name: math.nan for name in IDENTITY_NAMES}
        records.append(rec)
    return records


def write_diagnostics_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            row = [r.t, r.mass, r.mass_identity_residual, r.energy_E, r.dissipation_rate]
            row += [r.identity_residuals.get(k, math.nan) for k in IDENTITY_NAMES]
            row += [r.h1_norm, r.hs_norm]
            w.writerow([f"{x:.17g}" for x in row])


PLOT_TEMPLATE = '''\
"""Plot mass, energy and identity residuals from diagnostics CSV files."""
import csv

import matplotlib.pyplot as plt

PATHS = {paths!r}


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}}


def main():
    fig, axes = plt.subplots(3, 1, figsize=(7, 9), sharex=True)
    for label, path in PATHS.items():
        d = load(path)
        axes[0].plot(d["t"], d["mass"], label=label)
        axes[1].plot(d["t"], d["energy_E"], label=label)
        for name in {names!r}:
            axes[2].semilogy(d["t"], [abs(x) + 1e-300 for x in d["res_" + name]], label=f"{{label}}:{{name}}")
    axes[0].set_ylabel("mass")
    axes[1].set_ylabel("E[u]")
    axes[2].set_ylabel("identity residual")
    axes[2].set_xlabel("t")
    axes[0].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig({output!r})


if __name__ == "__main__":
    main()
'''


def emit_plot_script(diagnostics_paths: dict, script_path, output: str = "diagnostics.png") -> str:
    """Write a standalone matplotlib script with the data paths inlined."""
    text = PLOT_TEMPLATE.format(paths={k: str(v) for k, v in diagnostics_paths.items()},
                                names=IDENTITY_NAMES, output=output)
    with open(script_path, "w") as fh:
        fh.write(text)
    return text
