"""Slow, independent evaluations used as test oracles and by ``kdnls verify``.

Nothing here goes through the padded product chain of :mod:`kdnls.spectral`:
convolutions are explicit mode sums, and composite expressions are formed
pointwise on a strongly refined grid where every intermediate product of
band-limited inputs is represented exactly.
"""

from __future__ import annotations

import numpy as np

from .dynamics import EquationParams
from .spectral import Field, GridSpec

# --------------------------------------------------------------------------
# Direct mode sums
# --------------------------------------------------------------------------


def _modes(grid: GridSpec) -> np.ndarray:
    return grid.wavenumbers.astype(int)


def direct_product(a: Field, b: Field) -> Field:
    """Truncated convolution sum_{n1+n2=n} a(n1) b(n2), O(N^2)."""
    grid = a.grid
    n = _modes(grid)
    lo, hi = -grid.N // 2, grid.N // 2 - 1
    out = np.zeros(grid.N, dtype=complex)
    for i, n1 in enumerate(n):
        for j, n2 in enumerate(n):
            k = n1 + n2
            if lo <= k <= hi:
                out[grid.index(k)] += a.coeffs[i] * b.coeffs[j]
    return Field(grid, out)


def direct_trilinear(u1: Field, u2: Field, u3: Field, p: EquationParams,
                     exclude_diagonal: bool = False) -> Field:
    """sum_{n1-n2+n3=n} in[alpha - i beta sgn(n1-n2)] u1(n1) conj(u2(n2)) u3(n3), O(N^3).

    With ``exclude_diagonal`` the terms with n2 in {n1, n3} are dropped.
    """
    grid = u1.grid
    n = _modes(grid)
    lo, hi = -grid.N // 2, grid.N // 2 - 1
    c1, c2, c3 = u1.coeffs, np.conj(u2.coeffs), u3.coeffs
    out = np.zeros(grid.N, dtype=complex)
    for i, n1 in enumerate(n):
        if c1[i] == 0:
            continue
        for j, n2 in enumerate(n):
            if c2[j] == 0:
                continue
            for k, n3 in enumerate(n):
                if c3[k] == 0:
                    continue
                if exclude_diagonal and (n2 == n1 or n2 == n3):
                    continue
                m = n1 - n2 + n3
                if lo <= m <= hi:
                    w = 1j * m * (p.alpha - 1j * p.beta * np.sign(n1 - n2))
                    out[grid.index(m)] += w * c1[i] * c2[j] * c3[k]
    return Field(grid, out)


def direct_resonant_parts(u1: Field, u2: Field, u3: Field, w: Field,
                          p: EquationParams) -> tuple[Field, Field]:
    """(N0, Nu) by explicit loops over the defining sums."""
    grid = u1.grid
    n = _modes(grid)
    c1, c2, c3 = u1.coeffs, u2.coeffs, u3.coeffs
    dp0 = np.sum(np.abs(c1) ** 2) - np.sum(np.abs(c2) ** 2)
    n0 = dp0 * (2 * p.alpha * 1j * n + p.beta * np.abs(n)) * w.coeffs
    diag = np.zeros(grid.N, dtype=complex)
    for i, k in enumerate(n):
        s = sum((np.sign(k - kp) - np.sign(k)) * c1[j] * np.conj(c2[j]) for j, kp in enumerate(n))
        diag[i] = p.beta * s * k * c3[i] - p.alpha * 1j * k * c1[i] * np.conj(c2[i]) * c3[i]
    off = direct_trilinear(u1, u2, u3, p, exclude_diagonal=True).coeffs
    return Field(grid, n0), Field(grid, diag + off)


def direct_abs2_modes(u: Field) -> np.ndarray:
    """Coefficients of |u|^2 for every difference frequency k in [-N/2, N/2), O(N^2)."""
    grid = u.grid
    n = _modes(grid)
    c = u.coeffs
    out = np.zeros(grid.N, dtype=complex)
    for i, n1 in enumerate(n):
        for j, n2 in enumerate(n):
            k = n1 - n2
            if -grid.N // 2 <= k < grid.N // 2:
                out[grid.index(k)] += c[i] * np.conj(c[j])
    return out


def direct_gauge_phase(u: Field, p: EquationParams, sign: int) -> Field:
    """rho_pm by mode sums: (1/(ik)) (-i alpha [k != 0] -+ beta [sign*k > 0]) m(k)."""
    grid = u.grid
    m = direct_abs2_modes(u)
    out = np.zeros(grid.N, dtype=complex)
    for i, k in enumerate(_modes(grid)):
        if k == 0:
            continue
        w = -1j * p.alpha - sign * p.beta * (1.0 if sign * k > 0 else 0.0)
        out[i] = w * m[i] / (1j * k)
    return Field(grid, out)


# --------------------------------------------------------------------------
# Refined-grid pointwise evaluation
# --------------------------------------------------------------------------


class FineEval:
    """Pointwise calculus on M = factor * N points with exact spectral multipliers.

    Inputs of bandwidth N/2 are interpolated without truncation, so products
    stay exact while the total bandwidth is below M/2.
    """

    def __init__(self, grid: GridSpec, factor: int = 8):
        self.grid = grid
        self.M = factor * grid.N
        self.k = np.fft.fftfreq(self.M, 1.0 / self.M)

    def lift(self, u: Field) -> np.ndarray:
        c = np.zeros(self.M, dtype=complex)
        for i, n in enumerate(_modes(self.grid)):
            c[int(n) % self.M] = u.coeffs[i]
        return np.fft.ifft(c) * self.M

    def project(self, f: np.ndarray) -> Field:
        c = np.fft.fft(f) / self.M
        out = np.array([c[int(n) % self.M] for n in _modes(self.grid)])
        return Field(self.grid, out)

    def mult(self, f, symbol):
        return np.fft.ifft(symbol * np.fft.fft(f))

    def dx(self, f):
        return self.mult(f, 1j * self.k)

    def H(self, f):
        return self.mult(f, -1j * np.sign(self.k))

    def D(self, f):
        return self.mult(f, np.abs(self.k))

    def P(self, f, s: int):
        return self.mult(f, (s * self.k > 0).astype(float))

    def P0(self, f):
        return np.mean(f)

    def Pnz(self, f):
        return f - np.mean(f)

    def inv_dx(self, f):
        sym = np.zeros(self.M, dtype=complex)
        nz = self.k != 0
        sym[nz] = 1.0 / (1j * self.k[nz])
        return self.mult(f, sym)

    def Pab(self, f, p: EquationParams, s: int):
        return -1j * p.alpha * self.Pnz(f) - s * p.beta * self.P(f, s)

    def comm_P(self, s, f, g):
        return self.P(f * g, s) - f * self.P(g, s)


def monolithic_nv(u: Field, p: EquationParams, sign: int, factor: int = 8) -> Field:
    """N_v^pm from the unsimplified form of the v_pm equation.

    Uses the remainders R1..R4 and the P0 bookkeeping before the five groups
    are collected, so it shares no algebra with :func:`kdnls.gauge.nv_nonlinearity`.
    """
    s = 1 if sign in (1, "+") else -1
    F = FineEval(u.grid, factor)
    a, b = p.alpha, p.beta
    uu = F.lift(u)
    ub = np.conj(uu)
    ux = F.dx(uu)
    ubx = np.conj(ux)
    m = (uu * ub).real
    hm = F.H(m).real
    p0m = float(np.mean(m))
    p0phi = p.p0_phi
    pu = F.P(uu, s)
    rho = F.inv_dx(F.Pab(m, p, s))
    e = np.exp(rho)
    v = e * pu

    r1 = F.P(uu * uu * ubx, s) + 2 * F.comm_P(s, m, ux)
    r2 = (F.P(F.H(uu * ubx) * uu, s)
          + F.P(uu * (F.H(ub * ux) - ub * F.H(ux)), s)
          + F.comm_P(s, m, F.H(ux))
          + F.comm_P(s, hm, ux))
    r3 = a * r1 + b * r2
    r4 = (-2j * F.Pab(uu * ubx, p, s) * pu
          - b * F.inv_dx(F.Pab(hm * F.dx(m), p, s)) * pu
          + F.Pab(1.5 * a * m * m - 2 * a * p0phi * m + 2 * b * hm * m, p, s) * pu)
    pab_m = F.Pab(m, p, s)
    out = (-s * 2j * b * p0m * F.P(F.dx(v), -s)
           - (2 * a - s * 1j * b) * p0m * pab_m * v
           + 2 * a * p0phi * pab_m * v
           + e * (r3 + r4 - 1j * pab_m**2 * pu))
    return F.project(out)


def fine_nv_groups(u: Field, p: EquationParams, sign: int, factor: int = 8) -> dict[str, Field]:
    """The five collected groups, each evaluated pointwise on the refined grid."""
    s = 1 if sign in (1, "+") else -1
    F = FineEval(u.grid, factor)
    a, b = p.alpha, p.beta
    uu = F.lift(u)
    ub = np.conj(uu)
    ux = F.dx(uu)
    ubx = np.conj(ux)
    m = (uu * ub).real
    hm = F.H(m).real
    p0m = float(np.mean(m))
    pu = F.P(uu, s)
    e = np.exp(F.inv_dx(F.Pab(m, p, s)))
    v = e * pu
    groups = {
        "ubarx": e * (a * F.P(uu * uu * ubx, s) + b * F.P(F.H(uu * ubx) * uu, s)
                      - 2j * F.Pab(uu * ubx, p, s) * pu),
        "u3x": e * (b * F.P(uu * (F.H(ub * ux) - ub * F.H(ux)), s) + 2 * a * F.comm_P(s, m, ux)
                    + b * F.comm_P(s, m, F.H(ux)) + b * F.comm_P(s, hm, ux)),
        "pm": -s * 2j * b * p0m * F.dx(F.P(v, -s)),
        "p_inv": -b * F.inv_dx(F.Pab(hm * F.dx(m), p, s)) * v,
        "quintic": (F.Pab(1.5 * a * m * m - (2 * a - s * 1j * b) * p0m * m + 2 * b * hm * m, p, s)
                    - 1j * F.Pab(m, p, s) ** 2) * v,
    }
    return {k: F.project(val) for k, val in groups.items()}


def fine_nonlinearity(u: Field, p: EquationParams, factor: int = 8) -> Field:
    """alpha (|u|^2 u)_x + beta (H(|u|^2) u)_x on the refined grid."""
    F = FineEval(u.grid, factor)
    uu = F.lift(u)
    m = np.abs(uu) ** 2
    return F.project(F.dx((p.alpha * m + p.beta * F.H(m).real) * uu))
