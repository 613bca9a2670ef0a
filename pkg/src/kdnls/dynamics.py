"""Right-hand sides of the KDNLS family and the resonant splitting of the cubic term.

The equation is

    u_t - i u_xx = alpha (|u|^2 u)_x + beta (H(|u|^2) u)_x

with a renormalized variant (transport term -2 alpha P0(|phi|^2) u_x with
the constant frozen from the initial datum) and a parabolically regularized
variant (extra eps u_xx).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import spectral as sp
from .errors import GridMismatch, RegularizedWithoutEpsilon
from .spectral import Field

RESOLUTION_TAIL = 1e-6


class ResolutionWarning(RuntimeWarning):
    pass


class RhsKind(str, enum.Enum):
    ORIGINAL = "original"
    RENORMALIZED = "renormalized"
    REGULARIZED = "regularized"


@dataclass(frozen=True)
class EquationParams:
    """Coefficients of the equation.

    ``renorm_c0`` and ``mu`` are frozen from the initial datum by
    :meth:`for_datum` and never updated during a run.  ``p0_phi`` keeps
    P0(|phi|^2) itself, which the gauge equation needs even when alpha = 0.
    """

    alpha: float
    beta: float
    epsilon: float = 0.0
    renorm_c0: float = 0.0
    mu: float = 0.0
    p0_phi: float = 0.0

    def __post_init__(self):
        if self.beta > 0:
            raise ValueError(f"beta must be <= 0, got {self.beta}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")

    @classmethod
    def for_datum(cls, phi: Field, alpha: float, beta: float, epsilon: float = 0.0,
                  drift: bool = False) -> "EquationParams":
        p0 = mean_abs2(phi)
        return cls(alpha=float(alpha), beta=float(beta), epsilon=float(epsilon),
                   renorm_c0=2.0 * alpha * p0,
                   mu=abs(beta) * p0 if drift else 0.0,
                   p0_phi=p0)

    def with_(self, **kw) -> "EquationParams":
        return replace(self, **kw)


def mean_abs2(u: Field) -> float:
    """P0(|u|^2), exact by Parseval."""
    return float(np.sum(np.abs(u.coeffs) ** 2))


# --------------------------------------------------------------------------
# Array kernels (hot path of the integrator)
# --------------------------------------------------------------------------

def nonlinearity_coeffs(c: np.ndarray, grid: sp.GridSpec, alpha: float, beta: float) -> np.ndarray:
    """Coefficients of alpha (|u|^2 u)_x + beta (H(|u|^2) u)_x."""
    N = grid.N
    uv = sp.to_padded_values(c)
    m = sp.from_padded_values(np.abs(uv) ** 2, N)
    w = alpha * m + beta * (m * sp.symbol(sp.HILBERT, grid))
    prod = sp.from_padded_values(sp.to_padded_values(w) * uv, N)
    return (1j * grid.wavenumbers) * prod


def abs2_coeffs(c: np.ndarray, N: int) -> np.ndarray:
    uv = sp.to_padded_values(c)
    return sp.from_padded_values(np.abs(uv) ** 2, N)


def dissipation_rate_coeffs(c: np.ndarray, grid: sp.GridSpec) -> float:
    """||D_x^{1/2}(|u|^2)||_{L2}^2 = 2pi sum |n| |m_hat(n)|^2."""
    m = abs2_coeffs(c, grid.N)
    return float(sp.TWO_PI * np.sum(np.abs(grid.wavenumbers) * np.abs(m) ** 2))


def linear_symbol(grid: sp.GridSpec, p: EquationParams, kind: RhsKind) -> np.ndarray:
    """Symbol of the linear part of ``rhs`` (dispersion, regularization, transport)."""
    n = grid.wavenumbers
    s = -1j * n**2
    kind = RhsKind(kind)
    if kind is RhsKind.RENORMALIZED:
        s = s - 1j * p.renorm_c0 * n
    elif kind is RhsKind.REGULARIZED:
        s = s - p.epsilon * n**2
    return s


# --------------------------------------------------------------------------
# Field-level API
# --------------------------------------------------------------------------

def check_resolved(u: Field, threshold: float = RESOLUTION_TAIL) -> float:
    """Warn if the H^1 tail beyond N/3 exceeds ``threshold``; returns the tail fraction."""
    frac = sp.tail_fraction(u)
    if frac > threshold:
        warnings.warn(f"field under-resolved: H1 tail fraction {frac:.2e}",
                      ResolutionWarning, stacklevel=3)
    return frac


def nonlinearity(u: Field, p: EquationParams) -> Field:
    """alpha d_x[|u|^2 u] + beta d_x[H(|u|^2) u]."""
    check_resolved(u)
    return Field(u.grid, nonlinearity_coeffs(u.coeffs, u.grid, p.alpha, p.beta))


def rhs(u: Field, p: EquationParams, kind: RhsKind | str) -> Field:
    kind = RhsKind(kind)
    if kind is RhsKind.REGULARIZED and p.epsilon <= 0:
        raise RegularizedWithoutEpsilon("regularized right-hand side needs epsilon > 0")
    out = nonlinearity(u, p).coeffs + linear_symbol(u.grid, p, kind) * u.coeffs
    return Field(u.grid, out)


def _sgn_sum(g: np.ndarray, grid: sp.GridSpec) -> np.ndarray:
    """S(n) = sum_{n'} sgn(n - n') g(n') for every mode n, in FFT order."""
    gs = np.fft.fftshift(g)
    cs = np.cumsum(gs)
    total = cs[-1]
    below = np.concatenate([[0.0], cs[:-1]])
    above = total - cs
    return np.fft.ifftshift(below - above)


def trilinear(u1: Field, u2: Field, u3: Field, p: EquationParams) -> Field:
    """Coefficients sum_{n1-n2+n3=n} in[alpha - i beta sgn(n1-n2)] u1 conj(u2) u3."""
    grid = u1.grid
    g = sp.product_coeffs(u1.coeffs, u2.conj().coeffs)
    w = p.alpha * g + p.beta * g * sp.symbol(sp.HILBERT, grid)
    return Field(grid, 1j * grid.wavenumbers * sp.product_coeffs(w, u3.coeffs))


def resonant_parts(u1: Field, u2: Field, u3: Field, w: Field,
                   p: EquationParams) -> tuple[Field, Field]:
    """Return (N0[u1, u2; w], Nu[u1, u2, u3]).

    N0 = [P0|u1|^2 - P0|u2|^2] (2 alpha w_x + beta D_x w).  Nu collects the
    diagonal sgn-difference sum, the cubic diagonal term and the
    off-diagonal convolution over n2 not in {n1, n3}.  With coefficients
    normalized as in :mod:`kdnls.spectral`, convolution sums carry no 2pi
    prefactor.
    """
    grid = u1.grid
    for f in (u2, u3, w):
        if f.grid != grid:
            raise GridMismatch(f"N={grid.N} vs N={f.grid.N}")
    a, b = p.alpha, p.beta
    n = grid.wavenumbers
    sgn = np.sign(n)
    c1, c2, c3 = u1.coeffs, u2.coeffs, u3.coeffs

    dp0 = mean_abs2(u1) - mean_abs2(u2)
    n0 = Field(grid, dp0 * (2 * a * 1j * n + b * np.abs(n)) * w.coeffs)

    g12 = c1 * np.conj(c2)
    g23 = np.conj(c2) * c3
    s12 = np.sum(g12)
    diag_beta = b * (_sgn_sum(g12, grid) - sgn * s12) * n * c3
    diag_alpha = -a * 1j * n * c1 * np.conj(c2) * c3

    full = trilinear(u1, u2, u3, p).coeffs
    d_n2_eq_n1 = 1j * n * a * s12 * c3
    d_n2_eq_n3 = 1j * n * c1 * (a * np.sum(g23) - 1j * b * _sgn_sum(g23, grid))
    d_all = 1j * n * a * c1 * np.conj(c2) * c3
    off = full - d_n2_eq_n1 - d_n2_eq_n3 + d_all

    return n0, Field(grid, diag_beta + diag_alpha + off)
