"""Periodic grid, Fourier multipliers and dealiased products on T = R/2piZ.

Convention: u(x) = sum_n u_hat(n) exp(inx) with
u_hat(n) = (2pi)^-1 int_0^{2pi} u(x) exp(-inx) dx, so the zero mode is the
mean P0 u and the L2 norm is sqrt(2pi sum |u_hat(n)|^2).

Coefficient arrays are stored in numpy FFT order (0, 1, ..., N/2-1, -N/2,
..., -1).  The array-level helpers (``pad``, ``truncate``, ``product_coeffs``,
``symbol``) are what the time stepper uses; :class:`Field` wraps them for
everything else.
"""

from __future__ import annotations

import contextlib
import csv
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .errors import AntiderivativeOfNonMeanZero, GridMismatch, InvalidCutoff

TWO_PI = 2.0 * np.pi
ABS_FLOOR = 1e-14

# Mutation switches, only flipped by ``debug_mutations`` (used by ``kdnls verify``).
_FLAGS = {"dealias": True, "hilbert_sign": 1.0}


@contextlib.contextmanager
def debug_mutations(*, dealias=True, flip_hilbert=False):
    """Temporarily disable dealiasing or flip the Hilbert symbol's sign."""
    old = dict(_FLAGS)
    _FLAGS["dealias"] = dealias
    _FLAGS["hilbert_sign"] = -1.0 if flip_hilbert else 1.0
    _symbol_cached.cache_clear()
    try:
        yield
    finally:
        _FLAGS.update(old)
        _symbol_cached.cache_clear()


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``num_modes`` points on [0, 2pi)."""

    num_modes: int
    domain_length: float = TWO_PI

    def __post_init__(self):
        n = self.num_modes
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"num_modes must be a power of two >= 8, got {n!r}")
        if self.domain_length != TWO_PI:
            raise ValueError("only the 2pi-periodic domain is supported")

    @property
    def N(self) -> int:
        return int(self.num_modes)

    @property
    def padded_size(self) -> int:
        return 3 * self.N // 2

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer mode numbers in FFT order, as floats."""
        return np.fft.fftfreq(self.N, 1.0 / self.N)

    @cached_property
    def x(self) -> np.ndarray:
        return TWO_PI * np.arange(self.N) / self.N

    def index(self, n: int) -> int:
        """Position of mode ``n`` in an FFT-ordered coefficient array."""
        half = self.N // 2
        if not -half <= n < half:
            raise IndexError(f"mode {n} outside [-{half}, {half - 1}]")
        return n % self.N


class Field:
    """Complex 2pi-periodic function stored by its Fourier coefficients.

    Instances are immutable: the coefficient array is read-only and the
    physical samples are computed lazily and cached.
    """

    __slots__ = ("grid", "_coeffs", "_values")

    def __init__(self, grid: GridSpec, coeffs, *, _values=None):
        c = np.array(coeffs, dtype=complex)
        if c.shape != (grid.N,):
            raise ValueError(f"expected {grid.N} coefficients, got shape {c.shape}")
        c.flags.writeable = False
        self.grid = grid
        self._coeffs = c
        if _values is not None:
            _values = np.array(_values, dtype=complex)
            _values.flags.writeable = False
        self._values = _values

    @classmethod
    def from_values(cls, grid: GridSpec, values) -> "Field":
        v = np.asarray(values, dtype=complex)
        return cls(grid, np.fft.fft(v) / grid.N, _values=v)

    @classmethod
    def from_modes(cls, grid: GridSpec, modes: dict) -> "Field":
        c = np.zeros(grid.N, dtype=complex)
        for n, a in modes.items():
            c[grid.index(int(n))] += a
        return cls(grid, c)

    @classmethod
    def constant(cls, grid: GridSpec, value) -> "Field":
        return cls.from_modes(grid, {0: value})

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.N, dtype=complex))

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = np.fft.ifft(self._coeffs) * self.grid.N
            v.flags.writeable = False
            self._values = v
        return self._values

    @property
    def repr_tag(self) -> str:
        return "spectral" if self._values is None else "both-synced"

    def mode(self, n: int) -> complex:
        return complex(self._coeffs[self.grid.index(n)])

    @property
    def mean(self) -> complex:
        return complex(self._coeffs[0])

    def conj(self) -> "Field":
        return Field.from_values(self.grid, np.conj(self.values))

    def real_part(self) -> "Field":
        return Field.from_values(self.grid, self.values.real)

    def imag_part(self) -> "Field":
        return Field.from_values(self.grid, self.values.imag)

    def max_abs_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag)))

    def _check(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        if other.grid != self.grid:
            raise GridMismatch(f"N={self.grid.N} vs N={other.grid.N}")
        return other

    def __add__(self, other):
        if np.isscalar(other):
            return self + Field.constant(self.grid, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Field(self.grid, self._coeffs + other._coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return self - Field.constant(self.grid, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Field(self.grid, self._coeffs - other._coeffs)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Field(self.grid, -self._coeffs)

    def __mul__(self, other):
        # Field * Field is deliberately unsupported: use dealiased_product.
        if np.isscalar(other):
            return Field(self.grid, self._coeffs * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return Field(self.grid, self._coeffs / other)
        return NotImplemented

    def __repr__(self):
        return f"Field(N={self.grid.N}, l2={sobolev_norm(self, 0.0):.6g})"


# --------------------------------------------------------------------------
# Multipliers
# --------------------------------------------------------------------------

_KINDS = {
    "derivative", "fractional", "hilbert", "proj_plus", "proj_minus",
    "proj_zero", "proj_nonzero", "proj_leq", "proj_gt", "antiderivative",
    "propagator",
}


@dataclass(frozen=True)
class MultiplierKind:
    """A Fourier multiplier, identified by ``tag`` plus its parameters."""

    tag: str
    order: int = 0
    sigma: float = 0.0
    cutoff: float = 0.0
    t: float = 0.0
    mu: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.tag not in _KINDS:
            raise ValueError(f"unknown multiplier {self.tag!r}")
        if self.tag == "fractional" and self.sigma < 0:
            raise ValueError("fractional order must be >= 0")
        if self.tag in ("proj_leq", "proj_gt") and self.cutoff < 0:
            raise InvalidCutoff(f"cutoff {self.cutoff} < 0")

    @classmethod
    def derivative(cls, k: int = 1):
        return cls("derivative", order=int(k))

    @classmethod
    def fractional(cls, sigma: float):
        return cls("fractional", sigma=float(sigma))

    @classmethod
    def hilbert(cls):
        return cls("hilbert")

    @classmethod
    def proj_leq(cls, cutoff: float):
        return cls("proj_leq", cutoff=float(cutoff))

    @classmethod
    def proj_gt(cls, cutoff: float):
        return cls("proj_gt", cutoff=float(cutoff))

    @classmethod
    def propagator(cls, t: float, mu: float = 0.0, epsilon: float = 0.0):
        return cls("propagator", t=float(t), mu=float(mu), epsilon=float(epsilon))


DX = MultiplierKind.derivative(1)
DXX = MultiplierKind.derivative(2)
ABS_DX = MultiplierKind.fractional(1.0)
HALF_DX = MultiplierKind.fractional(0.5)
HILBERT = MultiplierKind.hilbert()
P_PLUS = MultiplierKind("proj_plus")
P_MINUS = MultiplierKind("proj_minus")
P_ZERO = MultiplierKind("proj_zero")
P_NONZERO = MultiplierKind("proj_nonzero")
ANTIDERIVATIVE = MultiplierKind("antiderivative")


@lru_cache(maxsize=256)
def _symbol_cached(m: MultiplierKind, N: int) -> np.ndarray:
    n = np.fft.fftfreq(N, 1.0 / N)
    tag = m.tag
    if tag == "derivative":
        s = (1j * n) ** m.order
    elif tag == "fractional":
        s = np.abs(n) ** m.sigma + 0j
    elif tag == "hilbert":
        s = _FLAGS["hilbert_sign"] * (-1j) * np.sign(n)
    elif tag == "proj_plus":
        s = (n > 0) + 0j
    elif tag == "proj_minus":
        s = (n < 0) + 0j
    elif tag == "proj_zero":
        s = (n == 0) + 0j
    elif tag == "proj_nonzero":
        s = (n != 0) + 0j
    elif tag == "proj_leq":
        s = (np.abs(n) <= m.cutoff) + 0j
    elif tag == "proj_gt":
        s = (np.abs(n) > m.cutoff) + 0j
    elif tag == "antiderivative":
        s = np.zeros(N, dtype=complex)
        s[1:] = 1.0 / (1j * n[1:])
    else:  # propagator
        s = np.exp(m.t * (-1j * n**2 - m.mu * np.abs(n) - m.epsilon * n**2))
    s = np.asarray(s, dtype=complex)
    s.flags.writeable = False
    return s


def symbol(m: MultiplierKind, grid: GridSpec) -> np.ndarray:
    """Multiplier symbol on ``grid`` in FFT order (read-only)."""
    return _symbol_cached(m, grid.N)


def apply_multiplier(u: Field, m: MultiplierKind) -> Field:
    """Return the field with coefficients u_hat(n) * symbol(n)."""
    if m.tag == "antiderivative":
        c0 = abs(u.coeffs[0])
        scale = float(np.linalg.norm(u.coeffs))
        if c0 > max(1e-12 * scale, ABS_FLOOR):
            raise AntiderivativeOfNonMeanZero(f"|u_hat(0)| = {c0:.3e}")
    return Field(u.grid, u.coeffs * symbol(m, u.grid))


def dx(u: Field, k: int = 1) -> Field:
    return apply_multiplier(u, MultiplierKind.derivative(k))


def hilbert(u: Field) -> Field:
    return apply_multiplier(u, HILBERT)


def abs_dx(u: Field, sigma: float = 1.0) -> Field:
    return apply_multiplier(u, MultiplierKind.fractional(sigma))


def proj_plus(u: Field) -> Field:
    return apply_multiplier(u, P_PLUS)


def proj_minus(u: Field) -> Field:
    return apply_multiplier(u, P_MINUS)


def proj_nonzero(u: Field) -> Field:
    return apply_multiplier(u, P_NONZERO)


def proj_sign(u: Field, sign: int) -> Field:
    return proj_plus(u) if sign > 0 else proj_minus(u)


def antiderivative(u: Field) -> Field:
    return apply_multiplier(u, ANTIDERIVATIVE)


# --------------------------------------------------------------------------
# Dealiased products
# --------------------------------------------------------------------------

def pad(c: np.ndarray, M: int) -> np.ndarray:
    """Zero-pad FFT-ordered coefficients from len(c) to M modes."""
    N = c.shape[-1]
    h = N // 2
    out = np.zeros(c.shape[:-1] + (M,), dtype=complex)
    out[..., :h] = c[..., :h]
    out[..., M - h:] = c[..., h:]
    return out


def truncate(c: np.ndarray, N: int) -> np.ndarray:
    """Keep modes [-N/2, N/2 - 1] of an FFT-ordered coefficient array."""
    M = c.shape[-1]
    h = N // 2
    return np.concatenate([c[..., :h], c[..., M - h:]], axis=-1)


def to_padded_values(c: np.ndarray) -> np.ndarray:
    """Physical samples on the 3/2-refined grid (or the native grid if dealiasing is off)."""
    N = c.shape[-1]
    if not _FLAGS["dealias"]:
        return np.fft.ifft(c) * N
    M = 3 * N // 2
    return np.fft.ifft(pad(c, M)) * M


def from_padded_values(v: np.ndarray, N: int) -> np.ndarray:
    M = v.shape[-1]
    c = np.fft.fft(v) / M
    return c if M == N else truncate(c, N)


def product_coeffs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dealiased binary product of two coefficient arrays, truncated to N modes."""
    N = a.shape[-1]
    return from_padded_values(to_padded_values(a) * to_padded_values(b), N)


def dealiased_product(factors) -> Field:
    """Pointwise product of 2..5 fields as a chain of 3/2-rule binary products."""
    factors = list(factors)
    if not 2 <= len(factors) <= 5:
        raise ValueError("dealiased_product takes between 2 and 5 factors")
    grid = factors[0].grid
    for f in factors[1:]:
        if f.grid != grid:
            raise GridMismatch(f"N={grid.N} vs N={f.grid.N}")
    c = factors[0].coeffs
    for f in factors[1:]:
        c = product_coeffs(c, f.coeffs)
    return Field(grid, c)


def mul(*factors: Field) -> Field:
    """Shorthand for :func:`dealiased_product`."""
    return dealiased_product(factors)


def abs2(u: Field) -> Field:
    """|u|^2 via a single dealiased product."""
    return dealiased_product([u, u.conj()])


def fine_values(u: Field, factor: int = 2) -> np.ndarray:
    """Samples of the trigonometric interpolant on a grid refined by ``factor``."""
    M = factor * u.grid.N
    return np.fft.ifft(pad(u.coeffs, M)) * M


# --------------------------------------------------------------------------
# Norms
# --------------------------------------------------------------------------

def sobolev_norm(u: Field, s: float) -> float:
    """(2pi sum <n>^{2s} |u_hat(n)|^2)^{1/2}; equals the L2 norm at s = 0."""
    n = u.grid.wavenumbers
    w = (1.0 + n**2) ** s
    return float(np.sqrt(TWO_PI * np.sum(w * np.abs(u.coeffs) ** 2)))


def inner(u: Field, v: Field) -> complex:
    """L2 inner product int u conj(v) dx."""
    return complex(TWO_PI * np.vdot(v.coeffs, u.coeffs))


def tail_fraction(u: Field, frac: float = 1.0 / 3.0) -> float:
    """||P_{>frac N} u||_{H^1} / ||u||_{H^1}; 0 for the zero field."""
    total = sobolev_norm(u, 1.0)
    if total == 0.0:
        return 0.0
    tail = apply_multiplier(u, MultiplierKind.proj_gt(frac * u.grid.N))
    return sobolev_norm(tail, 1.0) / total


# --------------------------------------------------------------------------
# Spectrum snapshot files
# --------------------------------------------------------------------------

CONVENTION = "exp(inx)/2pi"


def write_spectrum(path, u: Field, time: float = 0.0) -> None:
    """Write ``path`` (CSV: n, re, im) and a JSON sidecar next to it."""
    path = Path(path)
    n = np.fft.fftshift(u.grid.wavenumbers).astype(int)
    c = np.fft.fftshift(u.coeffs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re", "im"])
        for k, z in zip(n, c):
            w.writerow([int(k), f"{z.real:.17g}", f"{z.imag:.17g}"])
    meta = {"N": u.grid.N, "convention": CONVENTION, "time": float(time)}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")


def read_spectrum(path, grid: GridSpec | None = None) -> tuple[Field, float]:
    """Read a spectrum CSV; modes outside ``grid`` (if given) must be zero."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    time = 0.0
    N_file = None
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        if meta.get("convention", CONVENTION) != CONVENTION:
            raise ValueError(f"unsupported convention {meta['convention']!r}")
        time = float(meta.get("time", 0.0))
        N_file = int(meta["N"])
    modes = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            modes[int(row["n"])] = complex(float(row["re"]), float(row["im"]))
    if grid is None:
        if N_file is None:
            N_file = 8
            while N_file < 2 * (max(abs(k) for k in modes) + 1):
                N_file *= 2
        grid = GridSpec(N_file)
    h = grid.N // 2
    dropped = [k for k, a in modes.items() if not -h <= k < h and a != 0]
    if dropped:
        raise ValueError(f"modes {sorted(dropped)[:5]}... do not fit on N={grid.N}")
    return Field.from_modes(grid, {k: a for k, a in modes.items() if -h <= k < h}), time
