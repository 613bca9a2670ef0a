"""Lawson (integrating-factor) RK4 time stepping with exact linear propagation.

The linear part i u_xx - mu D_x u + eps u_xx (plus the constant transport of
the renormalized equation) is applied exactly through its Fourier symbol; RK4
acts on the remaining nonlinearity in the interaction picture.  ``evolve``
co-integrates int_0^t ||D_x^{1/2}(|u|^2)||^2 dt' with composite Simpson over
per-step samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .dynamics import (EquationParams, RhsKind, dissipation_rate_coeffs,
                       linear_symbol, nonlinearity_coeffs)
from .errors import (BackwardDissipativeStep, CutoffExceedsGrid,
                     InsufficientStencil, NumericalBlowup)
from .spectral import Field, GridSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropagatorSpec:
    """U(t) with symbol exp(-i t n^2 - t mu |n| - t eps n^2)."""

    t: float
    mu: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.mu < 0 or self.epsilon < 0:
            raise ValueError("mu and epsilon must be >= 0")


def propagate_linear(u: Field, spec: PropagatorSpec) -> Field:
    if spec.t < 0 and (spec.mu > 0 or spec.epsilon > 0):
        raise BackwardDissipativeStep(f"t = {spec.t} < 0 with a dissipative symbol")
    m = sp.MultiplierKind.propagator(spec.t, spec.mu, spec.epsilon)
    return sp.apply_multiplier(u, m)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_final: float
    scheme: str = "lawson_rk4"
    snapshot_stride: int = 1
    residual_stencil_h: float | None = None
    norm_s: float = 2.0

    def __post_init__(self):
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be positive")
        if self.scheme != "lawson_rk4":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if int(self.snapshot_stride) < 1:
            raise ValueError("snapshot_stride must be >= 1")
        ratio = self.t_final / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"t_final/dt = {ratio} is not an integer")
        if self.residual_stencil_h is not None and self.residual_stencil_h < self.dt * (1 - 1e-12):
            raise ValueError("residual_stencil_h must be >= dt")

    @property
    def num_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def stencil_h(self) -> float:
        return self.residual_stencil_h or self.dt * self.snapshot_stride


class LawsonRK4:
    """Stepper for u_t = L u + R(u) with L diagonal in Fourier space.

    R(u) is the nonlinearity plus mu D_x u, since the propagator already
    contains -mu D_x.
    """

    def __init__(self, grid: GridSpec, p: EquationParams, kind: RhsKind | str, dt: float):
        self.grid = grid
        self.p = p
        self.kind = RhsKind(kind)
        self.dt = float(dt)
        if self.kind is RhsKind.REGULARIZED and p.epsilon <= 0:
            from .errors import RegularizedWithoutEpsilon
            raise RegularizedWithoutEpsilon("regularized run needs epsilon > 0")
        self.L = linear_symbol(grid, p, self.kind) - p.mu * np.abs(grid.wavenumbers)
        self.E_half = np.exp(0.5 * self.dt * self.L)
        self.E_full = np.exp(self.dt * self.L)
        self._mu_abs_n = p.mu * np.abs(grid.wavenumbers)

    def remainder(self, c: np.ndarray) -> np.ndarray:
        r = nonlinearity_coeffs(c, self.grid, self.p.alpha, self.p.beta)
        if self.p.mu:
            r = r + self._mu_abs_n * c
        return r

    def step(self, c: np.ndarray) -> np.ndarray:
        dt, Eh, Ef = self.dt, self.E_half, self.E_full
        k1 = self.remainder(c)
        k2 = self.remainder(Eh * (c + 0.5 * dt * k1))
        k3 = self.remainder(Eh * c + 0.5 * dt * k2)
        k4 = self.remainder(Ef * c + dt * Eh * k3)
        return Ef * c + (dt / 6.0) * (Ef * k1 + 2.0 * Eh * (k2 + k3) + k4)


def step(u: Field, p: EquationParams, kind: RhsKind | str, dt: float) -> Field:
    """One Lawson-RK4 step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = LawsonRK4(u.grid, p, kind, dt).step(u.coeffs)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowup("non-finite coefficients", last_good=u)
    return Field(u.grid, out)


@dataclass
class Trajectory:
    """Snapshots of a run plus the co-integrated dissipation integral."""

    grid: GridSpec
    times: np.ndarray
    coeffs: np.ndarray  # (num_snapshots, N)
    dissipation_accum: np.ndarray
    params: EquationParams
    config: SolverConfig
    kind: RhsKind
    blowup: bool = False
    phi: Field | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    @property
    def spacing(self) -> float:
        return self.config.dt * self.config.snapshot_stride

    def state(self, k: int) -> Field:
        return Field(self.grid, self.coeffs[k])

    @property
    def states(self) -> list[Field]:
        return [self.state(k) for k in range(len(self))]

    def index_of(self, t: float) -> int:
        k = int(round(t / self.spacing))
        if not 0 <= k < len(self) or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t = {t}")
        return k

    def stencil(self, t: float, h: float | None = None) -> tuple[list[Field], float]:
        """States at t-2h, t-h, t, t+h, t+2h and the actual h used."""
        h = self.config.stencil_h if h is None else h
        step = h / self.spacing
        if step < 1 - 1e-9 or abs(step - round(step)) > 1e-6:
            raise InsufficientStencil(f"h = {h} is not a multiple of the snapshot spacing {self.spacing}")
        step = int(round(step))
        try:
            k = self.index_of(t)
        except KeyError as exc:
            raise InsufficientStencil(str(exc)) from None
        if k - 2 * step < 0 or k + 2 * step >= len(self):
            raise InsufficientStencil(f"5-point stencil at t = {t} with h = {h} leaves the trajectory")
        return [self.state(k + j * step) for j in (-2, -1, 0, 1, 2)], step * self.spacing


def five_point_derivative(f, h: float):
    """Centered O(h^4) derivative from samples at -2h, -h, (0), h, 2h."""
    fm2, fm1, _, fp1, fp2 = f
    return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)


def evolve(phi: Field, p: EquationParams, kind: RhsKind | str, cfg: SolverConfig) -> Trajectory:
    """Fixed-step march from ``phi``; on blow-up the truncated trajectory is flagged."""
    kind = RhsKind(kind)
    grid = phi.grid
    stepper = LawsonRK4(grid, p, kind, cfg.dt)
    stride = int(cfg.snapshot_stride)
    nsteps = cfg.num_steps
    dt = cfg.dt

    c = phi.coeffs.copy()
    times, snaps, accums = [0.0], [c.copy()], [0.0]
    # qs holds the integrand at steps k-3..k; simpson_even / simpson_prev are the
    # Simpson integrals up to the last two even step indices.
    qs = [None, None, dissipation_rate_coeffs(c, grid)]
    simpson_even = simpson_prev = 0.0
    blowup = False
    for k in range(1, nsteps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            c_new = stepper.step(c)
        if not np.all(np.isfinite(c_new)) or np.max(np.abs(c_new)) > 1e150:
            log.warning("numerical blow-up at step %d (t = %.6g)", k, k * dt)
            blowup = True
            break
        c = c_new
        qs = qs[-3:] + [dissipation_rate_coeffs(c, grid)]
        q3, q2, q1, q = qs
        if k % 2 == 0:
            simpson_prev = simpson_even
            simpson_even += dt / 3.0 * (q2 + 4.0 * q1 + q)
            acc = simpson_even
            if k == 2 and stride == 1:
                # Revisit the first snapshot with a one-sided rule of the same order.
                accums[1] = dt / 12.0 * (5.0 * q2 + 8.0 * q1 - q)
        elif k == 1:
            acc = 0.5 * dt * (q1 + q)
        else:
            # Odd count: Simpson up to k-3, then the 3/8 rule keeps O(dt^4).
            acc = simpson_prev + 3.0 * dt / 8.0 * (q3 + 3.0 * q2 + 3.0 * q1 + q)
        if k % stride == 0:
            times.append(k * dt)
            snaps.append(c.copy())
            accums.append(acc)
    return Trajectory(grid=grid, times=np.array(times), coeffs=np.array(snaps),
                      dissipation_accum=np.array(accums), params=p, config=cfg,
                      kind=kind, blowup=blowup, phi=phi)


def mollify_initial(phi: Field, eps: float, lam: float) -> Field:
    """Sharp truncation P_{<= floor(eps^-lam)} phi."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < lam < 0.5:
        raise ValueError("lambda must lie in (0, 1/2)")
    k = eps ** (-lam)
    if k >= phi.grid.N / 2:
        raise CutoffExceedsGrid(f"cutoff {k:.4g} >= N/2 = {phi.grid.N // 2}; increase N")
    return sp.apply_multiplier(phi, sp.MultiplierKind.proj_leq(math.floor(k)))


def mollify_cutoff(eps: float, lam: float) -> int:
    return math.floor(eps ** (-lam))
