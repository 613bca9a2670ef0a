"""Named initial data.  Every preset is deterministic given its parameters and seed."""

from __future__ import annotations

import numpy as np

from .spectral import Field, GridSpec, read_spectrum


def plane_wave(grid: GridSpec, n: int = 1, amplitude: complex = 1.0) -> Field:
    return Field.from_modes(grid, {int(n): complex(amplitude)})


def two_mode(grid: GridSpec, modes: dict | None = None) -> Field:
    """Default: e^{ix} + 1/2 e^{2ix}."""
    modes = {1: 1.0, 2: 0.5} if modes is None else modes
    return Field.from_modes(grid, {int(k): complex(v) for k, v in modes.items()})


def _phases(seed: int, size: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.random.default_rng(seed).random(size))


def rough(grid: GridSpec, s: float = 2.0, seed: int = 0, kmax: int | None = None,
          scale: float = 1.0) -> Field:
    """|u_hat(n)| = scale * <n>^{-s-0.51} with seeded phases, supported on |n| <= kmax.

    ``kmax`` defaults to floor(N/3), so the datum itself passes the resolution check.
    """
    kmax = grid.N // 3 if kmax is None else int(kmax)
    n = grid.wavenumbers
    amp = scale * (1.0 + n.astype(float) ** 2) ** (-(s + 0.51) / 2)
    c = np.where(np.abs(n) <= kmax, amp * _phases(seed, grid.N), 0.0)
    return Field(grid, c)


def analytic(grid: GridSpec, r: float = 0.6, seed: int = 0, scale: float = 1.0) -> Field:
    """|u_hat(n)| = scale * r^{|n|} with seeded phases: an entire-in-a-strip datum."""
    n = grid.wavenumbers
    c = scale * r ** np.abs(n).astype(float) * _phases(seed, grid.N)
    c[grid.index(-grid.N // 2)] = 0.0
    return Field(grid, c)


def random_smooth(grid: GridSpec, seed: int = 0, kmax: int = 4, decay: float = 0.5,
                  scale: float = 1.0) -> Field:
    """Gaussian coefficients damped by decay^{|n|} on |n| <= kmax."""
    rng = np.random.default_rng(seed)
    modes = {k: scale * decay ** abs(k) * complex(rng.normal(), rng.normal()) / np.sqrt(2)
             for k in range(-kmax, kmax + 1)}
    return Field.from_modes(grid, modes)


PRESETS = {
    "plane-wave": plane_wave,
    "two-mode": two_mode,
    "rough": rough,
    "analytic": analytic,
    "random-smooth": random_smooth,
}

SEEDED = {"rough", "analytic", "random-smooth"}


def build(grid: GridSpec, preset: str | None = None, params: dict | None = None,
          spectrum: str | None = None, seed: int = 0) -> Field:
    """Initial datum from a preset name (plus keyword parameters) or a spectrum file."""
    if spectrum is not None:
        u, _ = read_spectrum(spectrum, grid)
        return u
    if preset not in PRESETS:
        raise KeyError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    kw = dict(params or {})
    if preset in SEEDED:
        kw.setdefault("seed", seed)
    return PRESETS[preset](grid, **kw)
