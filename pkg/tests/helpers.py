"""Shared helpers for the test suite: random band-limited fields and tolerances."""

import numpy as np
from hypothesis import strategies as st

from kdnls.spectral import Field, GridSpec


def band_limited(grid: GridSpec, kmax: int, seed: int, scale: float = 1.0, decay: float = 0.0) -> Field:
    """Gaussian coefficients on |n| <= kmax, optionally damped by exp(-decay |n|)."""
    rng = np.random.default_rng(seed)
    modes = {}
    for k in range(-kmax, kmax + 1):
        modes[k] = scale * np.exp(-decay * abs(k)) * complex(rng.normal(), rng.normal()) / np.sqrt(2)
    return Field.from_modes(grid, modes)


def rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
