import numpy as np
import pytest
from helpers import band_limited, seeds
from hypothesis import given

from kdnls import spectral as sp
from kdnls.diagnostics import mass
from kdnls.dynamics import EquationParams, RhsKind
from kdnls.errors import BackwardDissipativeStep, CutoffExceedsGrid, InsufficientStencil
from kdnls.integrators import (PropagatorSpec, SolverConfig, evolve, five_point_derivative,
                               mollify_cutoff, mollify_initial, propagate_linear, step)
from kdnls.presets import plane_wave, two_mode
from kdnls.spectral import Field, GridSpec

G32 = GridSpec(32)
G64 = GridSpec(64)


def test_free_propagator_example():
    u = Field.from_modes(G32, {1: 1.0})
    out = propagate_linear(u, PropagatorSpec(np.pi))
    assert out.mode(1) == pytest.approx(-1.0, abs=1e-15)


def test_dissipative_propagator_example():
    u = Field.from_modes(G32, {2: 1.0})
    out = propagate_linear(u, PropagatorSpec(1.0, mu=1.0))
    assert out.mode(2) == pytest.approx(np.exp(-4j) * np.exp(-2.0), abs=1e-15)


def test_backward_dissipative_step_rejected():
    u = Field.from_modes(G32, {1: 1.0})
    with pytest.raises(BackwardDissipativeStep):
        propagate_linear(u, PropagatorSpec(-0.1, epsilon=0.1))
    propagate_linear(u, PropagatorSpec(-0.1))  # the free group runs backwards


@given(seeds)
def test_propagator_contracts(seed):
    u = band_limited(G32, 12, seed)
    out = propagate_linear(u, PropagatorSpec(0.3, mu=0.5, epsilon=0.1))
    assert sp.sobolev_norm(out, 0) <= sp.sobolev_norm(u, 0) * (1 + 1e-15)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.3, t_final=1.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=1e-3, t_final=1.0, scheme="euler")
    with pytest.raises(ValueError):
        SolverConfig(dt=1e-3, t_final=1.0, residual_stencil_h=1e-4)


def test_step_without_nonlinearity_is_exact():
    u = band_limited(G32, 10, 4)
    p = EquationParams(0.0, 0.0)
    a = step(u, p, "original", 0.37)
    b = propagate_linear(u, PropagatorSpec(0.37))
    assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-14


def test_plane_wave_is_stationary():
    phi = plane_wave(G64, 1, 1.0)
    p = EquationParams(alpha=1.0, beta=-1.0)
    tr = evolve(phi, p, RhsKind.ORIGINAL, SolverConfig(dt=1e-3, t_final=1.0, snapshot_stride=1000))
    assert np.max(np.abs(tr.state(1).coeffs - phi.coeffs)) <= 1e-10
    assert np.max(np.abs(tr.dissipation_accum)) <= 1e-20


def test_free_evolution_matches_propagator():
    phi = Field.from_modes(G32, {1: 1.0})
    tr = evolve(phi, EquationParams(0.0, 0.0), "original",
                SolverConfig(dt=0.01, t_final=0.1, snapshot_stride=2))
    for k, t in enumerate(tr.times):
        exact = propagate_linear(phi, PropagatorSpec(t))
        assert np.max(np.abs(tr.state(k).coeffs - exact.coeffs)) <= 1e-14


def test_dissipation_accumulator_increases_and_mass_decreases():
    phi = two_mode(G64)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    tr = evolve(phi, p, "renormalized", SolverConfig(dt=1e-3, t_final=0.1, snapshot_stride=5))
    assert np.all(np.diff(tr.dissipation_accum) > 0)
    masses = [mass(s) for s in tr.states]
    assert np.all(np.diff(masses) <= 1e-10 * masses[0])


def test_blowup_is_flagged_not_raised():
    phi = two_mode(G32)
    p = EquationParams(alpha=1.0, beta=-1.0)
    tr = evolve(phi, p, "original", SolverConfig(dt=10.0, t_final=1000.0))
    assert tr.blowup
    assert np.all(np.isfinite(tr.coeffs))
    assert len(tr) >= 1


def test_stencil_and_index():
    phi = two_mode(G32)
    tr = evolve(phi, EquationParams(0.0, 0.0), "original",
                SolverConfig(dt=0.01, t_final=0.1, snapshot_stride=1))
    states, h = tr.stencil(0.05, 0.02)
    assert h == pytest.approx(0.02)
    assert len(states) == 5
    with pytest.raises(InsufficientStencil):
        tr.stencil(0.01, 0.01)
    with pytest.raises(InsufficientStencil):
        tr.stencil(0.05, 0.015)


def test_five_point_derivative_is_fourth_order():
    errs = []
    for h in (0.1, 0.05):
        f = [np.sin(1.0 + j * h) for j in (-2, -1, 0, 1, 2)]
        errs.append(abs(five_point_derivative(f, h) - np.cos(1.0)))
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.05)


def test_mollify_example():
    phi = Field.from_modes(G32, {0: 1.0, 1: 1.0, 5: 1.0})
    out = mollify_initial(phi, 0.3, 0.4)
    assert mollify_cutoff(0.3, 0.4) == 1
    expect = Field.from_modes(G32, {0: 1.0, 1: 1.0})
    assert np.array_equal(out.coeffs, expect.coeffs)


def test_mollify_errors():
    phi = Field.from_modes(G32, {1: 1.0})
    with pytest.raises(CutoffExceedsGrid):
        mollify_initial(phi, 1e-6, 0.4)
    with pytest.raises(ValueError):
        mollify_initial(phi, 0.1, 0.5)
    with pytest.raises(ValueError):
        mollify_initial(phi, 1.5, 0.3)


@given(seeds)
def test_mollify_contracts(seed):
    phi = band_limited(G64, 20, seed)
    out = mollify_initial(phi, 0.01, 0.4)
    assert sp.sobolev_norm(out, 2) <= sp.sobolev_norm(phi, 2)
