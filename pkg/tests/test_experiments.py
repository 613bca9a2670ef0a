import numpy as np
import pytest
from helpers import band_limited, seeds
from hypothesis import given

from kdnls import experiments as ex
from kdnls import spectral as sp
from kdnls.dynamics import EquationParams
from kdnls.errors import CutoffExceedsGrid
from kdnls.integrators import SolverConfig, evolve
from kdnls.presets import analytic, plane_wave, rough, two_mode
from kdnls.spectral import GridSpec

G32 = GridSpec(32)
G64 = GridSpec(64)


@given(seeds)
def test_resample_pads_and_truncates(seed):
    u = band_limited(G32, 10, seed)
    up = ex.resample(u, G64)
    assert np.array_equal(ex.resample(up, G32).coeffs, u.coeffs)
    assert sp.sobolev_norm(up, 1) == pytest.approx(sp.sobolev_norm(u, 1))


def test_equivalence_trivial_for_alpha_zero():
    phi = two_mode(G64)
    p = EquationParams.for_datum(phi, 0.0, -1.0)
    rep = ex.equivalence_check(phi, p, SolverConfig(dt=1e-3, t_final=0.05, snapshot_stride=5))
    assert rep.shift_speed == 0.0
    assert rep.sup_l2_difference <= 1e-12


def test_equivalence_plane_wave():
    phi = plane_wave(G64, 1, 1.0)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    rep = ex.equivalence_check(phi, p, SolverConfig(dt=1e-3, t_final=0.1, snapshot_stride=10))
    assert rep.sup_l2_difference <= 1e-10


def test_wrong_shift_direction_is_detected():
    phi = two_mode(G64)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    cfg = SolverConfig(dt=1e-3, t_final=0.05, snapshot_stride=10)
    orig = evolve(phi, p, "original", cfg)
    ren = evolve(phi, p, "renormalized", cfg)
    wrong = ren.coeffs * np.exp(-1j * np.outer(ren.times, G64.wavenumbers) * p.renorm_c0)
    assert np.max(np.abs(orig.coeffs - wrong)) > 1e-2
    assert np.max(np.abs(orig.coeffs - ex.translate_renormalized(ren))) <= 1e-10


def test_gauge_campaign_rows():
    phi = two_mode(GridSpec(128), {1: 1.0, -1: 0.5})
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    tr = evolve(phi, p, "renormalized", SolverConfig(dt=1e-4, t_final=1e-3, snapshot_stride=1))
    rows = ex.gauge_campaign(tr, every=2, h=1e-4)
    assert [r["t"] for r in rows] == pytest.approx([2e-4, 4e-4, 6e-4, 8e-4])
    for r in rows:
        assert set(r) == {"t", "res_plus", "raw_plus", "res_minus", "raw_minus"}
        assert max(r["res_plus"], r["res_minus"]) <= 1e-6


def test_bona_smith_smooth_datum_rate_is_one():
    # Band-limited datum below every cutoff: only eps d_x^2 separates the runs,
    # so ||u_eps - u_eps_min|| ~ C (eps - eps_min) and the slope is close to 1.
    phi = two_mode(G32)
    rep = ex.bona_smith_study(phi, 0.0, -1.0, [1e-2, 5e-3, 2.5e-3, 1e-6], lam=0.2, s=2.0,
                              dt=1e-3, t_final=0.1, stride=10)
    assert rep.cutoffs[0] >= 2
    assert rep.cauchy_ok
    assert rep.fitted_gamma == pytest.approx(1.0, abs=0.05)
    pd = np.asarray(rep.pairwise_diffs)
    assert np.all(pd >= 0) and np.allclose(pd, pd.T)


def test_bona_smith_two_members():
    phi = two_mode(G32)
    rep = ex.bona_smith_study(phi, 0.0, -1.0, [1e-2, 1e-3], lam=0.1, dt=1e-3, t_final=0.02, stride=10)
    assert len(rep.diffs_to_smallest) == 1
    assert np.isfinite(rep.fitted_gamma)
    assert rep.as_dict()["eps_list"] == [1e-2, 1e-3]


def test_bona_smith_errors():
    phi = rough(G32, seed=0)
    with pytest.raises(ValueError):
        ex.bona_smith_study(phi, 0.0, -1.0, [1e-3, 1e-2])
    with pytest.raises(CutoffExceedsGrid):
        ex.bona_smith_study(phi, 0.0, -1.0, [1e-1, 1e-5], lam=0.4)


def test_temporal_order_small():
    phi = two_mode(G32)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    order, errs = ex.temporal_order(phi, p, "renormalized", [0.02, 0.01, 0.005], 0.5)
    assert 3.5 <= order <= 4.5
    assert errs[0] > errs[1] > errs[2]


def test_spatial_errors_decay():
    fine = analytic(GridSpec(128), r=0.5, scale=0.5)
    p = EquationParams.for_datum(fine, 1.0, -1.0)
    errs = ex.spatial_errors(fine, p, "renormalized", [32, 64], dt=1e-3, t_final=0.05)
    assert errs[0] / errs[1] >= 1e3


def test_smoothing_check_small():
    phi = rough(G64, seed=1)
    p = EquationParams.for_datum(phi, 0.0, -1.0)
    res = ex.smoothing_check(phi, p, "renormalized", t=0.05, dt=1e-4)
    assert res["smoothed"] and res["after"] < res["before"]
    assert res["cutoff"] == 16


def test_high_frequency_norm():
    u = two_mode(G32, {1: 1.0, 10: 1.0})
    assert ex.high_frequency_norm(u, 0.0, 8) == pytest.approx(np.sqrt(2 * np.pi))


def test_uniqueness_probe():
    phi = two_mode(G32)
    p = EquationParams.for_datum(phi, 1.0, -1.0)
    out = ex.uniqueness_probe(phi, p, "renormalized", SolverConfig(dt=1e-3, t_final=0.05, snapshot_stride=10))
    assert len(out["times"]) == len(out["differences"]) == 6
    assert out["differences"][0] == 0.0
    assert out["max_difference"] <= 1e-8
