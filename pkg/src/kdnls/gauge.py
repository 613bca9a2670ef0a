"""Gauge transformation v_pm = exp(rho_pm[u]) P_pm u and the transformed nonlinearity.

rho_pm[u] = d_x^{-1} P^pm_{alpha,beta}(|u|^2) with the weighted projection
P^pm_{alpha,beta} = -i alpha P_{!=0} -+ beta P_pm.  rho_pm is complex: its
real part is -+(beta/2) d_x^{-1}|u|^2, so the gauge factor is unimodular only
for beta = 0.

The equation satisfied by v_pm is not closed in v_pm alone, so it is only
checked diagnostically along a u-trajectory (``gauge_equation_residual``).
Also here: the Hayashi-Ozawa phase gauge used for the H^1 energy bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .dynamics import EquationParams, mean_abs2
from .errors import NonRealInput
from .integrators import Trajectory, five_point_derivative
from .spectral import Field, abs2, dx, hilbert, mul

GROUP_TAGS = ("ubarx", "u3x", "pm", "p_inv", "quintic")


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be +1 or -1, got {sign!r}")


def weighted_projection(m: Field, p: EquationParams, sign, *, require_real: bool = True) -> Field:
    """(-i alpha P_{!=0} -+ beta P_pm) m.

    ``require_real`` guards the main use on |u|^2; the transformed
    nonlinearity also applies the operator to complex products.
    """
    s = _sign(sign)
    if require_real:
        scale = max(float(np.max(np.abs(m.values))), sp.ABS_FLOOR)
        if m.max_abs_imag() > 1e-12 * scale:
            raise NonRealInput(f"imaginary part {m.max_abs_imag():.3e} exceeds tolerance")
    return -1j * p.alpha * sp.proj_nonzero(m) - s * p.beta * sp.proj_sign(m, s)


def gauge_phase(u: Field, p: EquationParams, sign, m: Field | None = None) -> Field:
    """rho_pm[u] = d_x^{-1} P^pm_{alpha,beta}(|u|^2)."""
    m = abs2(u) if m is None else m
    return sp.antiderivative(weighted_projection(m, p, sign))


def exp_times(rho: Field, f: Field, power: float = 1.0) -> Field:
    """exp(power * rho) * f evaluated on the 3/2-padded grid, then truncated."""
    rv = sp.to_padded_values(rho.coeffs)
    fv = sp.to_padded_values(f.coeffs)
    return Field(f.grid, sp.from_padded_values(np.exp(power * rv) * fv, f.grid.N))


@dataclass(frozen=True)
class GaugeState:
    rho_plus: Field
    rho_minus: Field
    v_plus: Field
    v_minus: Field
    source_time: float = 0.0

    def rho(self, sign) -> Field:
        return self.rho_plus if _sign(sign) > 0 else self.rho_minus

    def v(self, sign) -> Field:
        return self.v_plus if _sign(sign) > 0 else self.v_minus


def gauge_forward(u: Field, p: EquationParams, source_time: float = 0.0) -> GaugeState:
    m = abs2(u)
    rp = gauge_phase(u, p, +1, m)
    rm = gauge_phase(u, p, -1, m)
    return GaugeState(rho_plus=rp, rho_minus=rm,
                      v_plus=exp_times(rp, sp.proj_plus(u)),
                      v_minus=exp_times(rm, sp.proj_minus(u)),
                      source_time=source_time)


def gauge_reconstruct(g: GaugeState, u_mean: complex) -> Field:
    """P0 u + exp(-rho_+) v_+ + exp(-rho_-) v_-."""
    return (Field.constant(g.v_plus.grid, u_mean)
            + exp_times(g.rho_plus, g.v_plus, -1.0)
            + exp_times(g.rho_minus, g.v_minus, -1.0))


@dataclass(frozen=True)
class NvTermGroup:
    tag: str
    value: Field


def _comm_proj(s: int, f: Field, g: Field) -> Field:
    """[P_pm, f] g = P_pm(f g) - f P_pm g."""
    return sp.proj_sign(mul(f, g), s) - mul(f, sp.proj_sign(g, s))


def nv_nonlinearity(u: Field, p: EquationParams, sign) -> list[NvTermGroup]:
    """The five term groups whose sum is N_v^pm[u]."""
    s = _sign(sign)
    a, b = p.alpha, p.beta
    m = abs2(u)
    hm = hilbert(m)
    p0m = mean_abs2(u)
    ux = dx(u)
    ubar = u.conj()
    ubar_x = dx(ubar)
    pu = sp.proj_sign(u, s)
    rho = gauge_phase(u, p, s, m)
    v = exp_times(rho, pu)
    P = lambda f, real=False: weighted_projection(f, p, s, require_real=real)  # noqa: E731

    u_ubx = mul(u, ubar_x)
    g_ubarx = (a * sp.proj_sign(mul(u, u, ubar_x), s)
               + b * sp.proj_sign(mul(hilbert(u_ubx), u), s)
               - 2j * mul(P(u_ubx), pu))

    comm_h = mul(hilbert(mul(ubar, ux)) - mul(ubar, hilbert(ux)), u)
    g_u3x = (b * sp.proj_sign(comm_h, s)
             + 2 * a * _comm_proj(s, m, ux)
             + b * _comm_proj(s, m, hilbert(ux))
             + b * _comm_proj(s, hm, ux))

    g_pm = (-s * 2j * b * p0m) * dx(sp.proj_sign(v, -s))

    g_pinv = -b * mul(sp.antiderivative(P(mul(hm, dx(m)))), v)

    bracket = 1.5 * a * mul(m, m) - (2 * a - s * 1j * b) * p0m * m + 2 * b * mul(hm, m)
    pm_m = P(m, True)
    g_quintic = mul(P(bracket) - 1j * mul(pm_m, pm_m), v)

    return [
        NvTermGroup("ubarx", exp_times(rho, g_ubarx)),
        NvTermGroup("u3x", exp_times(rho, g_u3x)),
        NvTermGroup("pm", g_pm),
        NvTermGroup("p_inv", g_pinv),
        NvTermGroup("quintic", g_quintic),
    ]


def nv_total(u: Field, p: EquationParams, sign) -> Field:
    groups = nv_nonlinearity(u, p, sign)
    out = groups[0].value
    for g in groups[1:]:
        out = out + g.value
    return out


def gauge_equation_lhs_rhs(states, h: float, p: EquationParams, sign,
                           p0_phi: float | None = None) -> tuple[Field, Field, Field]:
    """(lhs, rhs, v) of the v_pm equation at the centre of a 5-point stencil.

    lhs = d_t v - i v_xx - beta P0(|phi|^2) D_x v with d_t v by finite
    differences; rhs = N0[u, phi; v] + N_v^pm[u].
    """
    s = _sign(sign)
    p0_phi = p.p0_phi if p0_phi is None else p0_phi
    vs = [gauge_forward(w, p).v(s) for w in states]
    dv = five_point_derivative([x.coeffs for x in vs], h)
    v = vs[2]
    u = states[2]
    n = u.grid.wavenumbers
    lhs = Field(u.grid, dv + 1j * n**2 * v.coeffs - p.beta * p0_phi * np.abs(n) * v.coeffs)
    n0 = (mean_abs2(u) - p0_phi) * (2 * p.alpha * 1j * n + p.beta * np.abs(n)) * v.coeffs
    rhs = Field(u.grid, n0) + nv_total(u, p, s)
    return lhs, rhs, v


def gauge_residual_pair(traj: Trajectory, p: EquationParams, t: float, sign,
                        s: float | None = None, h: float | None = None,
                        p0_phi: float | None = None) -> tuple[float, float]:
    """(raw, normalized) residual of the v_pm equation at time ``t``.

    raw = ||lhs - rhs||_{H^s}; normalized = raw / ||v_pm||_{H^s}, with the
    denominator floored at 1e-12 ||u||_{H^s}.
    """
    s_norm = traj.config.norm_s if s is None else s
    states, h_used = traj.stencil(t, h)
    lhs, rhs, v = gauge_equation_lhs_rhs(states, h_used, p, sign, p0_phi)
    raw = sp.sobolev_norm(lhs - rhs, s_norm)
    denom = max(sp.sobolev_norm(v, s_norm), 1e-12 * sp.sobolev_norm(states[2], s_norm))
    return raw, raw / denom


def gauge_equation_residual(traj: Trajectory, p: EquationParams, t: float, sign,
                            s: float | None = None, h: float | None = None,
                            p0_phi: float | None = None) -> float:
    """||lhs - rhs||_{H^s} / ||v_pm||_{H^s} at time ``t`` of a renormalized run.

    ``p0_phi`` defaults to the run's t = 0 datum; pass P0(|u(t0)|^2) to
    re-freeze at a restart time t0 instead.  When P_pm phi = 0 the
    denominator starts from zero, so early times measure the raw residual
    against a vanishing v_pm; ``gauge_residual_pair`` reports both.
    """
    return gauge_residual_pair(traj, p, t, sign, s, h, p0_phi)[1]


# --------------------------------------------------------------------------
# Hayashi-Ozawa gauge
# --------------------------------------------------------------------------

def hayashi_ozawa_phase(u: Field, p: EquationParams) -> Field:
    """Phi[u] = -(3/4) d_x^{-1}(alpha P_{!=0}|u|^2 + beta H|u|^2), real."""
    m = abs2(u)
    return -0.75 * sp.antiderivative(p.alpha * sp.proj_nonzero(m) + p.beta * hilbert(m)).real_part()


def hayashi_ozawa_gauge(u: Field, p: EquationParams) -> Field:
    """v = exp(i Phi[u]) u, formed pointwise on the collocation grid."""
    phase = hayashi_ozawa_phase(u, p)
    v = Field.from_values(u.grid, np.exp(1j * phase.values) * u.values)
    return v


def hayashi_ozawa_dx_norm2(u: Field, p: EquationParams, factor: int = 4) -> float:
    """||v_x||_{L2}^2 with v_x = exp(i Phi)(u_x + i Phi_x u), by refined quadrature."""
    phase = hayashi_ozawa_phase(u, p)
    uf = sp.fine_values(u, factor)
    uxf = sp.fine_values(dx(u), factor)
    phxf = sp.fine_values(dx(phase), factor).real
    vx = uxf + 1j * phxf * uf
    return float(sp.TWO_PI * np.mean(np.abs(vx) ** 2))


def torus_bound_constant(alpha: float) -> float:
    """C_alpha in ||v_x||^2 <= 2 E[u] + C_alpha ||u||_{L2}^6, from |v_x| <= |.| + (3|alpha|/8pi)||u||^2 |u|."""
    return 2.0 * (3.0 * abs(alpha) / (8.0 * np.pi)) ** 2
