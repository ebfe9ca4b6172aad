"""Evaluation of every scalar functional of a field.

For a field v and parameters (N, gamma, alpha, p, omega):

    mass    = ||v||_L2^2
    grad2   = ||grad v||_L2^2
    G       = gamma * int |v|^2 |x|^(-alpha)    (or gamma |v(0)|^2, delta kind)
    Lp1     = ||v||_{p+1}^{p+1}
    L_omega = grad2 + omega*mass - G
    E       = grad2/2 - G/2 - Lp1/(p+1)
    S       = E + omega*mass/2                   (action)
    K       = L_omega - Lp1                      (Nehari functional)
    Q       = grad2 - (alpha/2) G - (beta/(p+1)) Lp1   (virial functional)

Grid profiles are evaluated with the grid's quadrature (grad2 through the
quadratic form of the grid Laplacian, so K at a discrete critical point
vanishes to solver tolerance, not merely to discretization error).
Analytic-tagged profiles are evaluated from the closed form: Gamma-function
formulas where they exist, adaptive quadrature otherwise; either way the
result carries no grid error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .grids import Grid, GridError, sphere_area
from .params import ModelParams
from .profiles import GaussianTag, Profile, SechPowerTag

_QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=400)


@dataclass(frozen=True)
class FunctionalReport:
    mass: float
    grad2: float
    G: float
    Lp1: float
    L_omega: float
    E: float
    S: float
    K: float
    Q: float

    @classmethod
    def from_parts(cls, mass: float, grad2: float, G: float, Lp1: float,
                   params: ModelParams) -> "FunctionalReport":
        l_omega = grad2 + params.omega * mass - G
        e = 0.5 * grad2 - 0.5 * G - Lp1 / (params.p + 1.0)
        s = e + 0.5 * params.omega * mass
        k = l_omega - Lp1
        q = grad2 - 0.5 * params.alpha * G - params.beta / (params.p + 1.0) * Lp1
        return cls(mass, grad2, G, Lp1, l_omega, e, s, k, q)


# ----------------------------------------------------------------------
# grid pathway
# ----------------------------------------------------------------------
def effective_potential(params: ModelParams, grid: Grid) -> np.ndarray:
    """gamma * (cell average of |x|^(-alpha)), the potential the discrete
    problem actually sees.  Zero vector when gamma = 0; delta kind has no
    node-wise potential (rank-one term handled by callers)."""
    if params.is_delta:
        raise GridError("delta potential has no node-wise representation")
    if params.gamma == 0.0:
        return np.zeros(grid.size)
    return params.gamma * grid.cell_average_inverse_power(params.alpha)


def eval_G(v: Profile, params: ModelParams) -> float:
    """Potential term of one profile (>= 0)."""
    if params.is_delta:
        return params.gamma * abs(v.value_at_origin()) ** 2
    if params.gamma == 0.0:
        return 0.0
    if v.tag is not None:
        return _analytic_G(v.tag, params, v.grid.dimension)
    vbar = v.grid.cell_average_inverse_power(params.alpha)
    return params.gamma * float(v.grid.integrate(vbar * np.abs(v.values) ** 2).real)


def eval_report(v: Profile, params: ModelParams) -> FunctionalReport:
    """All functionals of one profile."""
    if v.tag is not None:
        mass, grad2, lp1 = _analytic_base(v.tag, params, v.grid.dimension)
    else:
        dens = np.abs(v.values) ** 2
        mass = float(np.sum(v.grid.weights * dens))
        grad2 = v.grid.grad_squared(v.values)
        lp1 = float(np.sum(v.grid.weights * dens ** ((params.p + 1.0) / 2.0)))
    g = eval_G(v, params)
    rep = FunctionalReport.from_parts(mass, grad2, g, lp1, params)
    for name in ("mass", "grad2", "G", "Lp1"):
        if not math.isfinite(getattr(rep, name)):
            raise GridError(f"non-finite functional {name}; grid/singularity misconfigured")
    return rep


def nehari_project(v: Profile, params: ModelParams) -> tuple[float, Profile]:
    """Amplitude scaling onto the Nehari manifold.

    lam1 = (L_omega(v) / Lp1(v))^(1/(p-1)) makes K(lam1 v) = 0; lam1 < 1
    exactly when K(v) < 0.  Requires L_omega(v) > 0, which the equivalence
    of norms guarantees for omega above the spectral threshold; a
    non-positive value certifies omega <= omega0 or a broken discretization.
    """
    if v.is_zero:
        raise ValueError("cannot project the zero profile")
    rep = eval_report(v, params)
    if rep.L_omega <= 0.0:
        raise ValueError(
            f"L_omega = {rep.L_omega:.3e} <= 0: omega <= omega0 or discretization failure")
    if rep.Lp1 <= 0.0:
        raise ValueError("Lp1 vanishes on a nonzero profile")
    lam1 = (rep.L_omega / rep.Lp1) ** (1.0 / (params.p - 1.0))
    return lam1, v.amplitude_scale(lam1)


def stationary_apply(values: np.ndarray, params: ModelParams, grid: Grid) -> np.ndarray:
    """Left side of the stationary equation at given samples:
    -Lap u + omega u - gamma V u - |u|^(p-1) u."""
    out = -grid.laplacian(values) + params.omega * values
    if params.is_delta:
        idx, coef = grid.origin_interpolation()
        z = np.sum(coef * values[idx])
        dvec = np.zeros(grid.size)
        dvec[idx] = coef / grid.weights[idx]
        out = out - params.gamma * z * dvec
    else:
        out = out - effective_potential(params, grid) * values
    return out - np.abs(values) ** (params.p - 1.0) * values


def residual_stationary(phi: Profile, params: ModelParams) -> float:
    """Grid norm of the discrete stationary equation, relative to ||phi||."""
    if phi.is_zero:
        raise ValueError("residual of the zero profile is undefined")
    r = stationary_apply(phi.values, params, phi.grid)
    num = float(np.sum(phi.grid.weights * np.abs(r) ** 2))
    den = float(np.sum(phi.grid.weights * np.abs(phi.values) ** 2))
    return math.sqrt(num / den)


# ----------------------------------------------------------------------
# analytic pathway
# ----------------------------------------------------------------------
def _sech_int(s: float) -> float:
    """int_R sech^s(u) du = sqrt(pi) Gamma(s/2) / Gamma((s+1)/2)."""
    return math.sqrt(math.pi) * gamma_fn(0.5 * s) / gamma_fn(0.5 * (s + 1.0))


def _quad_radial(f, n: int, singular_alpha: float | None = None,
                 upper: float = math.inf) -> float:
    """integral over R^N of a radial integrand f(r) (surface factor included),
    optionally against the measure r^(-alpha)."""
    area = sphere_area(n)
    if singular_alpha is None:
        g = lambda r: f(r) * r ** (n - 1)
        val = quad(g, 0.0, 1.0, **_QUAD)[0] + quad(g, 1.0, upper, **_QUAD)[0]
        return area * val
    a = singular_alpha
    g_in = lambda r: f(r) * r ** (n - 1 - a)   # integrable: a < min(2, N)
    if n - 1 - a >= 0:
        inner = quad(g_in, 0.0, 1.0, **_QUAD)[0]
    else:
        inner = quad(lambda r: f(r) * r ** (n - 1), 0.0, 1.0,
                     weight="alg", wvar=(-a, 0.0), **{k: v for k, v in _QUAD.items()
                                                      if k != "limit"})[0]
    outer = quad(g_in, 1.0, upper, **_QUAD)[0]
    return area * (inner + outer)


def _analytic_base(tag, params: ModelParams, n: int) -> tuple[float, float, float]:
    """(mass, grad2, Lp1) of a tagged profile, continuum-exact."""
    p = params.p
    if isinstance(tag, GaussianTag):
        a2 = abs(tag.amplitude) ** 2
        w = tag.width
        mass = a2 * (math.pi * w * w / 2.0) ** (n / 2.0)
        grad2 = a2 * n / (w * w) * (math.pi * w * w / 2.0) ** (n / 2.0)
        lp1 = abs(tag.amplitude) ** (p + 1.0) * (math.pi * w * w / (p + 1.0)) ** (n / 2.0)
        return mass, grad2, lp1
    if isinstance(tag, SechPowerTag):
        a = abs(tag.amplitude)
        q, s, x0 = tag.exponent, tag.scale, tag.offset
        if n == 1 and x0 == 0.0:
            mass = a * a * s * _sech_int(2.0 * q)
            grad2 = a * a * q * q / s * (_sech_int(2.0 * q) - _sech_int(2.0 * q + 2.0))
            lp1 = a ** (p + 1.0) * s * _sech_int((p + 1.0) * q)
            return mass, grad2, lp1
        sech = lambda u: 1.0 / math.cosh(u)
        mass = _quad_radial(lambda r: a * a * sech((r + x0) / s) ** (2 * q), n)
        grad2 = _quad_radial(
            lambda r: (a * q / s) ** 2 * sech((r + x0) / s) ** (2 * q)
            * math.tanh((r + x0) / s) ** 2, n)
        lp1 = _quad_radial(lambda r: a ** (p + 1.0) * sech((r + x0) / s) ** ((p + 1.0) * q), n)
        return mass, grad2, lp1
    raise TypeError(f"unknown analytic tag {type(tag).__name__}")


def _analytic_G(tag, params: ModelParams, n: int) -> float:
    al, gam = params.alpha, params.gamma
    if isinstance(tag, GaussianTag):
        a2 = abs(tag.amplitude) ** 2
        w = tag.width
        return gam * a2 * sphere_area(n) * gamma_fn(0.5 * (n - al)) \
            / (2.0 * (2.0 / (w * w)) ** (0.5 * (n - al)))
    if isinstance(tag, SechPowerTag):
        a = abs(tag.amplitude)
        q, s, x0 = tag.exponent, tag.scale, tag.offset
        sech = lambda u: 1.0 / math.cosh(u)
        return gam * _quad_radial(lambda r: a * a * sech((r + x0) / s) ** (2 * q),
                                  n, singular_alpha=al)
    raise TypeError(f"unknown analytic tag {type(tag).__name__}")
