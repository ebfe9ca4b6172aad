"""Ground states of the stationary equation and the levels d(omega), d0(omega).

Two independent routes to the minimizer:

* ``gradient_flow`` -- split-step imaginary time on the action (diffusion
  half exact in Fourier space / semi-implicit radially, local terms by
  frozen-coefficient exponential), re-projected onto the Nehari manifold
  after every step.
* ``nehari_descent`` -- preconditioned gradient descent of the action
  constrained to the Nehari manifold by amplitude projection.

Both finish with a damped Newton polish that drives the *discrete*
stationary residual to near round-off; without it the measured Nehari and
virial functionals of the output would reflect solver slack instead of the
discretization.  Agreement of the two methods in the action value is the
acceptance signal for having found the ground state (uniqueness is not
assumed).

The nonpotential (gamma = 0) soliton produced by bisection shooting on the
profile ODE is the external oracle used to validate the solvers; it never
touches the grid machinery.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.integrate import quad, solve_ivp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, minres

from .functionals import (FunctionalReport, effective_potential, eval_report,
                          nehari_project, residual_stationary, stationary_apply)
from .grids import Grid, build_grid
from .params import ModelParams
from .profiles import GaussianTag, Profile, SechPowerTag

OMEGA_GAP = 1e-3   # required clearance of omega above omega0


class SolverError(RuntimeError):
    pass


# ======================================================================
# spectral threshold omega0
# ======================================================================
@dataclass
class SpectralEstimate:
    omega0: float
    rayleigh_value: float
    rayleigh_minimizer: Profile
    iterations: int
    converged: bool


def _linear_apply(values, params: ModelParams, grid: Grid):
    """H v = -Lap v - gamma V v (quadratic-form operator of omega0)."""
    out = -grid.laplacian(values)
    if params.is_delta:
        idx, coef = grid.origin_interpolation()
        z = np.sum(coef * values[idx])
        dv = np.zeros(grid.size)
        dv[idx] = coef / grid.weights[idx]
        out = out - params.gamma * z * dv
    elif params.gamma != 0.0:
        out = out - effective_potential(params, grid) * values
    return out


def _preconditioner(grid: Grid, shift: float):
    """(shift - Lap)^(-1), the descent metric for all iterative solvers here."""
    if grid.kind == "line1d":
        denom = shift + grid.fourier_k2

        def apply(r):
            return scipy.fft.ifft(scipy.fft.fft(r) / denom).real
        return apply
    sub, main, sup = grid.laplacian_diagonals()
    ab = np.zeros((3, grid.size))
    ab[0, 1:] = -sup
    ab[1, :] = shift - main
    ab[2, :-1] = -sub

    def apply(r):
        return solve_banded((1, 1), ab, r)
    return apply


def estimate_omega0(params: ModelParams, grid: Grid, tol: float = 1e-10,
                    max_iter: int = 20000) -> SpectralEstimate:
    """Minimize the linear quadratic form over unit-mass profiles.

    Projected gradient descent in the (1 - Lap)^(-1) metric, normalizing
    every step.  omega0 is the negative part of the minimum (spreading test
    functions drive the form to zero from above when no bound state exists,
    so the threshold is never negative).
    """
    w = grid.weights
    precond = _preconditioner(grid, 1.0)
    rng = np.random.default_rng(0)
    v = np.exp(-(grid.nodes / (0.2 * grid.radius)) ** 2) \
        + 1e-3 * rng.standard_normal(grid.size)
    v /= math.sqrt(float(np.sum(w * v * v)))
    rho = float(np.sum(w * v * _linear_apply(v, params, grid)))
    step = 1.0
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        hv = _linear_apply(v, params, grid)
        rho = float(np.sum(w * v * hv))
        grad = hv - rho * v
        gnorm = math.sqrt(float(np.sum(w * grad * grad)))
        if gnorm <= tol * max(1.0, abs(rho)):
            converged = True
            break
        vn = v - step * precond(grad)
        vn /= math.sqrt(float(np.sum(w * vn * vn)))
        rho_n = float(np.sum(w * vn * _linear_apply(vn, params, grid)))
        if rho_n > rho + 1e-15:
            step *= 0.5
            if step < 1e-8:
                break
            continue
        v, rho = vn, rho_n
    return SpectralEstimate(omega0=max(0.0, -rho), rayleigh_value=rho,
                            rayleigh_minimizer=Profile(grid, v.astype(complex)),
                            iterations=it, converged=converged)


def _certify_omega(params: ModelParams, grid: Grid, omega0: float | None) -> float:
    if omega0 is None:
        # the threshold needs far less resolution than the solve itself
        if grid.kind == "line1d" and grid.size > 4096:
            coarse = build_grid("line1d", 1, grid.radius, 4096)
        elif grid.kind == "radial" and grid.size > 4096:
            coarse = build_grid("radial", grid.dimension, grid.radius, 4096)
        else:
            coarse = grid
        omega0 = estimate_omega0(params, coarse).omega0
    if params.omega < omega0 + OMEGA_GAP * max(1.0, abs(omega0)):
        raise SolverError(
            f"omega = {params.omega} not certified above omega0 = {omega0:.6g}")
    return omega0


# ======================================================================
# ground-state container
# ======================================================================
@dataclass
class GroundState:
    profile: Profile
    params: ModelParams
    method: str
    report: FunctionalReport
    residual: float
    d_omega: float
    omega0: float
    iterations: int
    converged: bool

    @property
    def grid_report(self) -> FunctionalReport:
        """Functionals of the profile through the plain grid pathway.

        ``report`` may be Richardson-extrapolated (certificates) or
        closed-form (delta ground state); comparisons against other fields
        evaluated on the same grid must use this report instead, so that
        margins near phi are not polluted by mixing evaluation pathways.
        """
        cached = getattr(self, "_grid_report", None)
        if cached is None:
            cached = eval_report(Profile(self.profile.grid, self.profile.values),
                                 self.params)
            self._grid_report = cached
        return cached

    @property
    def k_rel(self) -> float:
        """|K(phi)| relative to L_omega(phi) (Nehari certificate)."""
        return abs(self.report.K) / abs(self.report.L_omega)

    @property
    def q_rel(self) -> float:
        """|Q(phi)| relative to grad2(phi) (Pohozaev certificate)."""
        return abs(self.report.Q) / self.report.grad2

    def certified(self, tol: float = 1e-8) -> bool:
        return self.residual <= tol and self.k_rel <= tol and self.q_rel <= tol


def compute_d(gs: GroundState) -> tuple[float, float, float]:
    """The three expressions for the minimal action level:
    S(phi), c_p ||phi||_{p+1}^{p+1}, c_p L_omega(phi), c_p = (p-1)/(2(p+1)).

    They agree exactly when K(phi) = 0; disagreement beyond tolerance flags
    an off-manifold profile.
    """
    cp = (gs.params.p - 1.0) / (2.0 * (gs.params.p + 1.0))
    return gs.report.S, cp * gs.report.Lp1, cp * gs.report.L_omega


# ======================================================================
# solver internals
# ======================================================================
def _wnorm(grid: Grid, r: np.ndarray) -> float:
    return math.sqrt(float(np.sum(grid.weights * np.abs(r) ** 2)))


def _quick_nehari(u, params: ModelParams, grid: Grid, pot, delta):
    """Amplitude projection onto K = 0 for raw real samples."""
    w = grid.weights
    u2 = u * u
    mass = float(np.sum(w * u2))
    grad2 = grid.grad_squared(u)
    if delta is not None:
        idx, coef = delta
        g = params.gamma * float(np.sum(coef * u[idx])) ** 2
    else:
        g = float(np.sum(w * pot * u2))
    lp1 = float(np.sum(w * u2 ** ((params.p + 1.0) / 2.0)))
    l_om = grad2 + params.omega * mass - g
    if l_om <= 0.0 or lp1 <= 0.0:
        raise SolverError("Nehari projection failed: L_omega <= 0 (left the basin?)")
    lam = (l_om / lp1) ** (1.0 / (params.p - 1.0))
    cp = (params.p - 1.0) / (2.0 * (params.p + 1.0))
    return lam * u, cp * lam ** (params.p + 1.0) * lp1   # projected field, S value

def _flow_stepper(params: ModelParams, grid: Grid, dt: float):
    """One imaginary-time step u -> B(dt) A(dt) u (diffusion then local)."""
    gam, om, p = params.gamma, params.omega, params.p
    if grid.kind == "line1d":
        diff = np.exp(-grid.fourier_k2 * dt)

        def a_step(u):
            return scipy.fft.ifft(diff * scipy.fft.fft(u)).real
    else:
        sub, main, sup = grid.laplacian_diagonals()
        ab = np.zeros((3, grid.size))
        ab[0, 1:] = -dt * sup
        ab[1, :] = 1.0 - dt * main
        ab[2, :-1] = -dt * sub

        def a_step(u):
            return solve_banded((1, 1), ab, u)

    if params.is_delta:
        idx, coef = grid.origin_interpolation()
        s_c = float(np.sum(coef * coef / grid.weights[idx]))
        if dt * gam * s_c >= 0.5:
            raise SolverError("flow step too large for the delta term")

        def b_step(u):
            u = u * np.exp(dt * (-om + np.abs(u) ** (p - 1.0)))
            z = np.sum(coef * u[idx]) / (1.0 - dt * gam * s_c)
            out = u.copy()
            out[idx] += dt * gam * z * coef / grid.weights[idx]
            return out
    else:
        pot = effective_potential(params, grid)

        def b_step(u):
            return u * np.exp(dt * (-om + pot + np.abs(u) ** (p - 1.0)))

    def step(u):
        return b_step(a_step(u))
    return step


def _flow_dt_cap(params: ModelParams, grid: Grid, u: np.ndarray) -> float:
    """Largest safe imaginary-time step: the frozen-coefficient exponential
    of the local terms must stay O(1), and the singular potential's cell
    average grows like h^(-alpha) near the origin."""
    local = max(params.omega, 1.0, float(np.max(np.abs(u)) ** (params.p - 1.0)))
    if params.is_delta:
        idx, coef = grid.origin_interpolation()
        s_c = float(np.sum(coef * coef / grid.weights[idx]))
        local = max(local, params.gamma * s_c)
    elif params.gamma > 0.0:
        local = max(local, float(np.max(effective_potential(params, grid))))
    return 0.3 / local


def _newton_polish(u, params: ModelParams, grid: Grid, tol: float,
                   max_iter: int = 50) -> tuple[np.ndarray, int]:
    """Damped inexact Newton on the discrete stationary equation.

    Radial grids solve the tridiagonal Jacobian directly; the line solves
    it by preconditioned MINRES (the Jacobian has one negative direction at
    the ground state) with an Eisenstat-Walker-style forcing term.
    """
    p, om, gam = params.p, params.omega, params.gamma
    w = grid.weights
    if params.is_delta:
        idx, coef = grid.origin_interpolation()
        cw = coef / w[idx]

    def fval(x):
        return stationary_apply(x.astype(complex), params, grid).real

    res = fval(u)
    rnorm = _wnorm(grid, res)
    unorm = _wnorm(grid, u)
    its = 0
    pre = _preconditioner(grid, max(om, 1.0)) if grid.kind == "line1d" else None
    while rnorm > tol * unorm and its < max_iter:
        its += 1
        diag = om - p * np.abs(u) ** (p - 1.0)
        if not params.is_delta:
            diag = diag - effective_potential(params, grid)
        if grid.kind == "line1d":
            k2 = grid.fourier_k2

            def jmv(x):
                out = scipy.fft.ifft(k2 * scipy.fft.fft(x)).real + diag * x
                if params.is_delta:
                    z = np.sum(coef * x[idx])
                    out = out.copy()
                    out[idx] -= gam * z * cw
                return out

            jop = LinearOperator((grid.size, grid.size), matvec=jmv, dtype=float)
            mop = LinearOperator((grid.size, grid.size), matvec=pre, dtype=float)
            forcing = min(1e-2, max(1e-13, 0.1 * rnorm / unorm))
            delta, _ = _minres(jop, res, mop, forcing)
        else:
            sub, main, sup = grid.laplacian_diagonals()
            ab = np.zeros((3, grid.size))
            ab[0, 1:] = -sup
            ab[1, :] = diag - main
            ab[2, :-1] = -sub
            delta = solve_banded((1, 1), ab, res)
        s = 1.0
        improved = False
        while s > 1e-4:
            trial = u - s * delta
            tres = fval(trial)
            tnorm = _wnorm(grid, tres)
            if tnorm < (1.0 - 0.25 * s) * rnorm:
                u, res, rnorm = trial, tres, tnorm
                unorm = _wnorm(grid, u)
                improved = True
                break
            s *= 0.5
        if not improved:
            break
    return u, its


def _minres(aop, b, mop, rtol):
    try:
        return minres(aop, b, M=mop, rtol=rtol, maxiter=400)
    except TypeError:       # scipy < 1.12 spells the tolerance 'tol'
        return minres(aop, b, M=mop, tol=rtol, maxiter=400)


def default_initial_guess(params: ModelParams, grid: Grid,
                          perturb_seed: int | None = None) -> Profile:
    """Gaussian with width 1/sqrt(omega): the correct decay scale, and
    empirically inside the ground-state basin for radial flows."""
    width = 1.0 / math.sqrt(max(params.omega, 1e-6))
    prof = Profile.from_tag(grid, GaussianTag(1.0, width))
    if perturb_seed is not None:
        rng = np.random.default_rng(perturb_seed)
        bump = 1.0 + 0.2 * np.cos(rng.uniform(0.5, 3.0) * grid.nodes / width) \
            * np.exp(-(grid.nodes / (2 * width)) ** 2)
        prof = Profile(grid, prof.values * bump)
    return prof


def _run_flow(u, params: ModelParams, grid: Grid, flow_tol: float,
              max_iter: int) -> tuple[np.ndarray, int]:
    """Imaginary-time flow with Nehari re-projection after every step.

    Exits on the tolerance or on stall (the split scheme has an O(dt) bias
    fixed point; once the residual stops improving the Newton stage takes
    over).  The step is capped by the local-term magnitude and halved when
    the constrained action increases.
    """
    w = grid.weights
    pot = None if params.is_delta else effective_potential(params, grid)
    delta = grid.origin_interpolation() if params.is_delta else None
    mass0 = float(np.sum(w * u * u))
    u, s_prev = _quick_nehari(u, params, grid, pot, delta)
    dt = _flow_dt_cap(params, grid, u)
    stepper = _flow_stepper(params, grid, dt)
    check = 25
    best = math.inf
    stalled = 0
    it = 0
    while it < max_iter:
        it += 1
        u = stepper(u)
        u, s_val = _quick_nehari(u, params, grid, pot, delta)
        if it % check:
            continue
        if float(np.sum(w * u * u)) < 1e-12 * mass0:
            raise SolverError("mass collapse: initialization left the basin")
        res = _wnorm(grid, stationary_apply(u.astype(complex), params, grid)) \
            / _wnorm(grid, u)
        if res <= flow_tol:
            break
        if res < 0.7 * best:
            stalled = 0
        else:
            stalled += 1
            if stalled >= 4:
                break                      # plateau: hand over to Newton
        best = min(best, res)
        cap = _flow_dt_cap(params, grid, u)
        new_dt = min(cap, dt * 1.2 if s_val <= s_prev else dt * 0.5)
        if new_dt < 1e-10:
            raise SolverError("flow step collapsed without convergence")
        if abs(new_dt - dt) > 1e-3 * dt:
            dt = new_dt
            stepper = _flow_stepper(params, grid, dt)
        s_prev = s_val
    return u, it


def _run_descent(u, params: ModelParams, grid: Grid, flow_tol: float,
                 max_iter: int) -> tuple[np.ndarray, int]:
    """Preconditioned gradient descent of S constrained to the Nehari
    manifold by amplitude projection, with backtracking line search."""
    pot = None if params.is_delta else effective_potential(params, grid)
    delta = grid.origin_interpolation() if params.is_delta else None
    pre = _preconditioner(grid, max(params.omega, 1.0))
    u, s_val = _quick_nehari(u, params, grid, pot, delta)
    step = 0.5
    it = 0
    while it < max_iter:
        it += 1
        grad = stationary_apply(u.astype(complex), params, grid).real
        res = _wnorm(grid, grad) / _wnorm(grid, u)
        if res <= flow_tol:
            break
        d = pre(grad)
        accepted = False
        while step > 1e-12:
            try:
                trial, s_trial = _quick_nehari(u - step * d, params, grid, pot, delta)
            except SolverError:
                step *= 0.5
                continue
            if s_trial <= s_val + 1e-14 * abs(s_val):
                u, s_val = trial, s_trial
                accepted = True
                step = min(step * 1.3, 4.0)
                break
            step *= 0.5
        if not accepted:
            break                          # stationary within line-search slack
    return u, it


_COARSE_NODES = 8192


def solve_ground_state(params: ModelParams, grid: Grid,
                       init: Profile | None = None,
                       method: str = "gradient_flow",
                       tol: float = 1e-11,
                       max_iter: int = 20000,
                       newton_polish: bool = True,
                       omega0: float | None = None,
                       richardson: bool = False) -> GroundState:
    """Compute the ground state of the stationary equation on a grid.

    omega must clear the spectral threshold (estimated here when not
    supplied).  On fine grids the iterative stage runs on a coarse
    companion grid and the result is resampled and Newton-polished at full
    resolution (the flow alone would need a step below the singular
    potential's cell-average scale).

    With ``richardson`` the reported functionals are two-grid extrapolated
    (a second solve at a quarter of the nodes): the leading O(h^2) bias of
    the discrete critical point -- the floor of the Pohozaev certificate
    for the singular potential -- cancels, while every algebraic identity
    among the reported values survives (they are linear in the four base
    integrals).  The profile and residual always refer to this grid.
    Raises SolverError on basin escape or non-convergence.
    """
    from .profiles import _resample

    if method not in ("gradient_flow", "nehari_descent"):
        raise ValueError(f"unknown method {method!r}")
    if init is not None and init.is_zero:
        raise ValueError("initial guess must be nonzero")
    omega0 = _certify_omega(params, grid, omega0)

    sequenced = newton_polish and grid.size > _COARSE_NODES
    work_grid = build_grid(grid.kind, grid.dimension, grid.radius,
                           _COARSE_NODES) if sequenced else grid
    if init is None:
        init_w = default_initial_guess(params, work_grid)
    elif sequenced:
        init_w = Profile(work_grid,
                         _resample(grid, init.values, work_grid.nodes))
    else:
        init_w = init
    u = init_w.values.real.copy()
    if not np.any(u):
        raise ValueError("initial guess must be nonzero")

    flow_tol = max(tol, 1e-7) if newton_polish else tol
    runner = _run_flow if method == "gradient_flow" else _run_descent
    u, it_total = runner(u, params, work_grid, flow_tol, max_iter)

    if newton_polish:
        u, its = _newton_polish(u, params, work_grid, max(tol, 1e-12))
        it_total += its
        if sequenced:
            u = _resample(work_grid, u.astype(complex), grid.nodes).real
            u, its = _newton_polish(u, params, grid, tol)
            it_total += its

    if float(np.sum(grid.weights * u ** 3)) < 0.0:   # positive representative
        u = -u
    profile = Profile(grid, u.astype(complex))
    res = residual_stationary(profile, params)
    report = eval_report(profile, params)
    if richardson and params.gamma > 0.0:
        coarse = build_grid(grid.kind, grid.dimension, grid.radius,
                            max(grid.size // 4, 1024))
        gs_c = solve_ground_state(params, coarse, method=method, tol=tol,
                                  max_iter=max_iter, newton_polish=newton_polish,
                                  omega0=omega0, richardson=False)
        r = (grid.size / coarse.size) ** 2
        rep_c = gs_c.report
        report = FunctionalReport.from_parts(
            mass=(r * report.mass - rep_c.mass) / (r - 1.0),
            grad2=(r * report.grad2 - rep_c.grad2) / (r - 1.0),
            G=(r * report.G - rep_c.G) / (r - 1.0),
            Lp1=(r * report.Lp1 - rep_c.Lp1) / (r - 1.0),
            params=params)
    converged = res <= max(tol, 1e-8) if newton_polish else res <= flow_tol * 10
    gs = GroundState(profile=profile, params=params, method=method,
                     report=report, residual=res, d_omega=report.S,
                     omega0=omega0, iterations=it_total, converged=converged)
    if not converged:
        raise SolverError(f"solver did not converge: residual {res:.3e}")
    return gs


# ======================================================================
# gamma = 0 oracle: bisection shooting on the profile ODE
# ======================================================================
@dataclass
class SolitonOracle:
    """Shooting solution of  phi'' = omega phi - phi^p  with decay at infinity.

    Scalar functionals come from adaptive quadrature of the dense ODE
    solution, fully independent of any grid.  The shooting trajectory is
    trusted only up to x_cut (the separatrix is exponentially unstable, so
    round-off in phi(0) contaminates the far tail); beyond that the profile
    follows the exact linearized decay e^(-sqrt(omega) x), whose
    contribution to every functional is below 1e-16 relative.
    """
    omega: float
    p: float
    phi0: float
    x_cut: float
    phi_cut: float
    mass: float
    grad2: float
    Lp1: float
    S: float
    E: float
    d0: float
    _dense: object

    def __call__(self, x):
        """Pointwise profile values (even extension, exact-decay tail)."""
        x = np.abs(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        inside = x <= self.x_cut
        if np.any(inside):
            out[inside] = self._dense(x[inside])[0]
        out[~inside] = self.phi_cut * np.exp(-math.sqrt(self.omega)
                                             * (x[~inside] - self.x_cut))
        return out

    def profile(self, grid: Grid) -> Profile:
        return Profile(grid, self(grid.nodes).astype(complex))


def reference_soliton_gamma0(omega: float, p: float,
                             x_max: float | None = None,
                             bisections: int = 80) -> SolitonOracle:
    """Independent oracle for the 1D nonpotential ground state.

    Bisect on phi(0): overshooting initial heights cross zero, undershooting
    ones turn around and grow; the separatrix is the soliton.
    """
    if omega <= 0:
        raise ValueError("the gamma = 0 soliton needs omega > 0")
    sq = math.sqrt(omega)
    if x_max is None:
        x_max = 30.0 / sq

    def rhs(x, y):
        return [y[1], omega * y[0] - np.abs(y[0]) ** (p - 1.0) * y[0]]

    def crossed(x, y):
        return y[0]
    crossed.terminal = True
    crossed.direction = -1.0

    def turned(x, y):
        return y[1]
    turned.terminal = True
    turned.direction = 1.0

    lo = omega ** (1.0 / (p - 1.0)) * (1.0 + 1e-9)   # below: immediate growth
    hi = 3.0 * ((p + 1.0) * omega / 2.0) ** (1.0 / (p - 1.0))
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        sol = solve_ivp(rhs, (0.0, x_max), [mid, 0.0], events=[crossed, turned],
                        rtol=1e-12, atol=1e-14, method="DOP853")
        if sol.t_events[0].size:      # hit zero: too high
            hi = mid
        else:                         # turned back up (or survived): too low
            lo = mid
        if hi - lo < 1e-16 * hi:
            break
    phi0 = 0.5 * (lo + hi)
    sol = solve_ivp(rhs, (0.0, x_max), [phi0, 0.0], dense_output=True,
                    events=[crossed, turned], rtol=1e-12, atol=1e-14,
                    method="DOP853")
    dense = sol.sol
    t_end = float(sol.t[-1])
    # trust the trajectory only while it still decays; beyond the profile
    # minimum the shooting error (amplified like e^{sqrt(omega) x}) dominates
    xs = np.linspace(0.0, t_end, 4000)
    vals = np.abs(dense(xs)[0])
    small = np.nonzero(vals < 1e-9 * phi0)[0]
    cut_i = small[0] if small.size else int(np.argmin(vals))
    x_cut = float(xs[cut_i])
    phi_cut = float(dense(x_cut)[0])

    def fi(f, tail):
        val = quad(f, 0.0, x_cut, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
        return 2.0 * (val + tail)

    pc = abs(phi_cut)
    mass = fi(lambda x: dense(x)[0] ** 2, pc * pc / (2.0 * sq))
    grad2 = fi(lambda x: dense(x)[1] ** 2, pc * pc * sq / 2.0)
    lp1 = fi(lambda x: np.abs(dense(x)[0]) ** (p + 1.0),
             pc ** (p + 1.0) / ((p + 1.0) * sq))
    e = 0.5 * grad2 - lp1 / (p + 1.0)
    s = e + 0.5 * omega * mass
    d0 = (p - 1.0) / (2.0 * (p + 1.0)) * lp1
    return SolitonOracle(omega=omega, p=p, phi0=phi0, x_cut=x_cut,
                         phi_cut=phi_cut, mass=mass, grad2=grad2, Lp1=lp1,
                         S=s, E=e, d0=d0, _dense=dense)


def soliton_closed_form(omega: float, p: float) -> SechPowerTag:
    """Textbook gamma = 0 soliton: ((p+1) omega / 2)^(1/(p-1)) sech^(2/(p-1))((p-1) sqrt(omega) x / 2)."""
    amp = ((p + 1.0) * omega / 2.0) ** (1.0 / (p - 1.0))
    return SechPowerTag(amplitude=amp, scale=2.0 / ((p - 1.0) * math.sqrt(omega)),
                        exponent=2.0 / (p - 1.0))


def delta_ground_state_closed_form(params: ModelParams, grid: Grid) -> GroundState:
    """Even ground state of the attractive-delta model, in closed form.

    phi(x) = [ (p+1) omega / 2 ]^(1/(p-1)) sech^(2/(p-1))( (p-1) sqrt(omega)/2 |x| + artanh(gamma/(2 sqrt(omega))) ).

    Requires omega > omega0 = gamma^2 / 4.  The report is continuum-exact
    (closed forms plus adaptive quadrature), so the Nehari and Pohozaev
    identities hold to quadrature precision; grid solvers can only reach
    the corner at the origin to O(h)-limited accuracy.
    """
    if not params.is_delta:
        raise ValueError("params must use the delta potential")
    om, gam, p = params.omega, params.gamma, params.p
    omega0 = 0.25 * gam * gam
    if om <= omega0 + OMEGA_GAP * max(1.0, omega0):
        raise SolverError(f"omega = {om} not above delta threshold {omega0}")
    sq = math.sqrt(om)
    tag = soliton_closed_form(om, p)
    offset = tag.scale * math.atanh(gam / (2.0 * sq))
    tag = SechPowerTag(tag.amplitude, tag.scale, tag.exponent, offset=offset)
    profile = Profile.from_tag(grid, tag)
    report = eval_report(profile, params)
    # residual of the closed form: ODE defect away from 0 plus the jump
    # condition 2 phi'(0+) = -gamma phi(0), both analytic; report the jump
    # defect relative to gamma phi(0)
    q = tag.exponent
    dphi0 = -abs(tag.amplitude) * q / tag.scale \
        * math.tanh(offset / tag.scale) / math.cosh(offset / tag.scale) ** q
    jump_defect = abs(2.0 * dphi0 + gam * abs(tag.amplitude)
                      / math.cosh(offset / tag.scale) ** q)
    res = jump_defect / (gam * abs(profile.value_at_origin()))
    return GroundState(profile=profile, params=params, method="closed_form",
                       report=report, residual=res, d_omega=report.S,
                       omega0=omega0, iterations=0, converged=True)


# ======================================================================
# serialization: CSV of samples + JSON header, 17 significant digits
# ======================================================================
def save_ground_state(gs: GroundState, directory: str, stem: str = "ground_state") -> dict:
    """Write <stem>.csv (node, re, im) and <stem>.json; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, f"{stem}.csv")
    json_path = os.path.join(directory, f"{stem}.json")
    with open(csv_path, "w") as fh:
        fh.write("node,re,im\n")
        for x, v in zip(gs.profile.grid.nodes, gs.profile.values):
            fh.write(f"{x:.17g},{v.real:.17g},{v.imag:.17g}\n")
    header = {
        "params": {
            "dimension": gs.params.dimension, "gamma": gs.params.gamma,
            "alpha": gs.params.alpha, "p": gs.params.p, "omega": gs.params.omega,
            "potential_kind": gs.params.potential_kind,
        },
        "grid": {"kind": gs.profile.grid.kind, "dimension": gs.profile.grid.dimension,
                 "radius": gs.profile.grid.radius, "n_nodes": gs.profile.grid.size},
        "report": {k: getattr(gs.report, k) for k in
                   ("mass", "grad2", "G", "Lp1", "L_omega", "E", "S", "K", "Q")},
        "residual": gs.residual, "d_omega": gs.d_omega, "omega0": gs.omega0,
        "method": gs.method, "iterations": gs.iterations, "converged": gs.converged,
    }
    with open(json_path, "w") as fh:
        json.dump(header, fh, indent=1)
    return {"csv": csv_path, "json": json_path}


def load_ground_state(directory: str, stem: str = "ground_state") -> GroundState:
    with open(os.path.join(directory, f"{stem}.json")) as fh:
        head = json.load(fh)
    params = ModelParams(**head["params"])
    g = head["grid"]
    grid = build_grid(g["kind"], g["dimension"], g["radius"], g["n_nodes"])
    rows = np.loadtxt(os.path.join(directory, f"{stem}.csv"),
                      delimiter=",", skiprows=1)
    values = rows[:, 1] + 1j * rows[:, 2]
    profile = Profile(grid, values)
    report = FunctionalReport(**head["report"])
    return GroundState(profile=profile, params=params, method=head["method"],
                       report=report, residual=head["residual"],
                       d_omega=head["d_omega"], omega0=head["omega0"],
                       iterations=head["iterations"], converged=head["converged"])
