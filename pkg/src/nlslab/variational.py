"""Scaling analysis along the mass-preserving dilation, and the inequality
machinery behind the blowup argument.

For any field v the action along the dilation v^lam is the closed-form
power curve

    S(lam) = A lam^2 + B - C lam^alpha - D lam^beta,
    A = grad2/2,  B = omega mass/2,  C = G/2,  D = Lp1/(p+1),

with 0 < alpha < 2 < beta.  Everything here -- the second variation at
lam = 1 (the instability condition), the elementary g-functions whose signs
push the key inequality through, set membership, and the omega-scan for the
onset of the instability condition -- reduces to this curve plus the
functional report of the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functionals import FunctionalReport, eval_report
from .ground_state import GroundState, SolverError, solve_ground_state
from .grids import Grid, build_grid
from .params import ModelParams
from .profiles import Profile

EPS = np.finfo(float).eps


class InequalityViolation(AssertionError):
    """A numerically certified inequality from the analysis failed."""


# ======================================================================
# action curve
# ======================================================================
@dataclass(frozen=True)
class ActionCurve:
    A: float
    B: float
    C: float
    D: float
    alpha: float
    beta: float
    p: float

    @classmethod
    def from_report(cls, rep: FunctionalReport, params: ModelParams) -> "ActionCurve":
        return cls(A=0.5 * rep.grad2, B=0.5 * params.omega * rep.mass,
                   C=0.5 * rep.G, D=rep.Lp1 / (params.p + 1.0),
                   alpha=params.alpha, beta=params.beta, p=params.p)

    def S(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.A * lam ** 2 + self.B - self.C * lam ** self.alpha \
            - self.D * lam ** self.beta

    def dS(self, lam):
        lam = np.asarray(lam, dtype=float)
        a, b = self.alpha, self.beta
        return 2 * self.A * lam - a * self.C * lam ** (a - 1) - b * self.D * lam ** (b - 1)

    def d2S(self, lam):
        lam = np.asarray(lam, dtype=float)
        a, b = self.alpha, self.beta
        return 2 * self.A - a * (a - 1) * self.C * lam ** (a - 2) \
            - b * (b - 1) * self.D * lam ** (b - 2)

    def d3S(self, lam):
        lam = np.asarray(lam, dtype=float)
        a, b = self.alpha, self.beta
        return -a * (a - 1) * (a - 2) * self.C * lam ** (a - 3) \
            - b * (b - 1) * (b - 2) * self.D * lam ** (b - 3)

    def Q(self, lam):
        """lam * S'(lam); the virial functional of the dilated field."""
        lam = np.asarray(lam, dtype=float)
        a, b = self.alpha, self.beta
        return 2 * self.A * lam ** 2 - a * self.C * lam ** a - b * self.D * lam ** b

    def dQ(self, lam):
        return self.dS(lam) + np.asarray(lam, dtype=float) * self.d2S(lam)

    def K(self, lam):
        """Nehari functional of the dilated field."""
        lam = np.asarray(lam, dtype=float)
        return 2 * self.A * lam ** 2 + 2 * self.B - 2 * self.C * lam ** self.alpha \
            - (self.p + 1.0) * self.D * lam ** self.beta

    def report_at(self, lam: float, params: ModelParams) -> FunctionalReport:
        """Exact functional report of v^lam from the curve coefficients."""
        return FunctionalReport.from_parts(
            mass=2.0 * self.B / params.omega if params.omega != 0 else float("nan"),
            grad2=2.0 * self.A * lam ** 2,
            G=2.0 * self.C * lam ** self.alpha,
            Lp1=(self.p + 1.0) * self.D * lam ** self.beta,
            params=params)


def action_curve(v: Profile | FunctionalReport, params: ModelParams) -> ActionCurve:
    rep = v if isinstance(v, FunctionalReport) else eval_report(v, params)
    return ActionCurve.from_report(rep, params)


def second_variation_at_1(gs: GroundState) -> float:
    """d^2/dlam^2 S(phi^lam) at lam = 1; <= 0 is the strong-instability
    hypothesis.  Equals grad2 - alpha(alpha-1)/2 G - beta(beta-1)/(p+1) Lp1."""
    return float(action_curve(gs.report, gs.params).d2S(1.0))


# ======================================================================
# the elementary g-chain of the key lemma
# ======================================================================
@dataclass
class GChainReport:
    alpha: float
    beta: float
    lambdas: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g3_prime: np.ndarray
    g1_limit_at_1: float           # analytic boundary value
    g2_at_1: float
    g3_at_1: float
    violations: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations


def _g2_terms(alpha, beta, lam):
    t = np.empty((4,) + lam.shape)
    t[0] = 2 * alpha * (2 - alpha) * lam ** beta
    t[1] = -alpha * beta * (beta - alpha) * lam ** 2
    t[2] = 2 * beta * (beta - 2) * lam ** alpha
    t[3] = -(beta - alpha) * (beta - 2) * (2 - alpha)
    return t


def g_chain(alpha: float, beta: float, lambdas: np.ndarray | None = None,
            n_points: int = 10000, tol: float = 1e-12,
            raise_on_violation: bool = True) -> GChainReport:
    """Evaluate g1 >= 0, g2 <= 0, g3 >= 0, g3' <= 0 on a grid in (0, 1).

    g3(lam) = (2-a) lam^(b-a) - (b-a) lam^(2-a) + b - 2
    g2(lam) = 2a(2-a) lam^b - ab(b-a) lam^2 + 2b(b-2) lam^a - (b-a)(b-2)(2-a)
    g1(lam) = (2 - a lam^(2-a)) (2 lam^b - b lam^2 - 2 + b)
              / (b lam^(b-a) (a lam^2 - 2 lam^a - a + 2))
              - lam^(2-b) - (b-a-2)/a

    All four vanish (or their limits vanish) at lam = 1; any sign violation
    beyond the tolerance contradicts the analysis and is a hard failure.
    g1 is evaluated only up to 1 - 1e-6 (removable 0/0 at 1); the quoted
    tolerance is relative to the magnitude of the evaluated terms, with a
    floating-point conditioning estimate added where the 0/0 cancellation
    inflates round-off.
    """
    if not (0.0 < alpha < 2.0 < beta):
        raise ValueError(f"need 0 < alpha < 2 < beta, got ({alpha}, {beta})")
    if lambdas is None:
        lambdas = np.linspace(1e-4, 1.0 - 1e-6, n_points)
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam <= 0.0) or np.any(lam > 1.0):
        raise ValueError("lambda grid must lie in (0, 1]")
    lam = np.minimum(lam, 1.0 - 1e-6)
    a, b = float(alpha), float(beta)

    g3 = (2 - a) * lam ** (b - a) - (b - a) * lam ** (2 - a) + (b - 2)
    g3_scale = (2 - a) * lam ** (b - a) + (b - a) * lam ** (2 - a) + (b - 2)
    g3p = -(b - a) * (2 - a) * lam ** (1 - a) * (1.0 - lam ** (b - 2))

    g2t = _g2_terms(a, b, lam)
    g2 = g2t.sum(axis=0)
    g2_scale = np.abs(g2t).sum(axis=0)

    num = 2 * lam ** b - b * lam ** 2 - 2 + b
    num_scale = 2 * lam ** b + b * lam ** 2 + 2 + b
    den = a * lam ** 2 - 2 * lam ** a - a + 2
    den_scale = a * lam ** 2 + 2 * lam ** a + a + 2
    pref = (2 - a * lam ** (2 - a)) / (b * lam ** (b - a))
    t1 = pref * num / den
    t2 = lam ** (2 - b)
    t3 = (b - a - 2) / a
    g1 = t1 - t2 - t3
    # conditioning of the 0/0 ratio near lam = 1: relative error of num and
    # den is eps * (sum of |terms|) / |value|
    t1_err = np.abs(t1) * EPS * (num_scale / np.maximum(np.abs(num), 1e-300)
                                 + den_scale / np.maximum(np.abs(den), 1e-300))
    g1_scale = np.abs(t1) + np.abs(t2) + abs(t3)

    violations = {}
    bad = g3 < -(tol * np.maximum(1.0, g3_scale))
    if np.any(bad):
        violations["g3"] = (lam[bad], g3[bad])
    bad = g3p > tol * np.maximum(1.0, (b - a) * (2 - a) * lam ** (1 - a))
    if np.any(bad):
        violations["g3_prime"] = (lam[bad], g3p[bad])
    bad = g2 > tol * np.maximum(1.0, g2_scale)
    if np.any(bad):
        violations["g2"] = (lam[bad], g2[bad])
    bad = g1 < -(tol * np.maximum(1.0, g1_scale) + 8.0 * t1_err)
    if np.any(bad):
        violations["g1"] = (lam[bad], g1[bad])

    g2_at_1 = float(_g2_terms(a, b, np.asarray([1.0])).sum())
    g3_at_1 = float((2 - a) - (b - a) + b - 2)
    report = GChainReport(alpha=a, beta=b, lambdas=lam, g1=g1, g2=g2, g3=g3,
                          g3_prime=g3p, g1_limit_at_1=0.0,
                          g2_at_1=g2_at_1, g3_at_1=g3_at_1,
                          violations=violations)
    if raise_on_violation and violations:
        worst = {k: (v[0][np.argmax(np.abs(v[1]))], v[1][np.argmax(np.abs(v[1]))])
                 for k, v in violations.items()}
        raise InequalityViolation(
            f"g-chain sign violation for alpha={a}, beta={b}: {worst}")
    return report


# ======================================================================
# set membership
# ======================================================================
@dataclass(frozen=True)
class SetMembership:
    in_A: bool
    in_B: bool
    s_margin: float        # S(phi) - S(v)        > 0 required (strict)
    mass_margin: float     # mass(phi) - mass(v)  >= 0 required
    lp1_margin: float      # Lp1(v) - Lp1(phi)    > 0 required (strict)
    q_margin: float        # -Q(v)                > 0 required for B (strict)


def membership_from_reports(rv: FunctionalReport, rphi: FunctionalReport,
                            slack: float = 0.0) -> SetMembership:
    s_m = rphi.S - rv.S
    m_m = rphi.mass - rv.mass
    l_m = rv.Lp1 - rphi.Lp1
    q_m = -rv.Q
    in_a = (s_m > -slack) and (m_m >= -slack) and (l_m > -slack)
    in_b = in_a and (q_m > -slack)
    return SetMembership(in_A=in_a, in_B=in_b, s_margin=s_m,
                         mass_margin=m_m, lp1_margin=l_m, q_margin=q_m)


def membership(v: Profile | FunctionalReport, gs: GroundState,
               slack: float = 0.0) -> SetMembership:
    """Membership of v in the sets A_omega / B_omega relative to gs, with
    the four signed margins (auditable near the boundary).

    Profiles are compared against the grid-pathway report of phi (same
    quadrature on both sides); report inputs, which normally descend from
    gs.report's action curve, are compared against gs.report itself.
    """
    if isinstance(v, FunctionalReport):
        return membership_from_reports(v, gs.report, slack=slack)
    return membership_from_reports(eval_report(v, gs.params), gs.grid_report,
                                   slack=slack)


# ======================================================================
# key inequality (the heart of the blowup proof)
# ======================================================================
@dataclass
class KeyInequalityReport:
    hypotheses_met: bool
    reasons: list
    lambda0: float | None = None
    final_margin: float | None = None       # S(v) - S(phi) - Q(v)/2  (>= -tol)
    f_margin: float | None = None           # f(1) - f(lambda0)       (diagnostic)
    ineq1_margin: float | None = None       # mass bound              (diagnostic)
    ineq3_margin: float | None = None       # potential bound         (diagnostic)
    warnings: list = field(default_factory=list)
    passed: bool = False


def key_inequality(v: Profile | FunctionalReport, gs: GroundState,
                   hyp_slack: float = 1e-10, tol: float = 1e-8,
                   raise_on_violation: bool = True) -> KeyInequalityReport:
    """Check Q(v)/2 <= S(v) - S(phi) for admissible v, with the proof's
    intermediate bounds as diagnostics.

    Hypotheses: mass(v) <= mass(phi), Lp1(v) >= Lp1(phi), Q(v) <= 0 (each
    within hyp_slack), and the standing instability condition S''(1) <= 0
    at the ground state.  Inputs failing them are rejected, not evaluated.
    A final-inequality violation is a hard failure; a violated intermediate
    bound alone is only a warning (the chain is sufficient, not necessary).
    """
    params = gs.params
    if isinstance(v, FunctionalReport):
        rv, rphi = v, gs.report
    else:
        rv, rphi = eval_report(v, params), gs.grid_report
    reasons = []
    scale_m = max(1.0, rphi.mass)
    scale_l = max(1.0, rphi.Lp1)
    if rv.mass > rphi.mass + hyp_slack * scale_m:
        reasons.append(f"mass(v) = {rv.mass:.6g} > mass(phi) = {rphi.mass:.6g}")
    if rv.Lp1 < rphi.Lp1 - hyp_slack * scale_l:
        reasons.append(f"Lp1(v) = {rv.Lp1:.6g} < Lp1(phi) = {rphi.Lp1:.6g}")
    if rv.Q > hyp_slack * max(1.0, rv.grad2):
        reasons.append(f"Q(v) = {rv.Q:.6g} > 0")
    s2 = second_variation_at_1(gs)
    if s2 > hyp_slack * max(1.0, rphi.grad2):
        reasons.append(f"instability condition fails at gs: S''(1) = {s2:.6g} > 0")
    if reasons:
        return KeyInequalityReport(hypotheses_met=False, reasons=reasons)

    a, b, p = params.alpha, params.beta, params.p
    lam0 = min((rphi.Lp1 / rv.Lp1) ** (1.0 / b), 1.0)
    curve = ActionCurve.from_report(rv, params)
    fval = lambda lam: float(curve.S(lam)) - 0.5 * lam * lam * rv.Q
    f_margin = fval(1.0) - fval(lam0)

    # mass bound from alpha*K(phi) - (alpha+1)*Q(phi) = 0 and S''(1) <= 0
    ineq1_rhs = (1.0 + b * (b - a - 2.0) / ((p + 1.0) * a)) * lam0 ** b * rv.Lp1
    ineq1_margin = ineq1_rhs - params.omega * rv.mass
    # potential bound
    ineq3_rhs = 2.0 * b / ((p + 1.0) * (2.0 - a * lam0 ** (2.0 - a))) \
        * (lam0 ** (2.0 - a) + (b - a - 2.0) / a * lam0 ** (b - a)) * rv.Lp1
    ineq3_margin = ineq3_rhs - rv.G

    final_margin = (rv.S - rphi.S) - 0.5 * rv.Q
    warnings = []
    if f_margin < -tol * max(1.0, abs(fval(1.0))):
        warnings.append(f"intermediate f(lam0) <= f(1) violated by {f_margin:.3e}")
    if ineq1_margin < -tol * max(1.0, abs(ineq1_rhs)):
        warnings.append(f"intermediate mass bound violated by {ineq1_margin:.3e}")
    if ineq3_margin < -tol * max(1.0, abs(ineq3_rhs)):
        warnings.append(f"intermediate potential bound violated by {ineq3_margin:.3e}")
    passed = final_margin >= -tol
    rep = KeyInequalityReport(hypotheses_met=True, reasons=[], lambda0=lam0,
                              final_margin=final_margin, f_margin=f_margin,
                              ineq1_margin=ineq1_margin, ineq3_margin=ineq3_margin,
                              warnings=warnings, passed=passed)
    if raise_on_violation and not passed:
        raise InequalityViolation(
            f"key inequality violated: Q/2 - (S(v) - S(phi)) = {-final_margin:.6e}")
    return rep


# ======================================================================
# Lemma on equal-L^{p+1} competitors (variational characterization)
# ======================================================================
@dataclass
class CompetitorReport:
    k_margins: np.ndarray
    s_margins: np.ndarray
    tol: float
    passed: bool


def equal_norm_competitors(gs: GroundState, competitors: list[Profile],
                           tol_scale: float = 1e-8,
                           raise_on_violation: bool = True) -> CompetitorReport:
    """K(v) >= 0 and S(v) >= S(phi) for any v with Lp1(v) = Lp1(phi).

    Each competitor is amplitude-rescaled to equal L^{p+1} norm first.
    """
    params = gs.params
    rphi = gs.grid_report
    tol = tol_scale * abs(rphi.S)
    k_m, s_m = [], []
    for u in competitors:
        ru = eval_report(u, params)
        if ru.Lp1 <= 0:
            raise ValueError("competitor must be nonzero")
        c = (rphi.Lp1 / ru.Lp1) ** (1.0 / (params.p + 1.0))
        rv = eval_report(u.amplitude_scale(c), params)
        k_m.append(rv.K)
        s_m.append(rv.S - rphi.S)
    k_m = np.asarray(k_m)
    s_m = np.asarray(s_m)
    passed = bool(np.all(k_m >= -tol * max(1.0, rphi.L_omega / abs(rphi.S)))
                  and np.all(s_m >= -tol))
    rep = CompetitorReport(k_margins=k_m, s_margins=s_m, tol=tol, passed=passed)
    if raise_on_violation and not passed:
        raise InequalityViolation(
            f"equal-norm competitor beats the ground state: min K = {k_m.min():.3e}, "
            f"min S - S(phi) = {s_m.min():.3e}")
    return rep


# ======================================================================
# randomized sweeps
# ======================================================================
def random_competitors(gs: GroundState, n: int, seed: int) -> list[Profile]:
    """Bump / Gaussian / shifted-ground-state families for the equal-norm
    competitor sweep (deterministic for a fixed seed)."""
    rng = np.random.default_rng(seed)
    grid = gs.profile.grid
    x = grid.nodes
    width0 = max(gs.profile.characteristic_width(), 0.3)
    out = []
    base = gs.profile.values.real
    for i in range(n):
        kind = i % 3
        if kind == 0:        # random Gaussian
            w = width0 * rng.uniform(0.4, 2.5)
            c = rng.uniform(-2.0, 2.0) * width0
            vals = np.exp(-((x - c) / w) ** 2)
        elif kind == 1:      # random smooth bump superposition
            vals = np.zeros_like(x)
            for _ in range(rng.integers(1, 4)):
                w = width0 * rng.uniform(0.5, 2.0)
                c = rng.uniform(-1.5, 1.5) * width0
                vals = vals + rng.uniform(0.2, 1.0) * np.exp(-((x - c) / w) ** 2)
        else:                # shifted, slightly distorted ground state
            s = rng.uniform(-1.0, 1.0) * width0
            from .profiles import _resample
            vals = _resample(grid, base.astype(complex), x + s).real
            vals = vals * (1.0 + rng.uniform(-0.05, 0.05)
                           * np.cos(rng.uniform(0.5, 2.0) * x / width0))
        out.append(Profile(grid, vals.astype(complex)))
    return out


@dataclass
class KeyInequalitySweep:
    n_requested: int
    n_evaluated: int
    n_rejected: int
    min_final_margin: float
    n_violations: int
    n_intermediate_warnings: int

    @property
    def passed(self) -> bool:
        return self.n_violations == 0 and self.n_evaluated > 0


def key_inequality_sweep(gs: GroundState, n_samples: int, seed: int,
                         tol: float = 1e-8) -> KeyInequalitySweep:
    """Monte-Carlo sweep of the key inequality over randomized
    hypothesis-satisfying fields (dilated / perturbed / mass-trimmed ground
    states; candidates failing the hypotheses are rejected, not evaluated).

    Functionals of phi and of every sample come from the same grid
    quadrature, so margins near phi are not polluted by mixing evaluation
    pathways.
    """
    rng = np.random.default_rng(seed)
    params = gs.params
    grid = gs.profile.grid
    rphi = gs.grid_report
    x = grid.nodes
    width0 = max(gs.profile.characteristic_width(), 0.3)
    n_eval = n_rej = n_viol = n_warn = 0
    min_margin = math.inf
    base = Profile(grid, gs.profile.values)     # tag stripped: grid pathway
    while n_eval < n_samples:
        lam = rng.uniform(1.0, 2.2)
        v = base.dilate(lam)
        mode = rng.integers(0, 3)
        if mode == 1:        # modulated bump on top
            amp = rng.uniform(0.0, 0.08)
            bump = 1.0 + amp * np.cos(rng.uniform(0.3, 3.0) * x / width0) \
                * np.exp(-(x / (2.5 * width0)) ** 2)
            v = Profile(grid, v.values * bump)
        elif mode == 2:      # trim mass below the ground state's
            v = v.amplitude_scale(rng.uniform(0.9, 1.0))
        rv = eval_report(v, params)
        if rv.mass > rphi.mass * (1.0 + 1e-12) or rv.Lp1 < rphi.Lp1 \
                or rv.Q > 0.0:
            n_rej += 1
            continue
        curve = ActionCurve.from_report(rv, params)
        lam0 = min((rphi.Lp1 / rv.Lp1) ** (1.0 / params.beta), 1.0)
        fv = lambda s: float(curve.S(s)) - 0.5 * s * s * rv.Q
        if fv(1.0) - fv(lam0) < -tol * max(1.0, abs(fv(1.0))):
            n_warn += 1
        margin = (rv.S - rphi.S) - 0.5 * rv.Q
        min_margin = min(min_margin, margin)
        if margin < -tol:
            n_viol += 1
        n_eval += 1
    return KeyInequalitySweep(n_requested=n_samples, n_evaluated=n_eval,
                              n_rejected=n_rej, min_final_margin=min_margin,
                              n_violations=n_viol,
                              n_intermediate_warnings=n_warn)


# ======================================================================
# scaling family phi^lam, lam > 1
# ======================================================================
@dataclass
class ScalingFamilyRow:
    lam: float
    S: float
    dS: float
    d2S: float
    Q: float
    dQ: float
    in_B: bool


@dataclass
class ScalingFamilyReport:
    rows: list
    coefficient_margin: float      # alpha(2-alpha)C - beta(beta-2)D <= 0
    passed: bool


def check_scaling_family(gs: GroundState, lambdas,
                         tol: float = 1e-9,
                         raise_on_violation: bool = True) -> ScalingFamilyReport:
    """Under S''(1) <= 0, every lam > 1 has S(lam) < S(1), S'(lam) < 0,
    S''(lam) < S''(1), Q(lam) < 0, dQ/dlam < 0, and phi^lam in B_omega."""
    curve = action_curve(gs.report, gs.params)
    s2_1 = float(curve.d2S(1.0))
    scale = max(1.0, gs.report.grad2)
    if s2_1 > tol * scale:
        raise SolverError(f"scaling family requires S''(1) <= 0, got {s2_1:.4g}")
    coeff_margin = curve.beta * (curve.beta - 2.0) * curve.D \
        - curve.alpha * (2.0 - curve.alpha) * curve.C
    rows = []
    ok = coeff_margin >= -tol * scale
    s1 = float(curve.S(1.0))
    for lam in np.atleast_1d(lambdas):
        lam = float(lam)
        if lam <= 1.0:
            raise ValueError("scaling family is defined for lam > 1")
        rep_lam = curve.report_at(lam, gs.params)
        row = ScalingFamilyRow(lam=lam, S=float(curve.S(lam)), dS=float(curve.dS(lam)),
                               d2S=float(curve.d2S(lam)), Q=float(curve.Q(lam)),
                               dQ=float(curve.dQ(lam)),
                               in_B=membership_from_reports(rep_lam, gs.report).in_B)
        rows.append(row)
        ok = ok and row.S < s1 + tol * scale and row.dS < tol * scale \
            and row.d2S < s2_1 + tol * scale and row.Q < tol * scale \
            and row.dQ < tol * scale and row.in_B
    rep = ScalingFamilyReport(rows=rows, coefficient_margin=coeff_margin, passed=ok)
    if raise_on_violation and not ok:
        raise InequalityViolation("dilated ground-state family violates the "
                                  f"instability ordering: {rows}")
    return rep


# ======================================================================
# omega scan for the onset of the instability condition
# ======================================================================
@dataclass
class OmegaScanRow:
    omega: float
    S: float
    E: float
    d: float
    s2: float
    sign: int
    converged: bool
    error: str = ""


@dataclass
class OmegaScanResult:
    rows: list
    bracket: tuple | None       # (last omega with s2 > 0, first with s2 <= 0)

    def empirical_omega1(self) -> float | None:
        return None if self.bracket is None else self.bracket[1]


def default_scan_grid(params: ModelParams, omega: float) -> Grid:
    """Survey-resolution grid scaled to the ground-state width at omega."""
    radius = max(25.0 / math.sqrt(max(omega, 1e-3)), 5.0)
    return build_grid("line1d", 1, radius, 8192)


def omega_scan(base: ModelParams, omega_list, grid_factory=None,
               solver_kwargs: dict | None = None) -> OmegaScanResult:
    """Solve the ground state along a frequency list and record S''(1).

    Individual solve failures are recorded and the scan continues.  The
    bracket is the last sign change from positive to non-positive S''(1)
    along the sorted list.
    """
    if grid_factory is None:
        grid_factory = lambda om: default_scan_grid(base, om)
    solver_kwargs = dict(solver_kwargs or {})
    rows = []
    for om in sorted(float(o) for o in np.atleast_1d(omega_list)):
        pars = base.with_omega(om)
        try:
            gs = solve_ground_state(pars, grid_factory(om), **solver_kwargs)
            s2 = second_variation_at_1(gs)
            rows.append(OmegaScanRow(omega=om, S=gs.report.S, E=gs.report.E,
                                     d=gs.d_omega, s2=s2,
                                     sign=(1 if s2 > 0 else -1), converged=True))
        except (SolverError, ValueError) as exc:
            rows.append(OmegaScanRow(omega=om, S=math.nan, E=math.nan, d=math.nan,
                                     s2=math.nan, sign=0, converged=False,
                                     error=str(exc)))
    bracket = None
    good = [r for r in rows if r.converged]
    for lo, hi in zip(good, good[1:]):
        if lo.sign > 0 and hi.sign < 0:
            bracket = (lo.omega, hi.omega)
    if bracket is None and good and good[0].sign < 0:
        bracket = (None, good[0].omega)   # condition already holds at the start
    return OmegaScanResult(rows=rows, bracket=bracket)


def refine_omega1(base: ModelParams, lo: float, hi: float,
                  width_tol: float = 1e-3, grid_factory=None,
                  solver_kwargs: dict | None = None,
                  max_steps: int = 40) -> tuple[float, float]:
    """Bisect the bracket [lo, hi] of the S''(1) sign change below width_tol."""
    if grid_factory is None:
        grid_factory = lambda om: default_scan_grid(base, om)
    solver_kwargs = dict(solver_kwargs or {})
    for _ in range(max_steps):
        if hi - lo <= width_tol:
            break
        mid = 0.5 * (lo + hi)
        gs = solve_ground_state(base.with_omega(mid), grid_factory(mid),
                                **solver_kwargs)
        if second_variation_at_1(gs) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi
