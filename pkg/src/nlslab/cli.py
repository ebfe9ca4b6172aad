"""Command-line orchestration: configuration, subcommands, persistence.

Subcommands:

  ground-state         solve and serialize the ground state, emit the
                       action-vs-dilation curve
  omega-scan           instability-condition onset along a frequency list,
                       with bisection refinement of the sign-change bracket
  verify-inequalities  equal-norm competitor sweep and the key-inequality
                       Monte Carlo at the configured parameter point
  g-chain              sign report of the elementary g-functions
  simulate             standing-wave evolution at the configured point
  blowup-experiment    full pipeline: solve, cutoff datum, membership,
                       evolve, invariance monitor, blowup verdict
  report               human-readable summary + plot-ready data from a
                       finished run directory

Every run writes a JSON manifest (config snapshot, seeds, artifact list,
verdicts, wall-clock).  With a fixed config and seed all CSV artifacts are
bit-identical across runs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import (ConfigError, RunConfig, Timer, dump_config, fmt,
                     load_config, load_manifest, new_manifest, write_csv,
                     write_plot_data)
from .dynamics import build_cutoff_data, monitor_invariance, simulate, virial_consistency
from .functionals import eval_report
from .ground_state import (SolverError, compute_d, delta_ground_state_closed_form,
                           estimate_omega0, save_ground_state, solve_ground_state)
from .params import ModelParams
from .variational import (action_curve, check_scaling_family, equal_norm_competitors,
                          g_chain, key_inequality_sweep, membership, omega_scan,
                          random_competitors, refine_omega1, second_variation_at_1)

SUBCOMMANDS = ("ground-state", "omega-scan", "verify-inequalities", "g-chain",
               "simulate", "blowup-experiment", "report")


def _solve_configured(cfg: RunConfig, omega: float | None = None, grid=None):
    params = cfg.model if omega is None else cfg.model.with_omega(omega)
    grid = cfg.make_grid(omega) if grid is None else grid
    if params.is_delta and cfg.solver_method == "closed_form":
        return delta_ground_state_closed_form(params, grid)
    return solve_ground_state(params, grid, method=cfg.solver_method,
                              tol=cfg.solver_tol, max_iter=cfg.solver_max_iter,
                              richardson=cfg.solver_richardson)


# ----------------------------------------------------------------------
# subcommand bodies (each returns a verdict dict and appends artifacts)
# ----------------------------------------------------------------------
def _run_ground_state(cfg: RunConfig, man) -> dict:
    gs = _solve_configured(cfg)
    paths = save_ground_state(gs, man.out_dir)
    for p in paths.values():
        man.add_artifact(p)
    d1, d2, d3 = compute_d(gs)
    lams = np.linspace(0.5, 2.0, 301)
    curve = action_curve(gs.report, gs.params)
    dat = write_plot_data(os.path.join(man.out_dir, "action_curve.dat"),
                          lams, curve.S(lams), "lambda  S(v^lambda)")
    man.add_artifact(dat)
    s2 = second_variation_at_1(gs)
    return {
        "residual": gs.residual, "k_rel": gs.k_rel, "q_rel": gs.q_rel,
        "omega0": gs.omega0, "d_omega": d1,
        "d_spread": max(abs(d1 - d2), abs(d1 - d3)) / abs(d1),
        "second_variation_at_1": s2,
        "instability_condition": bool(s2 <= 0.0),
        "certified": gs.certified(),
        "passed": gs.certified(),
    }


def _run_omega_scan(cfg: RunConfig, man) -> dict:
    if not cfg.omega_list:
        raise ConfigError("omega-scan needs experiment.omega_list")
    solver_kwargs = dict(method=cfg.solver_method, tol=cfg.solver_tol,
                         max_iter=cfg.solver_max_iter,
                         richardson=cfg.solver_richardson)
    grid_factory = None if cfg.grid_radius is None else \
        (lambda om: cfg.make_grid(om))
    if cfg.workers > 1:
        # embarrassingly parallel; aggregation sorted by omega keeps output
        # deterministic
        def one(om):
            return omega_scan(cfg.model, [om], grid_factory, solver_kwargs).rows[0]
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = sorted(pool.map(one, cfg.omega_list), key=lambda r: r.omega)
        from .variational import OmegaScanResult
        bracket = None
        good = [r for r in rows if r.converged]
        for lo, hi in zip(good, good[1:]):
            if lo.sign > 0 and hi.sign < 0:
                bracket = (lo.omega, hi.omega)
        if bracket is None and good and good[0].sign < 0:
            bracket = (None, good[0].omega)
        scan = OmegaScanResult(rows=rows, bracket=bracket)
    else:
        scan = omega_scan(cfg.model, cfg.omega_list, grid_factory, solver_kwargs)
    csv = write_csv(os.path.join(man.out_dir, "omega_scan.csv"),
                    ["omega", "S", "E", "d", "s2", "sign", "converged"],
                    [(r.omega, r.S, r.E, r.d, r.s2, r.sign, int(r.converged))
                     for r in scan.rows])
    man.add_artifact(csv)
    good = [r for r in scan.rows if r.converged]
    dat = write_plot_data(os.path.join(man.out_dir, "omega_scan.dat"),
                          [r.omega for r in good], [r.s2 for r in good],
                          "omega  d2S/dlambda2 at lambda=1")
    man.add_artifact(dat)
    verdict = {"n_points": len(scan.rows),
               "n_converged": len(good),
               "bracket": list(scan.bracket) if scan.bracket else None}
    if scan.bracket and scan.bracket[0] is not None:
        lo, hi = refine_omega1(cfg.model, *scan.bracket,
                               width_tol=cfg.bracket_tol,
                               grid_factory=grid_factory,
                               solver_kwargs=solver_kwargs)
        verdict["refined_bracket"] = [lo, hi]
        verdict["bracket_width"] = hi - lo
    verdict["passed"] = bool(good)
    return verdict


def _run_verify_inequalities(cfg: RunConfig, man) -> dict:
    gs = _solve_configured(cfg)
    comp = equal_norm_competitors(gs, random_competitors(gs, 120, cfg.seed),
                                  raise_on_violation=False)
    sweep = key_inequality_sweep(gs, cfg.n_samples, cfg.seed + 1)
    csv = write_csv(os.path.join(man.out_dir, "competitor_margins.csv"),
                    ["k_margin", "s_margin"],
                    list(zip(comp.k_margins.tolist(), comp.s_margins.tolist())))
    man.add_artifact(csv)
    verdict = {
        "competitors": {"n": len(comp.k_margins),
                        "min_k_margin": float(comp.k_margins.min()),
                        "min_s_margin": float(comp.s_margins.min()),
                        "passed": comp.passed},
        "key_inequality": {"n_evaluated": sweep.n_evaluated,
                           "n_rejected": sweep.n_rejected,
                           "min_final_margin": sweep.min_final_margin,
                           "n_violations": sweep.n_violations,
                           "n_intermediate_warnings": sweep.n_intermediate_warnings,
                           "passed": sweep.passed},
        "passed": comp.passed and sweep.passed,
    }
    return verdict


def _run_g_chain(cfg: RunConfig, man) -> dict:
    alpha, beta = cfg.model.alpha, cfg.model.beta
    rep = g_chain(alpha, beta, raise_on_violation=False)
    stride = max(1, len(rep.lambdas) // 2000)
    csv = write_csv(os.path.join(man.out_dir, "g_chain.csv"),
                    ["lambda", "g1", "g2", "g3", "g3_prime"],
                    zip(rep.lambdas[::stride].tolist(), rep.g1[::stride].tolist(),
                        rep.g2[::stride].tolist(), rep.g3[::stride].tolist(),
                        rep.g3_prime[::stride].tolist()))
    man.add_artifact(csv)
    return {"alpha": alpha, "beta": beta,
            "g2_at_1": rep.g2_at_1, "g3_at_1": rep.g3_at_1,
            "violations": sorted(rep.violations),
            "passed": rep.passed}


def _write_trace(trace, man, stem: str):
    in_a = trace.in_A if trace.in_A is not None else np.zeros(len(trace.times), bool)
    in_b = trace.in_B if trace.in_B is not None else np.zeros(len(trace.times), bool)
    csv = write_csv(os.path.join(man.out_dir, f"{stem}.csv"),
                    ["t", "mass", "energy", "action", "virial", "Q", "grad2",
                     "in_A", "in_B"],
                    [(float(t), float(m), float(e), float(s), float(v),
                      float(q), float(g), int(a), int(b))
                     for t, m, e, s, v, q, g, a, b in
                     zip(trace.times, trace.mass, trace.energy, trace.action,
                         trace.virial, trace.Q, trace.grad2, in_a, in_b)])
    man.add_artifact(csv)
    dat = write_plot_data(os.path.join(man.out_dir, f"{stem}_virial.dat"),
                          trace.times, trace.virial, "t  ||x u||^2")
    man.add_artifact(dat)
    return csv


def _run_simulate(cfg: RunConfig, man) -> dict:
    gs = _solve_configured(cfg)
    trace = simulate(gs.profile, cfg.model, dt=cfg.dt, t_max=cfg.t_max,
                     sample_every=cfg.sample_every, gs=gs,
                     conservation_tol=cfg.conservation_tol)
    _write_trace(trace, man, "trace")
    vc = virial_consistency(trace)
    return {"verdict": trace.blowup.kind,
            "mass_drift": trace.mass_drift(),
            "energy_drift": trace.energy_drift(),
            "virial_consistency": vc,
            "passed": trace.blowup.kind == "none"
                      and trace.mass_drift() <= cfg.conservation_tol
                      and trace.energy_drift() <= cfg.conservation_tol}


def _run_blowup_experiment(cfg: RunConfig, man) -> dict:
    gs = _solve_configured(cfg)
    s2 = second_variation_at_1(gs)
    verdict = {"second_variation_at_1": s2, "omega0": gs.omega0,
               "instability_condition": bool(s2 <= 0.0)}
    if s2 > 0.0:
        verdict.update(passed=False,
                       reason="instability condition S''(1) <= 0 not certified")
        return verdict
    fam = check_scaling_family(gs, [cfg.lambda0], raise_on_violation=False)
    verdict["scaling_family_ok"] = fam.passed
    width = gs.profile.characteristic_width()
    m_cut = cfg.cutoff(width)
    u0 = None
    for _ in range(8):
        cand = build_cutoff_data(gs, cfg.lambda0, m_cut)
        mem = membership(cand, gs)
        if mem.in_B:
            u0 = cand
            break
        m_cut *= 1.5
        if 2.0 * m_cut > cand.grid.radius:
            break
    if u0 is None:
        verdict.update(passed=False, reason="no cutoff radius put the datum "
                                            "in B_omega within the domain")
        return verdict
    r0 = eval_report(u0, gs.params)
    verdict["datum"] = {"lambda0": cfg.lambda0, "cutoff_radius": m_cut,
                        "in_B": True,
                        "action_gap": gs.grid_report.S - r0.S,
                        "mass_margin": gs.grid_report.mass - r0.mass}
    trace = simulate(u0, cfg.model, dt=cfg.dt, t_max=cfg.t_max,
                     sample_every=cfg.sample_every, gs=gs,
                     conservation_tol=cfg.conservation_tol)
    _write_trace(trace, man, "blowup_trace")
    inv = monitor_invariance(trace, gs)
    bound = 16.0 * (r0.S - gs.grid_report.S)
    verdict.update({
        "blowup_verdict": trace.blowup.kind,
        "t_star": trace.blowup.t_star,
        "predicted_vanish_time": trace.blowup.predicted_vanish_time,
        "criterion": trace.blowup.criterion,
        "all_samples_in_B": inv.all_in_B,
        "virial_concavity_bound": bound,
        "max_virial_second_difference": inv.max_second_difference,
        "concavity_bound_respected": bool(inv.max_second_difference <= bound + 1e-8),
        "mass_drift": trace.mass_drift(),
        "energy_drift_smooth_window": trace.energy_drift(trace.smooth_slice),
        "smooth_window_end_t": float(trace.times[trace.conserved_until]),
        "virial_consistency_smooth": virial_consistency(trace),
    })
    verdict["passed"] = (trace.blowup.kind == "detected" and inv.all_in_B
                         and verdict["concavity_bound_respected"])
    return verdict


def _run_report(out_dir: str) -> dict:
    manifest = load_manifest(out_dir)
    lines = [f"nlslab {manifest['tool_version']} -- {manifest['subcommand']} run",
             f"status: {manifest['status']}",
             f"seed: {manifest['seed']}   wallclock: {manifest['wallclock_s']} s",
             "", "verdicts:"]

    def walk(d, indent=2):
        for k, v in d.items():
            if isinstance(v, dict):
                lines.append(" " * indent + f"{k}:")
                walk(v, indent + 2)
            else:
                lines.append(" " * indent + f"{k}: {v}")
    walk(manifest.get("verdicts", {}))
    lines.append("")
    lines.append("artifacts:")
    for a in manifest.get("artifacts", []):
        lines.append(f"  {a}")
        if not os.path.exists(os.path.join(out_dir, a)):
            raise ConfigError(f"manifest lists missing artifact {a}")
    path = os.path.join(out_dir, "summary.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return {"summary": path, "n_artifacts": len(manifest.get("artifacts", [])),
            "passed": manifest.get("status") == "ok"}


_RUNNERS = {
    "ground-state": _run_ground_state,
    "omega-scan": _run_omega_scan,
    "verify-inequalities": _run_verify_inequalities,
    "g-chain": _run_g_chain,
    "simulate": _run_simulate,
    "blowup-experiment": _run_blowup_experiment,
}


def run(config_path: str, subcommand: str, out_dir: str,
        overrides: dict | None = None):
    """Execute one subcommand; returns the saved manifest object."""
    if subcommand not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    cfg = load_config(config_path, overrides)
    man = new_manifest(subcommand, cfg, out_dir, overrides)
    with Timer() as t:
        try:
            man.verdicts = _RUNNERS[subcommand](cfg, man)
            man.status = "ok" if man.verdicts.get("passed", True) else "failed"
        except (SolverError, ConfigError, ValueError) as exc:
            man.verdicts = {"error": str(exc), "passed": False}
            man.status = "failed"
    man.wallclock_s = t.elapsed
    man.save()
    return man


def emit_report(out_dir: str) -> dict:
    """Write summary.txt (and validate artifact list) for a finished run."""
    return _run_report(out_dir)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nlslab",
        description="standing waves of NLS with an attractive singular "
                    "potential: ground states, inequality verification, "
                    "blowup experiments")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="INI config file (required except for 'report')")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, help="override experiment.seed")
    ap.add_argument("--workers", type=int, help="override experiment.workers")
    ap.add_argument("--dt", type=float, help="override dynamics.dt")
    ap.add_argument("--tmax", type=float, help="override dynamics.t_max")
    ap.add_argument("--lambda0", type=float, help="override experiment.lambda0")
    ap.add_argument("--cutoff-M", type=float, dest="cutoff_m",
                    help="override experiment.cutoff_radius")
    ap.add_argument("--version", action="version", version=__version__)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.subcommand == "report":
            verdict = emit_report(args.out)
            print(f"report written: {verdict['summary']}")
            return 0 if verdict["passed"] else 2
        if not args.config:
            raise ConfigError("--config is required for this subcommand")
        overrides = {}
        if args.seed is not None:
            overrides["experiment.seed"] = args.seed
        if args.workers is not None:
            overrides["experiment.workers"] = args.workers
        if args.dt is not None:
            overrides["dynamics.dt"] = args.dt
        if args.tmax is not None:
            overrides["dynamics.t_max"] = args.tmax
        if args.lambda0 is not None:
            overrides["experiment.lambda0"] = args.lambda0
        if args.cutoff_m is not None:
            overrides["experiment.cutoff_radius"] = args.cutoff_m
        man = run(args.config, args.subcommand, args.out, overrides)
        print(f"{args.subcommand}: {man.status} "
              f"({man.wallclock_s:.1f} s, manifest in {args.out})")
        for key, val in man.verdicts.items():
            print(f"  {key}: {val}")
        return 0 if man.status == "ok" else 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
