"""Command-line front end.

Exit codes: 0 success, 1 config or parse error, 2 assumption violation,
3 computation failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .config import ConfigError, RunConfig, append_csv, fmt, load_config, write_csv, write_manifest
from .equilibrium import solve_cutoff
from .model import ModelError, QuorumRule, ValidationError, assumption_margins, validate_params
from .plots import fig1_svg, fig2_svg
from .simulator import convergence_study, estimate_aggregation, estimate_reversible, estimate_welfare

EXIT_OK, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_COMPUTE = 0, 1, 2, 3

FIG1_HEADER = ["k", "t_hat_k", "branch"]
FIG2_HEADER = ["k", "frac_H", "frac_L", "diagonal"]
SOLVE_HEADER = ["k", "N", "M", "t_hat", "residual", "bracket_lo", "bracket_hi", "iterations",
                "pivotal_belief"]
CONVERGE_HEADER = ["N", "t_hat", "t_hat_limit", "gap", "p_agg_H", "ci_H_lo", "ci_H_hi", "oracle_H",
                   "p_agg_L", "ci_L_lo", "ci_L_hi", "oracle_L"]
SIMULATE_HEADER = ["k", "N", "M", "cutoff", "replicates", "p_agg_H", "ci_H_lo", "ci_H_hi", "oracle_H",
                   "p_agg_L", "ci_L_lo", "ci_L_hi", "oracle_L", "share_H", "mean_payoff",
                   "payoff_se", "first_best_match", "first_best_payoff"]
REVERSIBLE_HEADER = ["state", "p_S_forever", "ci_lo", "ci_hi", "oracle", "no_winner_bound"]
VALIDATE_HEADER = ["check", "margin", "pass"]


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(cfg: RunConfig) -> tuple[int, list[Path]]:
    p = cfg.params
    margins = assumption_margins(p)
    labels = {
        "rho_H*g - s": "Assumption1 rho_H*g > s",
        "s - rho_L*g": "Assumption1 s > rho_L*g",
        "rho_L*g": "Assumption1 rho_L*g > 0",
        "prior_flow - s": "Assumption2 q0*rho_H*g + (1-q0)*rho_L*g > s",
    }
    rows = []
    for key, label in labels.items():
        ok = margins[key] > 0
        rows.append((label, margins[key], ok))
        print(f"{'PASS' if ok else 'FAIL'}  {label:48s} margin={fmt(margins[key])}")
    code = EXIT_OK
    try:
        validate_params(p)
    except ValidationError as exc:
        for violation, msg in exc.violations:
            print(f"violation {violation.value}: {msg}")
        code = EXIT_ASSUMPTION
    out = _out_dir(cfg)
    path = write_csv(out / "validate.csv", VALIDATE_HEADER, rows)
    return code, [path]


def cmd_solve(cfg: RunConfig) -> tuple[int, list[Path]]:
    rule = QuorumRule(cfg.k, cfg.N)
    sol = solve_cutoff(cfg.params, rule, cfg.tol)
    print(f"k={fmt(cfg.k)} N={cfg.N} M={rule.M}")
    print(f"t_hat={fmt(sol.t_hat)} residual={fmt(sol.residual)} "
          f"pivotal_belief={fmt(sol.pivotal_belief)} iterations={sol.iterations}")
    path = append_csv(_out_dir(cfg) / "solve.csv", SOLVE_HEADER,
                      [cfg.k, cfg.N, rule.M, sol.t_hat, sol.residual, sol.bracket_lo,
                       sol.bracket_hi, sol.iterations, sol.pivotal_belief])
    return EXIT_OK, [path]


def k_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.k_min, cfg.k_max, cfg.k_points)


def cmd_sweep(cfg: RunConfig) -> tuple[int, list[Path]]:
    prof = asy.asymptotic_profile(cfg.params, [float(k) for k in k_grid(cfg)])
    meta = {"k_bar": prof.k_bar, "k_star": prof.k_star, "t_bar": prof.t_bar}
    out = _out_dir(cfg)
    fig1 = write_csv(out / "fig1.csv", FIG1_HEADER,
                     [(pt.k, pt.t_hat_k, pt.branch) for pt in prof.points], meta)
    fig2 = write_csv(out / "fig2.csv", FIG2_HEADER,
                     [(pt.k, pt.frac_H, pt.frac_L, pt.k) for pt in prof.points], meta)
    outputs = [fig1, fig2]
    if cfg.svg:
        for name, render, src in (("fig1.svg", fig1_svg, fig1), ("fig2.svg", fig2_svg, fig2)):
            path = out / name
            path.write_text(render(src.read_text()))
            outputs.append(path)
    print(f"k_bar={fmt(prof.k_bar)} k_star={fmt(prof.k_star)} t_bar={fmt(prof.t_bar)} "
          f"points={len(prof.points)}")
    return EXIT_OK, outputs


def cmd_converge(cfg: RunConfig) -> tuple[int, list[Path]]:
    t_limit = asy.limit_cutoff(cfg.params, cfg.k)
    rows = []
    for row in convergence_study(cfg.params, cfg.k, cfg.N_list, cfg.replicates, cfg.seed, cfg.workers):
        e = row.estimate
        rows.append((row.N, row.t_hat, t_limit, row.gap, e.p_agg_H, *e.ci_H, e.oracle_H,
                     e.p_agg_L, *e.ci_L, e.oracle_L))
        print(f"N={row.N} t_hat={fmt(row.t_hat)} gap={fmt(row.gap)} "
              f"p_agg_H={fmt(e.p_agg_H)} p_agg_L={fmt(e.p_agg_L)}")
    path = write_csv(_out_dir(cfg) / "converge.csv", CONVERGE_HEADER, rows)
    return EXIT_OK, [path]


def cmd_simulate(cfg: RunConfig) -> tuple[int, list[Path]]:
    rule = QuorumRule(cfg.k, cfg.N)
    cutoff = solve_cutoff(cfg.params, rule, cfg.tol).t_hat
    e = estimate_aggregation(cfg.params, rule, cutoff, cfg.replicates, cfg.seed, cfg.workers)
    w = estimate_welfare(cfg.params, rule, cutoff, cfg.replicates, cfg.seed, cfg.workers)
    row = (cfg.k, cfg.N, rule.M, cutoff, cfg.replicates, e.p_agg_H, *e.ci_H, e.oracle_H,
           e.p_agg_L, *e.ci_L, e.oracle_L, w.share_H, w.mean_payoff, w.payoff_se,
           w.first_best_match, w.first_best_payoff)
    print(f"cutoff={fmt(cutoff)} p_agg_H={fmt(e.p_agg_H)} (oracle {fmt(e.oracle_H)}) "
          f"p_agg_L={fmt(e.p_agg_L)} (oracle {fmt(e.oracle_L)})")
    print(f"mean per-capita payoff={fmt(w.mean_payoff)} first-best agreement={fmt(w.first_best_match)}")
    path = write_csv(_out_dir(cfg) / "simulate.csv", SIMULATE_HEADER, [row])
    return EXIT_OK, [path]


def cmd_reversible(cfg: RunConfig) -> tuple[int, list[Path]]:
    rule = QuorumRule(cfg.k, cfg.N)
    cutoff = solve_cutoff(cfg.params, rule, cfg.tol).t_hat
    t1 = cfg.t1 if cfg.t1 is not None else cutoff / 2
    e = estimate_reversible(cfg.params, rule, t1, cfg.replicates, cfg.seed, cutoff, cfg.workers)
    rows = [("H", e.p_S_H, *e.ci_H, e.oracle_H, e.lower_bound_H),
            ("L", e.p_S_L, *e.ci_L, e.oracle_L,
             asy.prob_no_winner(cfg.params, "L", t1, rule.N))]
    path = write_csv(_out_dir(cfg) / "reversible.csv", REVERSIBLE_HEADER, rows)
    excludes_zero = e.ci_H[0] > 0
    print(f"t1={fmt(t1)} cutoff={fmt(cutoff)}")
    print(f"P(S forever | H) = {fmt(e.p_S_H)}  95% CI [{fmt(e.ci_H[0])}, {fmt(e.ci_H[1])}]  "
          f"exact {fmt(e.oracle_H)}  no-winner bound {fmt(e.lower_bound_H)}")
    print(f"P(S forever | L) = {fmt(e.p_S_L)}  95% CI [{fmt(e.ci_L[0])}, {fmt(e.ci_L[1])}]")
    print("S is kept in state H with positive probability: CI "
          + ("excludes 0" if excludes_zero else "does not exclude 0"))
    return EXIT_OK, [path]


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "converge": cmd_converge,
    "simulate": cmd_simulate,
    "reversible": cmd_reversible,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collexp",
                                     description="Collective experimentation voting game laboratory")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="INI-style config file")
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--k", type=float)
    parser.add_argument("--n", dest="N", type=int)
    parser.add_argument("--n-list", dest="N_list",
                        type=lambda v: tuple(int(p) for p in v.replace(",", " ").split()))
    parser.add_argument("--t1", type=float)
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--svg", action="store_const", const=True, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    started = time.perf_counter()
    try:
        cfg = load_config(args.config, **overrides)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command != "validate":
        try:
            validate_params(cfg.params)
        except ValidationError as exc:
            print(f"assumption violated: {exc}", file=sys.stderr)
            return EXIT_ASSUMPTION

    try:
        code, outputs = COMMANDS[args.command](cfg)
    except ModelError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    write_manifest(Path(cfg.output_dir), args.command, cfg, outputs, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
