"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, kernels, powernet, simulate, synthesis
from .scenario import Scenario, ScenarioError, dump_json, load_scenario, scenario_to_dict

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2


def _rows(a):
    return np.asarray(a, dtype=float).tolist()


def _get_scenario(args) -> Scenario:
    if args.builtin:
        try:
            sys_, cost, x0 = powernet.builtin(args.builtin)
        except KeyError as exc:
            raise ScenarioError(str(exc.args[0])) from None
        return Scenario(sys_, cost, x0)
    if not args.scenario:
        raise ScenarioError("give a scenario file or --builtin NAME")
    return load_scenario(args.scenario)


def _parse_horizon(text: str):
    if text in ("inf", "infinite"):
        return None
    try:
        horizon = int(text)
    except ValueError:
        raise ScenarioError(f"--horizon must be 'inf' or a positive integer, got {text!r}") from None
    if horizon < 1:
        raise ScenarioError("--horizon must be >= 1")
    return horizon


def gain_report(sys_, policy) -> dict:
    aff = policy.affine(sys_)
    out = {
        "k_bar": _rows(aff.k_bar),
        "corrections": [
            {"term": s, "subsystem": t.subsystem, "matrix": _rows(c)}
            for s, (t, c) in enumerate(zip(sys_.terms, aff.corrections))
        ],
    }
    if isinstance(policy, synthesis.FmiGain):
        out["h"] = _rows(policy.h)
    return out


def policy_from_report(doc: dict) -> synthesis.AffineGain:
    try:
        gain = doc["gain"]
        return synthesis.AffineGain(
            np.array(gain["k_bar"], dtype=float),
            tuple(np.array(c["matrix"], dtype=float) for c in gain["corrections"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"policy file: missing or malformed gain ({exc})") from None


def _optimal_policy(sc: Scenario, regime: str, tol: float):
    """Stationary policy and its certificate (None for deadbeat)."""
    if regime == "deadbeat":
        try:
            return synthesis.deadbeat(sc.system), None
        except synthesis.NotFullyActuated as exc:
            raise ScenarioError(str(exc)) from None
    cert, gain = synthesis.SOLVERS[regime](sc.system, sc.cost, tol=tol)
    return gain, cert


def cmd_design(args) -> dict:
    sc = _get_scenario(args)
    horizon = _parse_horizon(args.horizon)
    report: dict = {"regime": args.regime, "horizon": "inf" if horizon is None else horizon, "tol": args.tol}
    if horizon is None:
        policy, cert = _optimal_policy(sc, args.regime, args.tol)
        report["gain"] = gain_report(sc.system, policy)
        if cert is not None:
            report.update(p=_rows(cert.p), iterations=cert.iterations, residual=cert.residual,
                          rel_residual=cert.rel_residual)
        else:
            report["p"] = _rows(analysis.policy_value_infinite(sc.system, sc.cost, policy))
        return report
    if args.regime == "lmi":
        sol = synthesis.finite_lmi(sc.system, sc.cost, horizon)
        gains, p_sched = sol.gains, sol.p
    elif args.regime == "fmi":
        sol = synthesis.finite_fmi(sc.system, sc.cost, horizon)
        gains, p_sched = sol.gains, sol.p
    elif args.regime == "deadbeat":
        policy, _ = _optimal_policy(sc, "deadbeat", args.tol)
        gains = [policy] * horizon
        p_sched = synthesis.evaluate_finite(sc.system, sc.cost, gains, horizon)
    else:
        raise ScenarioError("finite-horizon design is available for lmi, fmi and deadbeat only")
    report["gain"] = gain_report(sc.system, gains[0])
    report["gain_schedule"] = [gain_report(sc.system, g) for g in gains]
    report["p"] = _rows(p_sched[0])
    report["p_schedule"] = [_rows(p) for p in p_sched]
    return report


def cmd_analyze(args) -> dict:
    sc = _get_scenario(args)
    sys_, cost = sc.system, sc.cost
    report: dict = {}
    if args.policy_file:
        doc = json.loads(Path(args.policy_file).read_text())
        policy = policy_from_report(doc)
        stable, rho = analysis.is_ms_stable(sys_, policy)
        report.update(regime=doc.get("regime", "policy-file"), rho=rho, ms_stable=stable)
        cert_f, _ = synthesis.infinite_fmi(sys_, cost, tol=args.tol)
        if stable:
            p = analysis.policy_value_infinite(sys_, cost, policy)
            report["p"] = _rows(p)
            report["r"] = analysis.degradation_ratio(p, cert_f.p).r
        else:
            report["r"] = float("inf")
    else:
        num, den = args.regimes
        values, rhos = {}, {}
        for regime in dict.fromkeys((num, den)):
            policy, cert = _optimal_policy(sc, regime, args.tol)
            rhos[regime] = analysis.is_ms_stable(sys_, policy)[1]
            values[regime] = cert.p if cert is not None else analysis.policy_value_infinite(sys_, cost, policy)
        report.update(
            numerator=num,
            denominator=den,
            rho=rhos,
            p={k: _rows(v) for k, v in values.items()},
            r=analysis.degradation_ratio(values[num], values[den]).r,
        )
    eb = analysis.epsilon_bound(sys_)
    report["epsilon"], report["bound"] = eb if eb else (None, None)
    if report["r"] is not None and np.isfinite(report["r"]):
        report["r_minus_1"] = report["r"] - 1.0
    return report


def _simulation_policy(sc: Scenario, regime: str, horizon: int, tol: float):
    if regime == "lmi":
        return synthesis.finite_lmi(sc.system, sc.cost, horizon).gains
    if regime == "fmi":
        return synthesis.finite_fmi(sc.system, sc.cost, horizon).gains
    policy, _ = _optimal_policy(sc, regime, tol)
    return [policy] * horizon


def cmd_simulate(args) -> dict:
    sc = _get_scenario(args)
    horizon = args.horizon or sc.horizon or 20
    trials = args.trials or sc.trials or 10_000
    seed = args.seed if args.seed is not None else (sc.seed if sc.seed is not None else 0)
    sched = _simulation_policy(sc, args.regime, horizon, args.tol)
    cfg = simulate.SimConfig(trials, horizon, seed, tuple(sc.x0))
    est = simulate.estimate_cost(sc.system, sc.cost, sched, cfg)
    p0 = synthesis.evaluate_finite(sc.system, sc.cost, sched, horizon)[0]
    exact = float(sc.x0 @ p0 @ sc.x0)
    report = {
        "regime": args.regime,
        "trials": est.trials,
        "horizon": horizon,
        "seed": seed,
        "mean": est.mean,
        "std_error": est.std_error,
        "exact": exact,
        "z": (est.mean - exact) / est.std_error if est.std_error > 0 else 0.0,
        "backend": kernels.BACKEND,
    }
    if args.dump_csv:
        traj, _ = simulate.rollout(sc.system, sc.cost, sched, sc.x0, horizon, simulate.trial_rng(seed, 0))
        simulate.write_trajectory_csv(args.dump_csv, traj)
    return report


def cmd_scenario(args) -> dict:
    try:
        sys_, cost, x0 = powernet.builtin(args.builtin)
    except KeyError as exc:
        raise ScenarioError(str(exc.args[0])) from None
    return scenario_to_dict(Scenario(sys_, cost, x0))


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for divergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lmictl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("scenario", nargs="?", help="scenario JSON file")
        p.add_argument("--builtin", choices=powernet.BUILTIN_NAMES, help="use a built-in scenario instead")
        p.add_argument("--tol", type=float, default=synthesis.DEFAULT_TOL)
        p.add_argument("--out", help="write the JSON report here as well as to stdout")

    p = sub.add_parser("design", help="synthesize an optimal gain")
    scenario_args(p)
    p.add_argument("--regime", choices=("lmi", "fmi", "smi", "deadbeat"), default="lmi")
    p.add_argument("--horizon", default="inf", help="'inf' or a number of steps")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("analyze", help="stability margins and performance degradation ratio")
    scenario_args(p)
    p.add_argument("--regimes", nargs=2, metavar=("NUM", "DEN"), default=("lmi", "fmi"),
                   choices=("lmi", "fmi", "smi", "deadbeat"))
    p.add_argument("--policy-file", help="design report whose gain should be analyzed")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo cost estimate")
    scenario_args(p)
    p.add_argument("--regime", choices=("lmi", "fmi", "smi", "deadbeat"), default="lmi")
    p.add_argument("--trials", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-csv", help="write the first trial's trajectory as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scenario", help="write a built-in scenario file")
    p.add_argument("--builtin", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except synthesis.NotStabilizable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = dump_json(report, getattr(args, "out", None))
    print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
