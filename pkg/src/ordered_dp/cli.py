"""
Command-line front end.

Exit codes: 0 success, 1 config or usage error, 2 non-convergence,
3 validation failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import io
from .algorithms import (
    IterationControl,
    howard_policy_iteration,
    optimistic_policy_iteration,
    run_timing_comparison,
    value_function_iteration,
)
from .config import ConfigError, build_model, check_common, load_config
from .data_valuation import check_drift, solve_data_valuation
from .errors import DivergenceError, EnumerationSizeError, StabilityAssumptionError
from .nonlinear_discount import (
    NonlinearDiscountModel,
    check_discount_assumptions,
    compute_nd_upper_bound,
)
from .oracle import (
    brute_force_optimality,
    check_concavity,
    check_lower_perimeter,
    check_order_preserving,
    estimate_contraction_modulus,
    interval_pair_sampler,
    interval_sampler,
)
from .quantile import QuantileModel
from .risk_sensitive import (
    FirmExitModel,
    RiskSensitiveModel,
    build_firm_exit_model,
    compute_upper_bound_b,
    continuation_values,
    exit_threshold,
)

__all__ = ["main", "EXIT_OK", "EXIT_CONFIG", "EXIT_NONCONVERGED", "EXIT_VALIDATION"]

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_VALIDATION = 0, 1, 2, 3

SOLVE_TOL = 1e-8
# the exit-model Bellman identity is written to 1e-9, so the study solves tighter
STUDY_TOL = 1e-11
DEFAULT_M_LIST = [1, 2, 5, 10, 20, 50, 100]


def _solver(cfg, adp, ctrl, m=None, callback=None):
    v0 = np.zeros(adp.value_size) if isinstance(adp, RiskSensitiveModel) else None
    if cfg.algorithm == "vfi":
        return value_function_iteration(adp, v0, ctrl, callback)
    if cfg.algorithm == "hpi":
        return howard_policy_iteration(adp, v0, ctrl, callback=callback)
    return optimistic_policy_iteration(adp, v0, m or (cfg.m or [10])[0], ctrl, callback)


def _ctrl(cfg, default_tol):
    return IterationControl(tol=cfg.tol or default_tol, max_iter=cfg.max_iter)


def _coords(adp):
    if isinstance(adp, FirmExitModel):
        return {"x": adp.grid}
    st = getattr(adp, "structure", None)
    if st is None:
        return None
    x = np.arange(st.n_states)
    return {"y": st.endo_of(x), "z": st.exo_of(x)}


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return lambda name: os.path.join(cfg.output_dir, name)


def cmd_solve(cfg):
    adp = build_model(cfg)
    if cfg.kind == "data_valuation":
        return cmd_data_valuation(cfg, adp)
    path = _out(cfg)
    try:
        res = _solver(cfg, adp, _ctrl(cfg, SOLVE_TOL))
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    value = res.value
    if isinstance(adp, QuantileModel):
        io.write_qfactor_csv(path("qfactors.csv"), adp.space, value)
        value = adp.state_values(value)
    io.write_value_csv(path("value.csv"), value, _coords(adp))
    io.write_policy_csv(path("policy.csv"), res.policy)
    io.write_trace_csv(path("trace.csv"), res.trace)
    if not res.converged:
        print(f"{cfg.algorithm} did not converge in {res.iterations} iterations "
              f"(last distance {res.trace[-1]:.3g})", file=sys.stderr)
        return EXIT_NONCONVERGED
    print(f"{cfg.algorithm} converged in {res.iterations} iterations")
    return EXIT_OK


def _iterates(adp, solve, n):
    """First ``n`` iterates of a solver from ``v0 = 0``; short runs repeat their last value."""
    seen = []

    def grab(k, new, old):
        if k <= n:
            seen.append(np.array(new))

    res = solve(np.zeros(adp.value_size), grab)
    while len(seen) < n:
        seen.append(np.array(res.value))
    return seen, res


GNUPLOT_TEMPLATE = """\
# Figure-ready plots of the firm exit study; run with: gnuplot plot_firm_exit.gp
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,600

set output 'vs.png'
set xlabel 'x'
plot 'vs.csv' using 1:2 with lines title 'v*', \\
     '' using 1:3 with lines title 'h*', \\
     '' using 1:4 with lines dashtype 2 title 's'

set output 'threshold_sweep.png'
set xlabel 'theta'
plot 'threshold_sweep.csv' using 1:2 with linespoints title 'threshold'

set output 'policy_vs_stationary.png'
set xlabel 'x'
plot 'policy_vs_stationary.csv' using 1:2 with steps title 'policy', \\
     '' using 1:3 with lines title 'stationary mass (scaled)'

set output 'algo_iterates.png'
set xlabel 'x'
plot for [c=2:*] 'algo_iterates.csv' using 1:c with lines

set output 'timings.png'
set xlabel 'm'
set ylabel 'seconds'
set logscale x
plot 'timings.csv' using 2:(strcol(1) eq 'vfi' ? $3 : 1/0) with linespoints title 'VFI', \\
     '' using 2:(strcol(1) eq 'hpi' ? $3 : 1/0) with linespoints title 'HPI', \\
     '' using 2:(strcol(1) eq 'opi' ? $3 : 1/0) with linespoints title 'OPI'
"""


def cmd_firm_exit_study(cfg):
    if cfg.kind != "firm_exit":
        raise ConfigError(f"kind: firm-exit-study needs kind firm_exit, got {cfg.kind}")
    model = build_model(cfg)
    path = _out(cfg)
    st = cfg.study
    ctrl = _ctrl(cfg, STUDY_TOL)
    zero = np.zeros(model.value_size)

    res = value_function_iteration(model, zero, ctrl)
    if not res.converged:
        print("VFI did not converge for the base model", file=sys.stderr)
        return EXIT_NONCONVERGED
    v_star, sigma = res.value, res.policy
    h_star = continuation_values(model, v_star)
    s = model.params.s
    io.write_csv(path("vs.csv"), ["x", "v_star", "h_star", "s"],
                 zip(model.grid, v_star, h_star, np.full(model.params.n, s)))

    thetas = np.linspace(st.theta_min, st.theta_max, st.theta_num)
    rows = []
    for theta in thetas:
        m_theta = build_firm_exit_model(dataclasses.replace(model.params, theta=float(theta)))
        r = value_function_iteration(m_theta, zero, ctrl)
        if not r.converged:
            print(f"VFI did not converge at theta={theta}", file=sys.stderr)
            return EXIT_NONCONVERGED
        thr = exit_threshold(m_theta, r.value, r.policy)
        rows.append((float(theta), np.nan if thr is None else thr))
    io.write_csv(path("threshold_sweep.csv"), ["theta", "threshold"], rows)

    io.write_csv(path("policy_vs_stationary.csv"), ["x", "action", "stationary_mass"],
                 zip(model.grid, sigma.astype(int), st.stationary_scale * model.stationary))

    n = st.n_iterates
    vfi_it, _ = _iterates(model, lambda v0, cb: value_function_iteration(model, v0, ctrl, cb), n)
    hpi_it, _ = _iterates(model, lambda v0, cb: howard_policy_iteration(model, v0, ctrl,
                                                                        callback=cb), n)
    opi_it, _ = _iterates(model, lambda v0, cb: optimistic_policy_iteration(
        model, v0, st.opi_m, ctrl, cb), n)
    header = ["x", "v0"]
    cols = [model.grid, zero]
    for name, its in (("vfi", vfi_it), ("hpi", hpi_it), ("opi", opi_it)):
        header += [f"{name}_{k + 1}" for k in range(n)]
        cols += its
    header.append("v_star")
    cols.append(v_star)
    io.write_csv(path("algo_iterates.csv"), header, zip(*cols))

    m_values = cfg.m or DEFAULT_M_LIST
    timing_ctrl = IterationControl(tol=cfg.tol or SOLVE_TOL, max_iter=cfg.max_iter,
                                   record_trace=False)
    timings = run_timing_comparison(model, zero, m_values, timing_ctrl, st.repeats)
    io.write_timings_csv(path("timings.csv"), timings)

    with open(path("plot_firm_exit.gp"), "w") as fh:
        fh.write(GNUPLOT_TEMPLATE)
    print(f"firm exit study written to {cfg.output_dir}")
    return EXIT_OK if all(t.converged for t in timings) else EXIT_NONCONVERGED


def cmd_compare_algos(cfg):
    adp = build_model(cfg)
    if cfg.kind == "data_valuation":
        raise ConfigError("kind: data_valuation has no policy family to compare")
    path = _out(cfg)
    ctrl = _ctrl(cfg, SOLVE_TOL)
    v0 = np.zeros(adp.value_size) if isinstance(adp, RiskSensitiveModel) else \
        adp.default_initial()
    results = [("vfi", 0, value_function_iteration(adp, v0, ctrl)),
               ("hpi", 0, howard_policy_iteration(adp, v0, ctrl))]
    m_values = cfg.m or DEFAULT_M_LIST
    results += [("opi", m, optimistic_policy_iteration(adp, v0, m, ctrl)) for m in m_values]
    ref = results[0][2].value
    io.write_csv(path("agreement.csv"),
                 ["algorithm", "m", "iterations", "converged", "sup_diff_vs_vfi"],
                 ((a, m, r.iterations, r.converged, float(np.max(np.abs(r.value - ref))))
                  for a, m, r in results))
    timings = run_timing_comparison(adp, v0, m_values, IterationControl(
        tol=ctrl.tol, max_iter=ctrl.max_iter, record_trace=False))
    io.write_timings_csv(path("timings.csv"), timings)
    ok = all(r.converged for _, _, r in results)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_data_valuation(cfg, model=None):
    if cfg.kind != "data_valuation":
        raise ConfigError(f"kind: data-valuation needs kind data_valuation, got {cfg.kind}")
    model = model or build_model(cfg)
    path = _out(cfg)
    drift = check_drift(model)
    _write_json(path("drift.json"), {"rho": drift.rho, "passed": drift.passed,
                                     "inequality_holds": drift.inequality_holds,
                                     "max_violation": drift.max_violation})
    try:
        v = solve_data_valuation(model, ctrl=_ctrl(cfg, 1e-12))
    except StabilityAssumptionError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    io.write_data_valuation_csv(path("data_valuation.csv"), model, v)
    return EXIT_OK


def _property_reports(adp, cfg):
    """Sampled operator checks suited to the model family."""
    trials, seed = cfg.validate.trials, cfg.seed
    space = adp.space
    rng = np.random.default_rng(seed)
    sigma = np.array([rng.choice(space.actions_at(x)) for x in range(space.n_states)])
    reports = []
    if isinstance(adp, RiskSensitiveModel):
        b = compute_upper_bound_b(adp)
        lo, hi = np.zeros(space.n_states), b
    elif isinstance(adp, NonlinearDiscountModel):
        lo, hi = np.zeros(space.n_states), compute_nd_upper_bound(adp)
    elif isinstance(adp, QuantileModel):
        a, c = adp.bounds
        lo, hi = np.full(adp.value_size, a), np.full(adp.value_size, c)
    else:
        r = adp.reward
        lo = np.full(adp.value_size, min(0.0, r.min()) / (1 - adp.beta))
        hi = np.full(adp.value_size, max(0.0, r.max()) / (1 - adp.beta))
    pairs = interval_pair_sampler(lo, hi)

    rep = check_order_preserving(lambda v: adp.policy_operator(sigma, v), pairs, trials, seed)
    rep.name = "policy operator order preserving"
    reports.append(rep)
    rep = check_order_preserving(adp.bellman, pairs, trials, seed)
    rep.name = "Bellman operator order preserving"
    reports.append(rep)
    if isinstance(adp, RiskSensitiveModel):
        reports.append(check_concavity(lambda v: adp.policy_operator(sigma, v), pairs,
                                       trials, seed))
        reports.append(check_lower_perimeter(adp, hi, adp.r_lower, interval_sampler(lo, hi),
                                             trials, seed))
    else:
        _, rep = estimate_contraction_modulus(lambda v: adp.policy_operator(sigma, v), pairs,
                                              trials, seed)
        reports.append(rep)
    return reports


def cmd_validate(cfg):
    path = _out(cfg)
    if cfg.kind == "data_valuation":
        model = build_model(cfg)
        drift = check_drift(model)
        _write_json(path("drift.json"), {"rho": drift.rho, "passed": drift.passed,
                                         "inequality_holds": drift.inequality_holds,
                                         "max_violation": drift.max_violation,
                                         "optimality_checks": "skipped: no policy family"})
        print(f"drift check: rho = {drift.rho:.6g}, passed = {drift.passed}")
        return EXIT_OK if drift.passed else EXIT_VALIDATION

    adp = build_model(cfg, check_assumptions=False)
    reports = []
    if isinstance(adp, NonlinearDiscountModel):
        disc = check_discount_assumptions(adp.discount, trials=max(cfg.validate.trials, 2000),
                                          seed=cfg.seed)
        reports += [disc.order_preserving, disc.subadditive, disc.dominated]
    hypotheses_ok = all(r.passed for r in reports)
    if hypotheses_ok:
        reports += _property_reports(adp, cfg)

    summary = {"properties": [r.to_dict() for r in reports]}
    passed = all(r.passed for r in reports)
    if not cfg.validate.property_only:
        if not hypotheses_ok:
            summary["optimality"] = "skipped: model hypotheses fail"
        else:
            try:
                opt = brute_force_optimality(adp)
            except EnumerationSizeError as exc:
                raise ConfigError(f"{exc}; set validate.property_only to true") from exc
            summary["optimality"] = opt.to_dict()
            passed = passed and opt.passed
    _write_json(path("validation_report.json"), summary)
    failures = [r.to_dict() for r in reports if not r.passed]
    if failures:
        _write_json(path("witnesses.json"), failures)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  ({r.failures}/{r.trials} failures)")
    if isinstance(summary.get("optimality"), dict):
        o = summary["optimality"]
        print(f"{'PASS' if o['b1'] and o['b2'] and o['b3'] else 'FAIL'}  "
              f"B1={o['b1']} B2={o['b2']} B3={o['b3']} over {o['n_policies']} policies")
    return EXIT_OK if passed else EXIT_VALIDATION


COMMANDS = {
    "solve": cmd_solve,
    "firm-exit-study": cmd_firm_exit_study,
    "validate": cmd_validate,
    "data-valuation": cmd_data_valuation,
    "compare-algos": cmd_compare_algos,
}


def _m_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty m list")
    return vals


def build_parser():
    parser = argparse.ArgumentParser(prog="ordered-dp", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--m", type=_m_list, help="comma-separated OPI step counts")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        for key in ("seed", "tol", "max_iter", "m"):
            if getattr(args, key) is not None:
                setattr(cfg, key, getattr(args, key))
        if args.out:
            cfg.output_dir = args.out
        check_common(cfg)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
