"""Command line front end.

Subcommands::

    generate   seeded random instance (+ scenario sidecar)
    solve      max scaling factor under the instance's association
    joint      CoMP selection + scaling, with metrics against the baseline
    sweep      seeded batch over |S| and load limits
    gadget     3-SAT reduction instance from a clause file

Exit status is 0 on success, 2 when the resulting alpha is below 1 (demands
infeasible; the result is still written) and 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .comp import best_rrh_association, joint_optimize
from .errors import LoadScaleError, NonConvergentError
from .experiments import DEFAULT_RHO_BARS, DEFAULT_S_SIZES, compute_metrics, sweep, target_order
from .gadget import SatFormula, gadget_from_sat
from .network import load_instance, save_instance
from .scenario import ScenarioConfig, generate_scenario
from .solver import INFEASIBLE_MARGIN, ScalingProblem, solve_max_alpha

log = logging.getLogger("cran_loadscale")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_float(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with scenario config overrides")
    common.add_argument("--seed", type=int, help="RNG seed (scenario and target-set draw)")
    common.add_argument("--s-size", type=int, help="size of a seeded random target set")
    common.add_argument("--s-list", type=_int_list, help="explicit 0-based target UE indices")
    common.add_argument("--rho-bar", type=float, help="RRH load limit in (0, 1]")
    common.add_argument("--epsilon", type=_positive_float, default=1e-4)
    common.add_argument("--max-iters", type=int, default=10_000)
    common.add_argument("--trace", action="store_true", help="also write iteration traces as CSV")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cran-loadscale", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="generate a seeded instance")

    sp = sub.add_parser("solve", parents=[common], help="max alpha under a fixed association")
    sp.add_argument("instance", type=Path)

    jp = sub.add_parser("joint", parents=[common], help="joint CoMP selection and scaling")
    jp.add_argument("instance", type=Path)
    jp.add_argument("--max-passes", type=int, default=100)
    jp.add_argument("--ordering", choices=("row-major", "by-gain-descending"), default="row-major")

    wp = sub.add_parser("sweep", parents=[common], help="seeded batch over |S| and load limits")
    wp.add_argument("--num-seeds", type=int, default=5)
    wp.add_argument("--s-sizes", type=_int_list, default=list(DEFAULT_S_SIZES))
    wp.add_argument("--rho-bars", type=_float_list, default=list(DEFAULT_RHO_BARS))
    wp.add_argument("--max-passes", type=int, default=100)

    gp = sub.add_parser("gadget", parents=[common], help="3-SAT reduction instance")
    gp.add_argument("formula", type=Path, help="one clause per line, signed 1-based literals")
    gp.add_argument("--assignment", type=_int_list,
                    help="true literals, e.g. '1,-2,3' (default: every variable false)")
    return p


def _scenario_config(args) -> ScenarioConfig:
    doc = json.loads(args.config.read_text()) if args.config else {}
    cfg = ScenarioConfig.from_dict(doc)
    changes = {}
    if args.seed is not None:
        changes["rng_seed"] = args.seed
    if args.rho_bar is not None:
        changes["load_limit"] = args.rho_bar
    return cfg.replace(**changes) if changes else cfg


def _target_set(args, num_ues: int) -> tuple[int, ...]:
    if args.s_list is not None and args.s_size is not None:
        raise ValueError("give either --s-list or --s-size, not both")
    if args.s_list is not None:
        bad = [j for j in args.s_list if not 0 <= j < num_ues]
        if bad:
            raise ValueError(f"--s-list indices out of range [0, {num_ues}): {bad}")
        return tuple(args.s_list)
    if args.s_size is not None:
        if not 1 <= args.s_size <= num_ues:
            raise ValueError(f"--s-size must lie in [1, {num_ues}]")
        seed = args.seed if args.seed is not None else 0
        return tuple(int(j) for j in target_order(seed, num_ues)[: args.s_size])
    return tuple(range(num_ues))


def _load(args):
    inst, assoc = load_instance(args.instance)
    if args.rho_bar is not None:
        inst = inst.with_load_limit(args.rho_bar)
    if assoc is None:
        assoc = best_rrh_association(inst)
    return inst, assoc


def _write_json(path: Path, doc: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1))
    print(f"wrote {path}")


def cmd_generate(args) -> int:
    scen = generate_scenario(_scenario_config(args))
    path = scen.write(args.out)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst, assoc = _load(args)
    target = _target_set(args, inst.num_ues)
    problem = ScalingProblem(target, args.epsilon)
    try:
        res = solve_max_alpha(inst, assoc, problem, args.max_iters)
    except NonConvergentError as exc:
        if exc.result is not None:
            _write_json(args.out / "result.json", {"target_set": list(target), **exc.result.to_dict()})
        _report_nonconvergence(exc)
        return EXIT_ERROR
    _write_json(args.out / "result.json", {"target_set": list(target), **res.to_dict()})
    if args.trace:
        (args.out / "trace.csv").write_text(res.trace.to_csv())
        print(f"wrote {args.out / 'trace.csv'}")
    print(f"alpha* = {res.alpha_star:.12g} ({res.iterations} iterations)")
    if res.infeasible:
        print("infeasible: alpha* < 1, unscaled demands exceed the load limit")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_joint(args) -> int:
    inst, assoc = _load(args)
    target = _target_set(args, inst.num_ues)
    problem = ScalingProblem(target, args.epsilon)
    try:
        base = solve_max_alpha(inst, assoc, problem, args.max_iters)
        joint = joint_optimize(inst, assoc, problem, args.max_passes, args.max_iters,
                               args.ordering, baseline=base)
    except NonConvergentError as exc:
        _report_nonconvergence(exc)
        return EXIT_ERROR
    metrics = compute_metrics(base, joint, target, inst.demand)
    doc = {"target_set": list(target), "baseline": base.to_dict(include_trace=args.trace),
           **joint.to_dict(), "metrics": metrics.__dict__}
    _write_json(args.out / "joint.json", doc)
    if args.trace:
        (args.out / "baseline_trace.csv").write_text(base.trace.to_csv())
    print(f"alpha base = {base.alpha_star:.8g}, joint = {joint.alpha_star:.8g}, "
          f"links added = {len(joint.accepted_links)}")
    if joint.alpha_star < 1.0 - INFEASIBLE_MARGIN:
        print("infeasible: alpha* < 1, unscaled demands exceed the load limit")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _scenario_config(args)
    rho_bars = [args.rho_bar] if args.rho_bar is not None else args.rho_bars
    s_sizes = [args.s_size] if args.s_size is not None else args.s_sizes
    res = sweep(cfg, s_sizes, rho_bars, num_seeds=args.num_seeds, epsilon=args.epsilon,
                max_iters=args.max_iters, max_passes=args.max_passes,
                trace_dir=args.out / "traces" if args.trace else None)
    runs, summary = res.write(args.out)
    print(f"wrote {runs} ({len(res.rows)} rows, {len(res.failures)} failed) and {summary}")
    return EXIT_OK


def cmd_gadget(args) -> int:
    formula = SatFormula.read(args.formula)
    g = gadget_from_sat(formula)
    if args.assignment:
        truth = {abs(x): x > 0 for x in args.assignment}
        missing = set(range(1, formula.num_vars + 1)) - set(truth)
        truth.update({v: False for v in missing})
    else:
        truth = {v: False for v in range(1, formula.num_vars + 1)}
    assoc = g.association_for_assignment(truth)
    args.out.mkdir(parents=True, exist_ok=True)
    save_instance(args.out / "gadget.json", g.instance, assoc)
    _write_json(args.out / "gadget.candidates.json", g.to_dict())
    print(f"wrote {args.out / 'gadget.json'}: {g.instance.num_ues} UEs, {g.instance.num_rrhs} RRHs")
    return EXIT_OK


def _report_nonconvergence(exc: NonConvergentError):
    print(f"error: {exc}", file=sys.stderr)
    if exc.trace is not None and len(exc.trace):
        print("trace tail (k, alpha, residual, H):", file=sys.stderr)
        for row in list(exc.trace.rows())[-5:]:
            print("  " + "  ".join(f"{v:.6g}" for v in row), file=sys.stderr)


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "joint": cmd_joint,
            "sweep": cmd_sweep, "gadget": cmd_gadget}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (LoadScaleError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
