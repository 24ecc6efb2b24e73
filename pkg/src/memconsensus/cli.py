"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 no consensus or
formation within the horizon, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    ComputationError,
    ConnectivityError,
    ConvergenceFloor,
    GenerationError,
    OptimizationError,
)
from .gains import gains_m1, r0_star, r1_star
from .graphs import Graph, laplacian_spectrum, parse_graph_spec
from .modes import convergence_rate
from .optimizer import OptimizerConfig, expand_theta, optimize, warm_start
from .scenario import (
    Scenario,
    ScenarioError,
    load_gains,
    load_scenario,
    resolve_graph,
    trajectory_csv,
)
from .simulate import estimate_rate, simulate_consensus, simulate_formation

EXIT_OK, EXIT_USAGE, EXIT_NO_CONSENSUS, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _graph_summary(g: Graph) -> dict:
    s = laplacian_spectrum(g)
    return {
        "n": g.n,
        "edges": len(g.edges),
        "lambda2": s.lambda2,
        "lambdaN": s.lambdaN,
        "eigenratio": s.lambda2 / s.lambdaN if s.connected else None,
        "connected": s.connected,
    }


def cmd_graph(args) -> int:
    g = parse_graph_spec(args.source) if args.action == "gen" else resolve_graph(args.source)
    summary = _graph_summary(g)
    ratio = summary["eigenratio"]
    lines = [
        f"n={summary['n']} edges={summary['edges']} lambda2={_fmt(summary['lambda2'])} "
        f"lambdaN={_fmt(summary['lambdaN'])} "
        f"eigenratio={_fmt(ratio) if ratio is not None else 'disconnected'}"
    ]
    if args.out:
        Path(args.out).write_text(g.to_edge_list())
        print(lines[0])
    else:
        # summary as comments keeps stdout a loadable edge list
        sys.stdout.write(f"# summary: {lines[0]}\n" + g.to_edge_list())
    return EXIT_OK


def cmd_analyze(args) -> int:
    g = resolve_graph(args.graph)
    s = laplacian_spectrum(g)
    s.require_connected()
    report = gains_m1(s.lambda2, s.lambdaN, args.tau)
    data = {
        "graph": args.graph,
        "n": g.n,
        "lambda2": s.lambda2,
        "lambdaN": s.lambdaN,
        "eigenratio": s.lambda2 / s.lambdaN,
        "r0_star": r0_star(s.lambda2, s.lambdaN),
        "r1_star": report.r_star,
        "gains": report.params.as_dict(),
    }
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        p = report.params
        print(f"graph      {args.graph} (n={g.n})")
        print(f"lambda2    {_fmt(s.lambda2)}")
        print(f"lambdaN    {_fmt(s.lambdaN)}")
        print(f"eigenratio {_fmt(data['eigenratio'])}")
        print(f"r0*        {_fmt(data['r0_star'])}")
        print(f"r1*        {_fmt(report.r_star)}")
        print(f"eps1*      {_fmt(p.eps1)}")
        print(f"eps2*      {_fmt(p.eps2)}")
        print(f"theta0*    {_fmt(p.theta[0])}")
    return EXIT_OK


def _scenario_from_args(args, *, need_formation: bool = False) -> Scenario:
    """Scenario file if given, with any explicit flags layered on top."""
    if args.scenario:
        sc = load_scenario(args.scenario)
    else:
        if not getattr(args, "graph", None):
            raise ScenarioError("either --scenario or --graph is required")
        sc = None
    if need_formation and (sc is None or sc.formation is None):
        raise ScenarioError("formation needs a scenario file with a 'formation' plan")

    fields = {} if sc is None else {
        "graph": sc.graph, "graph_file": sc.graph_file, "tau": sc.tau, "memory": sc.memory,
        "gains": sc.gains, "optimizer": dict(sc.optimizer), "steps": sc.steps,
        "init": dict(sc.init), "formation": sc.formation, "base_dir": sc.base_dir,
    }
    if getattr(args, "graph", None):
        fields["graph"], fields["graph_file"], fields["base_dir"] = args.graph, None, None
        if Path(args.graph).is_file():
            fields["graph"], fields["graph_file"] = None, args.graph
    if getattr(args, "tau", None) is not None:
        fields["tau"] = args.tau
    if getattr(args, "memory", None) is not None:
        fields["memory"] = args.memory
    gains = getattr(args, "gains", None)
    if gains is not None:
        if gains in ("optimal-m1", "optimize"):
            fields["gains"] = gains
        else:
            fields["gains"] = load_gains(gains)
            if getattr(args, "memory", None) is None:
                fields["memory"] = fields["gains"].M
    elif "gains" not in fields:
        fields["gains"] = "optimal-m1" if fields.get("memory", 1) == 1 else "optimize"
    opt = fields.setdefault("optimizer", {})
    for flag, key in (("iters", "iterations"), ("lr", "learning_rate"), ("fd_step", "fd_step")):
        value = getattr(args, flag, None)
        if value is not None:
            opt[key] = value
    if getattr(args, "steps", None) is not None:
        fields["steps"] = args.steps
    seed, dim = getattr(args, "seed", None), getattr(args, "dim", None)
    if seed is not None or dim is not None or "init" not in fields:
        rnd = dict(fields.get("init", {}).get("random", {}))
        if seed is not None:
            rnd["seed"] = seed
        if dim is not None:
            rnd["dim"] = dim
        rnd.setdefault("seed", 0)
        fields["init"] = {"random": rnd}
    return Scenario(**fields)


def cmd_optimize(args) -> int:
    sc = _scenario_from_args(args)
    if sc.memory < 1:
        raise ScenarioError("optimize needs --memory >= 1")
    g = sc.build_graph()
    s = laplacian_spectrum(g)
    s.require_connected()
    cfg = OptimizerConfig(memory=sc.memory, tau=sc.tau, **sc.optimizer)
    theta0 = warm_start(s, sc.tau, sc.memory)
    try:
        result = optimize(theta0, s, cfg)
    except OptimizationError as exc:
        raise OptimizationError(
            f"optimizer aborted on {sc.graph or sc.graph_file} (M={sc.memory}): {exc}",
            exc.last_theta,
            exc.last_value,
        ) from exc
    p = expand_theta(result.theta, sc.tau)
    r1 = r1_star(s.lambda2, s.lambdaN)
    gains = p.as_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(gains, indent=2) + "\n")
    data = {
        "theta": result.theta.tolist(),
        "implied_theta_M": p.theta[-1],
        "r_star": result.rate,
        "final_rate": result.final_rate,
        "r1_star": r1,
        "iterations": cfg.iterations,
        "gains": gains,
        "scenario": sc.with_gains(p).to_dict(),
    }
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        print(f"M          {sc.memory}")
        print(f"Theta*     [{', '.join(_fmt(t) for t in result.theta)}]")
        print(f"theta_M    {_fmt(p.theta[-1])}")
        print(f"r*         {_fmt(result.rate)}")
        print(f"r1* (M=1)  {_fmt(r1)}")
    return EXIT_OK


def _rate_summary(traj, window: int) -> float | str | None:
    if traj.horizon <= window:
        return None
    try:
        return estimate_rate(traj.e_norm, window)
    except ConvergenceFloor:
        return "floor"


def cmd_simulate(args) -> int:
    sc = _scenario_from_args(args)
    g = sc.build_graph()
    p, source = sc.build_params(g)
    s = laplacian_spectrum(g)
    cfg = sc.sim_config(g.n)
    traj = simulate_consensus(g, p, cfg)
    _emit(trajectory_csv(traj, full_state=args.full_state), args.out)

    theory = convergence_rate(p, s)
    estimate = _rate_summary(traj, args.window)
    final = float(traj.e_norm[-1])
    converged = final <= args.tol
    data = {
        "theoretical_rate": theory,
        "estimated_rate": estimate,
        "final_e_norm": final,
        "converged": converged,
        "gains": p.as_dict(),
        "gains_source": source,
        "scenario": sc.with_gains(p).to_dict(),
    }
    stream = sys.stdout if args.out else sys.stderr
    if args.json:
        print(json.dumps(data, indent=2), file=stream)
    else:
        est = _fmt(estimate) if isinstance(estimate, float) else (estimate or "n/a")
        print(f"theoretical rate {_fmt(theory)}", file=stream)
        print(f"estimated rate   {est}", file=stream)
        print(f"final e_norm     {_fmt(final)}", file=stream)
        print(f"consensus        {'yes' if converged else 'no'}", file=stream)
    return EXIT_OK if converged else EXIT_NO_CONSENSUS


def cmd_formation(args) -> int:
    sc = _scenario_from_args(args, need_formation=True)
    g = sc.build_graph()
    p, source = sc.build_params(g)
    plan = sc.formation_plan()
    cfg = sc.sim_config(g.n)
    traj = simulate_formation(g, p, plan, cfg)
    _emit(trajectory_csv(traj, full_state=True), args.out)

    starts = [k for k, _ in plan.segments[1:]]
    ends = [k - 1 for k in starts if 0 < k <= traj.horizon + 1] + [traj.horizon]
    report = [{"k": k, "formation_error": float(traj.formation_error[k])} for k in ends]
    final = float(traj.formation_error[-1])
    converged = final <= args.tol
    data = {
        "segment_ends": report,
        "converged": converged,
        "gains": p.as_dict(),
        "gains_source": source,
        "scenario": sc.with_gains(p).to_dict(),
    }
    stream = sys.stdout if args.out else sys.stderr
    if args.json:
        print(json.dumps(data, indent=2), file=stream)
    else:
        for row in report:
            print(f"k={row['k']:<6d} formation error {_fmt(row['formation_error'])}", file=stream)
        print(f"formation        {'yes' if converged else 'no'}", file=stream)
    return EXIT_OK if converged else EXIT_NO_CONSENSUS


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="memconsensus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pg = sub.add_parser("graph", help="generate or inspect a network")
    pg.add_argument("action", choices=("gen", "load"))
    pg.add_argument("source", help="generator spec (gen) or edge-list file (load)")
    pg.add_argument("--out", help="write the edge list here instead of stdout")
    pg.set_defaults(func=cmd_graph)

    pa = sub.add_parser("analyze", help="spectrum, optimal rates and one-tap gains")
    pa.add_argument("--graph", required=True)
    pa.add_argument("--tau", type=float, default=0.1)
    pa.add_argument("--json", action="store_true")
    pa.set_defaults(func=cmd_analyze)

    def common(p, with_gains=True):
        p.add_argument("--scenario", help="scenario JSON; flags override its fields")
        p.add_argument("--graph")
        p.add_argument("--tau", type=float)
        p.add_argument("--memory", type=int)
        if with_gains:
            p.add_argument("--gains", help="optimal-m1, optimize, or a gains JSON file")
        p.add_argument("--iters", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--fd-step", dest="fd_step", type=float)
        p.add_argument("--out")
        p.add_argument("--json", action="store_true")

    po = sub.add_parser("optimize", help="tune M-tap gains by gradient descent")
    common(po, with_gains=False)
    po.set_defaults(func=cmd_optimize)

    for name, func, help_text in (
        ("simulate", cmd_simulate, "simulate consensus and write a CSV trajectory"),
        ("formation", cmd_formation, "simulate a formation scenario"),
    ):
        ps = sub.add_parser(name, help=help_text)
        common(ps)
        ps.add_argument("--steps", type=int)
        ps.add_argument("--seed", type=int)
        ps.add_argument("--dim", type=int)
        ps.add_argument("--window", type=int, default=100)
        ps.add_argument("--tol", type=float, default=1e-6)
        if name == "simulate":
            ps.add_argument("--full-state", action="store_true")
        ps.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ComputationError, OptimizationError, GenerationError) as exc:
        print(f"memconsensus: computation failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConnectivityError as exc:
        print(f"memconsensus: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"memconsensus: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
