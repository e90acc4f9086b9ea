"""Command-line front end: ``bootperc <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 time budget exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import criticality as crit
from .engine import (
    GLOBAL_UNIFORM,
    OUTCOME_HEADER,
    PAIRED,
    PerCommunity,
    UniformCount,
    describe_seeds,
    run_block_process,
    run_edge_process,
    run_generations,
    run_node_process,
)
from .errors import BudgetExceeded, NoTransitionError, ValidationError
from .graphs import (
    Block,
    ErImplicit,
    describe_spec,
    generate,
    ingest_edge_list,
    matched_config_model,
    write_edge_list,
)
from .harness import SweepPlan, predict_for, refine_transition, run_sweep, seed_placement_experiment
from .influence import activation_profile
from .planfile import (
    MODELS,
    graph_from_options,
    influence_from_options,
    parse_count,
    parse_grid,
    parse_real,
    plan_from_file,
    read_plan,
)

MAX_STDOUT_ROWS = 10_000
EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _master_seed(value) -> int:
    if value is not None:
        return parse_count(value, "--seed")
    return int(np.random.SeedSequence().entropy)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _graph_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_argument_group("graph")
    g.add_argument("--model", choices=MODELS, required=required)
    g.add_argument("--n", help="number of nodes (1e5 style accepted)")
    dens = g.add_mutually_exclusive_group()
    dens.add_argument("--p", help="edge probability")
    dens.add_argument("--dbar", help="mean degree")
    g.add_argument("--M", help="edge count for gnm")
    degs = g.add_mutually_exclusive_group()
    degs.add_argument("--degfile", help="degree-sequence file, one integer per line")
    degs.add_argument("--degrees", help="comma-separated degree list")
    g.add_argument("--beta", help="power-law exponent")
    g.add_argument("--dmin")
    g.add_argument("--dmax")
    g.add_argument("--sizes", help="block sizes, comma separated")
    g.add_argument("--P", help="block matrix, rows separated by ';'")
    g.add_argument("--path", help="edge-list file for --model edgelist")


def _influence_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("thresholds and weights")
    g.add_argument("--R", help="threshold law, e.g. const:2 or 2:1/4,10:3/4")
    g.add_argument("--W", help="weight law, e.g. const:1 or 1:0.4,-1:0.6")
    g.add_argument("--r", help="integer threshold (edge process / unit weights)")
    g.add_argument("--rule", help="degree-dependent threshold: sqrt, log2, const:<r>")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bootperc", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="critical number of seeds for a model")
    _graph_flags(p)
    _influence_flags(p)
    p.add_argument("--numeric", action="store_true", help="numeric minimization for config models")
    p.add_argument("--alpha", help="also print rate constants at a = alpha * a_c")
    p.add_argument("--epsilon", help="epsilon for C2 / block bounds", default=None)

    p = sub.add_parser("simulate", help="individual cascade runs")
    _graph_flags(p)
    _influence_flags(p)
    seeds = p.add_mutually_exclusive_group(required=True)
    seeds.add_argument("--a", help="number of uniformly chosen seeds")
    seeds.add_argument("--per-community", help="seeds per community, e.g. 15,0")
    p.add_argument("--process", choices=("node", "edge", "generations", "block"), default="node")
    p.add_argument("--schedule", choices=(PAIRED, GLOBAL_UNIFORM), default=GLOBAL_UNIFORM)
    p.add_argument("--runs", default="1")
    p.add_argument("--seed")
    p.add_argument("--simplify", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="Monte Carlo sweep over the number of seeds")
    p.add_argument("--plan", help="plan file; graph/influence flags are then not allowed")
    _graph_flags(p, required=False)
    _influence_flags(p)
    p.add_argument("--grid", help="log:<lo>:<hi>:<points> or a comma list")
    p.add_argument("--runs")
    p.add_argument("--seed")
    p.add_argument("--workers", default=None)
    fresh = p.add_mutually_exclusive_group()
    fresh.add_argument("--fresh-graph", dest="fresh_graph", action="store_true", default=None)
    fresh.add_argument("--shared-graph", dest="fresh_graph", action="store_false")
    p.add_argument("--nested", action="store_true", default=None,
                   help="reuse one realization per run for the whole grid (nonnegative weights)")
    p.add_argument("--simplify", action="store_true", default=None)
    p.add_argument("--budget", help="wall-clock budget in seconds (exit 3 when exceeded)")
    p.add_argument("--refine", default="0", help="extra bisection rounds around the transition")
    p.add_argument("--out")

    p = sub.add_parser("ingest", help="read an edge list; emit degrees or a matched configuration model")
    p.add_argument("path")
    p.add_argument("--emit-degrees", metavar="FILE")
    p.add_argument("--matched-config", metavar="FILE")
    p.add_argument("--seed")

    p = sub.add_parser("place-seeds", help="compare per-community seed allocations in a block model")
    p.add_argument("--sizes", required=True)
    p.add_argument("--P", required=True)
    p.add_argument("--r", default="2")
    p.add_argument("--alloc", action="append", help="allocation like 15/0; repeatable")
    p.add_argument("--a", help="total seeds; without --alloc compares all-in-one vs even split")
    p.add_argument("--runs", default="500")
    p.add_argument("--seed")
    p.add_argument("--schedule", choices=(PAIRED, GLOBAL_UNIFORM), default=GLOBAL_UNIFORM)
    p.add_argument("--workers", default="1")

    p = sub.add_parser("bounds-check", help="compare binomial tail bounds with exact tails")
    p.add_argument("--n")
    p.add_argument("--p")
    p.add_argument("--k")
    p.add_argument("--side", choices=("lower", "upper"))
    p.add_argument("--points", default="200", help="random grid size when n/p/k are omitted")
    p.add_argument("--seed")
    return ap


def _opts(ns) -> dict:
    keys = ("model", "n", "p", "dbar", "M", "degfile", "degrees", "beta", "dmin", "dmax", "sizes", "P", "path")
    return {k: getattr(ns, k, None) for k in keys}


def _inf_opts(ns) -> dict:
    return {k: getattr(ns, k, None) for k in ("R", "W", "r", "rule")}


def _emit(text: str, out: str | None, rows: int) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        _say(f"# wrote {out}")
        return
    if rows > MAX_STDOUT_ROWS:
        raise ValidationError(f"{rows} rows: pass --out FILE for outputs above {MAX_STDOUT_ROWS} rows")
    sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_predict(ns) -> int:
    graph = graph_from_options(_opts(ns))
    influence, rule = influence_from_options(_inf_opts(ns))
    _say(f"# resolved: {describe_spec(graph)[0]} {describe_spec(graph)[1]}; "
         f"{influence.describe() if influence else 'rule'}")
    if isinstance(graph, Block):
        r = rule if isinstance(rule, int) else int(np.ceil(influence.threshold.min)) if influence else 2
        if influence is not None and not (influence.unit_weights and len(influence.threshold.values) == 1):
            raise ValidationError("block predictions need a constant threshold with unit weights")
        for pred in crit.block_critical(graph.sizes, graph.P, r):
            print("\n".join(pred.lines()))
            print()
        eps = parse_real(ns.epsilon, "--epsilon") if ns.epsilon else 0.05
        b = crit.block_seed_bounds(graph.sizes, graph.P, r, eps)
        print(f"uniform_bound      {b.uniform_bound:.10g}")
        print(f"optimal_bound      {b.optimal_bound:.10g}")
        print(f"optimal_community  {b.optimal_community}")
        print(f"alt_uniform_bound  {b.single_community_uniform_bound:.10g}")
        return EXIT_OK
    if ns.numeric:
        if not hasattr(graph, "degrees") and not hasattr(graph, "beta"):
            raise ValidationError("--numeric applies to config and powerlaw models")
        r_of_d = rule if rule is not None else int(np.ceil(influence.threshold.min))
        from .graphs import powerlaw_degree_sequence
        if hasattr(graph, "beta"):
            ds, n = powerlaw_degree_sequence(graph.n, graph.beta, graph.d_min, graph.d_max), graph.n
        else:
            ds, n = np.asarray(graph.degrees), len(graph.degrees)
        pred = crit.critical_config_numeric(n, ds, r_of_d)
    else:
        pred = predict_for(graph, influence, rule)
    if influence is not None:
        prof = activation_profile(influence)
        print(f"q_infinity {prof.q_infinity:.10g} ({'exact' if prof.q_infinity_exact else 'lower bound'})")
    print("\n".join(pred.lines()))
    if ns.alpha:
        eps = parse_real(ns.epsilon, "--epsilon") if ns.epsilon else None
        rc = crit.rate_constants(pred.rho_star, parse_real(ns.alpha, "--alpha"), eps)
        for k in ("C1", "C1_argmin", "C2", "phi_alpha", "subcritical_ratio"):
            v = getattr(rc, k)
            if v is not None:
                print(f"{k:<10} {v:.10g}")
    return EXIT_OK


def cmd_simulate(ns) -> int:
    seed = _master_seed(ns.seed)
    graph = graph_from_options(_opts(ns), implicit=ns.process == "node")
    influence, rule = influence_from_options(_inf_opts(ns))
    runs = parse_count(ns.runs, "--runs")
    seeds = UniformCount(parse_count(ns.a, "--a")) if ns.a else PerCommunity(
        tuple(parse_count(x, "--per-community") for x in ns.per_community.split(",")))
    model, params = describe_spec(graph)
    _say(f"# resolved: process={ns.process} model={model} {params}; "
         f"{influence.describe() if influence else 'rule'}; seeds={describe_seeds(seeds)}; runs={runs}")
    _say(f"# master seed {seed}")
    lines = [OUTCOME_HEADER]
    for i in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        target = graph if isinstance(graph, ErImplicit) else generate(graph, rng, simplify_graph=ns.simplify)
        if ns.process == "edge":
            if rule is None:
                if not influence.unit_weights:
                    raise ValidationError("edge process needs unit weights; use --r or --rule")
                rule = int(np.ceil(influence.threshold.min))
            out = run_edge_process(target, seeds, rule, rng)
        else:
            if influence is None:
                raise ValidationError(f"--process {ns.process} needs --R/--W, not --r/--rule")
            if ns.process == "generations":
                out = run_generations(target, seeds, influence, rng)
            elif ns.process == "block":
                out = run_block_process(target, seeds, influence, rng, schedule=ns.schedule)
            else:
                out = run_node_process(target, seeds, influence, rng)
        lines.append(out.csv_row(model, describe_seeds(seeds), seed_label=f"{seed}:{i}"))
    _emit("\n".join(lines) + "\n", ns.out, runs)
    return EXIT_OK


def cmd_sweep(ns) -> int:
    seed = ns.seed
    overrides = {
        "runs": parse_count(ns.runs, "--runs") if ns.runs else None,
        "master_seed": parse_count(seed, "--seed") if seed is not None else None,
        "workers": parse_count(ns.workers, "--workers") if ns.workers else None,
        "fresh_graph": ns.fresh_graph,
        "nested": ns.nested,
        "simplify": ns.simplify,
        "budget_seconds": parse_real(ns.budget, "--budget") if ns.budget else None,
    }
    if ns.grid:
        overrides["grid"] = parse_grid(ns.grid)
    if ns.plan:
        clash = [k for k, v in {**_opts(ns), **_inf_opts(ns)}.items() if v is not None]
        if clash:
            raise ValidationError(f"--plan cannot be combined with --{clash[0]}")
        if overrides.get("master_seed") is None:
            overrides.pop("master_seed")
        plan = plan_from_file(ns.plan, overrides)
        if seed is None and "seed" not in read_plan(ns.plan).section("sweep"):
            plan = _with(plan, master_seed=_master_seed(None))
    else:
        if not ns.model:
            raise ValidationError("give --plan or --model with graph flags")
        if "grid" not in overrides:
            raise ValidationError("--grid is required without --plan")
        influence, rule = influence_from_options(_inf_opts(ns))
        kw = {k: v for k, v in overrides.items() if v is not None}
        kw.setdefault("master_seed", _master_seed(None))
        plan = SweepPlan(graph=graph_from_options(_opts(ns)), influence=influence, rule=rule, **kw)
    model, params = plan.describe()
    _say(f"# resolved: model={model} {params}; grid={','.join(map(str, plan.grid))}; runs={plan.runs}; "
         f"fresh_graph={plan.fresh_graph}; nested={plan.nested}; workers={plan.workers}")
    _say(f"# master seed {plan.master_seed}")
    res = run_sweep(plan)
    if res.violations:
        _say(f"# warning: mean fraction drops by > 3 pooled std-errs after a = "
             f"{', '.join(str(plan.grid[i]) for i in res.violations)}")
    refine = parse_count(ns.refine, "--refine")
    if refine and res.a_hat is not None:
        _say(f"# refined transition {refine_transition(res, rounds=refine):.6g}")
    _emit(res.to_csv(), ns.out, len(plan.grid))
    if res.a_hat is None:
        _say("# no transition in range")
    else:
        _say(f"# transition a_hat = {res.a_hat:.6g}")
    return EXIT_OK


def _with(plan: SweepPlan, **changes) -> SweepPlan:
    from dataclasses import replace
    return replace(plan, **changes)


def cmd_ingest(ns) -> int:
    g, report = ingest_edge_list(ns.path)
    ds = g.degree_sequence()
    print(f"nodes       {g.n}")
    print(f"edges       {g.n_edges}")
    print(f"mean_degree {ds.d_bar:.6g}")
    print(f"max_degree  {ds.d_max}")
    print(f"self_loops  {report.self_loops} (dropped)")
    print(f"duplicates  {report.duplicates} (collapsed)")
    wrote = []
    if ns.emit_degrees:
        ds.write(ns.emit_degrees)
        wrote.append(ns.emit_degrees)
    if ns.matched_config:
        seed = _master_seed(ns.seed)
        _say(f"# master seed {seed}")
        m = matched_config_model(g, np.random.default_rng(np.random.SeedSequence(seed)))
        write_edge_list(m, ns.matched_config)
        wrote.append(ns.matched_config)
    for out in wrote:
        idmap = out + ".ids"
        np.savetxt(idmap, np.column_stack([np.arange(g.n), report.original_ids]), fmt="%d",
                   header="dense_id original_id")
        _say(f"# wrote {out} (id map {idmap})")
    return EXIT_OK


def cmd_place_seeds(ns) -> int:
    from .influence import InfluenceSpec
    from .planfile import parse_matrix
    sizes = tuple(parse_count(x, "--sizes") for x in ns.sizes.split(","))
    spec = Block(sizes, parse_matrix(ns.P))
    r = parse_count(ns.r, "--r")
    if ns.alloc:
        allocs = [tuple(parse_count(x, "--alloc") for x in al.split("/")) for al in ns.alloc]
    else:
        if not ns.a:
            raise ValidationError("give --alloc (repeatable) or --a")
        a = parse_count(ns.a, "--a")
        k0 = crit.block_seed_bounds(sizes, spec.P, r).optimal_community
        K = len(sizes)
        even = [a // K + (1 if k < a % K else 0) for k in range(K)]
        allocs = [tuple(a if k == k0 else 0 for k in range(K)), tuple(even)]
    seed = _master_seed(ns.seed)
    runs = parse_count(ns.runs, "--runs")
    _say(f"# resolved: block sizes={sizes} r={r} runs={runs} schedule={ns.schedule} "
         f"allocations={' '.join('/'.join(map(str, al)) for al in allocs)}")
    _say(f"# master seed {seed}")
    table = seed_placement_experiment(spec, allocs, influence=InfluenceSpec.basic(r), runs=runs,
                                      master_seed=seed, schedule=ns.schedule,
                                      workers=parse_count(ns.workers, "--workers"))
    print("\n".join(table.lines()))
    print(f"# optimal community {table.optimal_community}; best allocation "
          f"{'/'.join(map(str, table.rows[table.best].allocation))}")
    if table.argmax_allocation is not None:
        for i, z in enumerate(table.dominance_z):
            if i != table.argmax_allocation:
                print(f"# argmax allocation vs {'/'.join(map(str, allocs[i]))}: {z:.3g} pooled std-errs")
    return EXIT_OK


def cmd_bounds_check(ns) -> int:
    if ns.n or ns.p or ns.k or ns.side:
        if not (ns.n and ns.p and ns.k and ns.side):
            raise ValidationError("--n, --p, --k and --side go together")
        n, p, k = parse_count(ns.n, "--n"), parse_real(ns.p, "--p"), parse_count(ns.k, "--k")
        bound = crit.binom_tail_bound(n, p, k, ns.side)
        exact = crit.binom_tail_exact(n, p, k, ns.side)
        print(f"bound {bound:.10g}")
        print(f"exact {exact:.10g}")
        print("ok" if bound >= exact else "VIOLATED")
        return EXIT_OK if bound >= exact else 1
    seed = _master_seed(ns.seed)
    _say(f"# master seed {seed}")
    rng = np.random.default_rng(seed)
    bad = 0
    points = parse_count(ns.points, "--points")
    print("n,p,k,side,bound,exact")
    for _ in range(points):
        n = int(rng.integers(10, 5000))
        p = float(rng.uniform(0.001, 0.5))
        mu = n * p
        side = "lower" if rng.random() < 0.5 else "upper"
        k = int(rng.integers(0, int(mu) + 1)) if side == "lower" else int(rng.integers(int(mu) + 1, n + 1))
        bound = crit.binom_tail_bound(n, p, k, side)
        exact = crit.binom_tail_exact(n, p, k, side)
        bad += bound < exact
        print(f"{n},{p:.6g},{k},{side},{bound:.6g},{exact:.6g}")
    _say(f"# {points - bad}/{points} points satisfy bound >= exact")
    return EXIT_OK if bad == 0 else 1


COMMANDS = {
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "ingest": cmd_ingest,
    "place-seeds": cmd_place_seeds,
    "bounds-check": cmd_bounds_check,
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        return COMMANDS[ns.command](ns)
    except BudgetExceeded as exc:
        _say(f"error: {exc}")
        return EXIT_BUDGET
    except (ValidationError, NoTransitionError) as exc:
        _say(f"error: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
