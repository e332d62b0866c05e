"""``ccdiv`` command line: random-graph, import-graph, gen-initial, evolve, ratio, report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, fields

from .diversity import MutationParams, Population, evolve_conventional, evolve_diverse
from .graph import CoverageGraph, GraphFormatError, generate_random_graph, load_graph
from .instance import FeatureKind, InstanceValidationError, load_instance
from .ratio import discounted_ratio, is_discriminating, threshold_from
from .report import BOX_COLUMNS, SUMMARY_COLUMNS, summarize, write_csv
from .seeding import derive_seed
from .solvers import Algorithm, SolverConfig
from .storage import CheckpointError, TrajectoryLog, read_population, write_population

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

PAIRS = {"ea-fga": (Algorithm.EA, Algorithm.FGA), "ea-ghc": (Algorithm.EA, Algorithm.GHC)}


class UsageError(ValueError):
    pass


class GenerationFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    graph: str | None = None
    random_n: int | None = None
    random_p: float | None = None
    graph_seed: int | None = None
    pair: str = "ea-ghc"
    feature: str = "ft1"
    mu: int = 20
    iterations: int = 10_000
    init_iterations: int = 200
    solver_evals: int = 10_000
    r: int = 10
    theta: float = 0.9
    alpha: float = 0.05
    mu_max: float = 1000.0
    sigma1: float | None = None
    sigma2: float | None = None
    lam: float = 5.0
    beta: float = 1.5
    seed: int = 0
    output_dir: str | None = None

    def validate(self) -> "RunConfig":
        if self.pair not in PAIRS:
            raise UsageError(f"pair must be one of {sorted(PAIRS)}")
        try:
            FeatureKind.parse(self.feature)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for name in ("mu", "solver_evals", "r", "mu_max", "lam", "alpha", "theta"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        for name in ("iterations", "init_iterations", "seed"):
            if getattr(self, name) < 0:
                raise UsageError(f"{name} must be non-negative")
        for name in ("sigma1", "sigma2"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise UsageError(f"{name} must be positive")
        if self.mu < 3:
            raise UsageError("population size mu must be at least 3")
        if self.r < 2:
            raise UsageError("r must be at least 2 (the ratio spread is undefined otherwise)")
        if not 0.5 < self.theta < 1:
            raise UsageError("theta must lie in (0.5, 1)")
        if not 0 < self.alpha <= 0.5:
            raise UsageError("alpha must lie in (0, 0.5]")
        return self

    @property
    def solver_pair(self) -> tuple[SolverConfig, SolverConfig]:
        a1, a2 = PAIRS[self.pair]
        return (SolverConfig(a1, self.solver_evals, beta=self.beta),
                SolverConfig(a2, self.solver_evals, beta=self.beta))

    @property
    def feature_kind(self) -> FeatureKind:
        return FeatureKind.parse(self.feature)

    def mutation_params(self) -> MutationParams:
        base = MutationParams.defaults(self.feature_kind.target)
        return dataclasses.replace(
            base,
            sigma1=self.sigma1 if self.sigma1 is not None else base.sigma1,
            sigma2=self.sigma2 if self.sigma2 is not None else base.sigma2,
            lam=self.lam,
        )

    def load_graph(self) -> CoverageGraph:
        if self.graph:
            return load_graph(self.graph)
        if self.random_n is None or self.random_p is None:
            raise UsageError("give --graph PATH or --random-n N --random-p P")
        seed = self.graph_seed if self.graph_seed is not None else derive_seed(self.seed, "graph")
        return generate_random_graph(self.random_n, self.random_p, seed)


DESK_PRESET = {
    "random_n": 50,
    "random_p": 0.1,
    "mu": 10,
    "solver_evals": 2000,
    "iterations": 500,
    "init_iterations": 200,
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (overrides --config and --desk)")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--desk", action="store_true",
                   help="small preset: n=50, p=0.1, mu=10, 2000 solver evals, 500 iterations")
    g.add_argument("--graph", help=".mtx or graph JSON file")
    g.add_argument("--random-n", type=int)
    g.add_argument("--random-p", type=float)
    g.add_argument("--graph-seed", type=int)
    g.add_argument("--pair", choices=sorted(PAIRS))
    g.add_argument("--feature", choices=[k.value for k in FeatureKind])
    g.add_argument("--mu", type=int, help="population size")
    g.add_argument("--iterations", type=int)
    g.add_argument("--init-iterations", type=int,
                   help="steps of the per-instance (1+1) EA used for the initial population")
    g.add_argument("--solver-evals", type=int)
    g.add_argument("--r", type=int, help="independent runs per algorithm")
    g.add_argument("--theta", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--mu-max", type=float)
    g.add_argument("--sigma1", type=float)
    g.add_argument("--sigma2", type=float)
    g.add_argument("--lam", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", dest="output_dir")


def build_config(args: argparse.Namespace, base: dict | None = None) -> RunConfig:
    """defaults < base < --desk < --config file < explicit flags."""
    values: dict = dict(base or {})
    if getattr(args, "desk", False):
        values.update(DESK_PRESET)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(doc) - set(_FIELD_TYPES)
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        values.update(doc)
    for name in _FIELD_TYPES:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        return RunConfig(**values).validate()
    except TypeError as exc:
        raise UsageError(str(exc)) from None


# -- commands ---------------------------------------------------------------

def cmd_random_graph(args) -> int:
    graph = generate_random_graph(args.n, args.p, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(graph.to_json() + "\n")
    print(f"nodes={graph.node_count} edges={graph.edge_count}")
    return EXIT_OK


def cmd_import_graph(args) -> int:
    graph = load_graph(args.source)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(graph.to_json() + "\n")
    print(f"nodes={graph.node_count} edges={graph.edge_count}")
    return EXIT_OK


def gen_initial(cfg: RunConfig) -> Population:
    """Evolve cfg.mu instances independently and wrap them as a population with threshold T."""
    graph = cfg.load_graph()
    pair = cfg.solver_pair
    results = []
    for k in range(cfg.mu):
        res = evolve_conventional(graph, pair, cfg.r, cfg.theta, cfg.init_iterations,
                                  seed=derive_seed(cfg.seed, "member", k),
                                  mu_max=cfg.mu_max, alpha=cfg.alpha)
        print(f"member {k}: R'={res.r_prime:.6g}", file=sys.stderr)
        results.append(res)
    failed = [k for k, res in enumerate(results) if not is_discriminating(res.r_prime)]
    if failed:
        listing = ", ".join(f"{k} (R'={results[k].r_prime:.6g})" for k in failed)
        raise GenerationFailure(f"members not discriminating after {cfg.init_iterations} steps: {listing}")
    r_primes = [res.r_prime for res in results]
    threshold = threshold_from(min(r_primes))
    return Population.build([res.instance for res in results], r_primes, cfg.feature_kind,
                            threshold, seed=cfg.seed)


def _require_out(cfg: RunConfig) -> str:
    if not cfg.output_dir:
        raise UsageError("--out DIR is required")
    return cfg.output_dir


def cmd_gen_initial(args) -> int:
    cfg = build_config(args)
    out = _require_out(cfg)
    pop = gen_initial(cfg)
    write_population(pop, out, extra={"pair": cfg.pair})
    print(f"members={len(pop)} threshold={pop.threshold!r} D_s={pop.diversity!r}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    checkpoint = read_population(args.population)
    base = {"pair": checkpoint.manifest.get("pair", "ea-ghc"),
            "feature": checkpoint.population.feature_kind.value}
    cfg = build_config(args, base)
    out = _require_out(cfg)
    initial = checkpoint.population.rekey(cfg.feature_kind)
    log = TrajectoryLog()
    final = evolve_diverse(initial, cfg.feature_kind, cfg.solver_pair, cfg.mutation_params(),
                           cfg.iterations, cfg.r, cfg.theta, cfg.seed, callback=log)
    write_population(final, out, extra={"pair": cfg.pair})
    log.write(os.path.join(out, "trajectory.csv"))
    print(f"initial D_s={initial.diversity!r}")
    print(f"final D_s={final.diversity!r}")
    return EXIT_OK


def cmd_ratio(args) -> int:
    if args.r < 2:
        raise UsageError("r must be at least 2")
    instance = load_instance(args.instance)
    a1, a2 = PAIRS[args.pair]
    report = discounted_ratio(instance, SolverConfig(a1, args.solver_evals, beta=args.beta),
                              SolverConfig(a2, args.solver_evals, beta=args.beta),
                              args.r, args.theta, args.seed)
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    sets = []
    for d in args.populations:
        pop = read_population(d).population
        if args.feature:
            pop = pop.rekey(args.feature)
        sets.append((os.path.normpath(d), pop))
    kinds = {pop.feature_kind for _, pop in sets}
    if len(kinds) > 1:
        raise UsageError("populations use different feature kinds; pass --feature to compare them")
    summaries = []
    for name, pop in sets:
        try:
            summaries.append(summarize(name, pop.feature_kind.value, pop.features))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    os.makedirs(args.out_dir, exist_ok=True)
    write_csv(os.path.join(args.out_dir, "summary.csv"), SUMMARY_COLUMNS,
              [s.summary_row() for s in summaries])
    write_csv(os.path.join(args.out_dir, "boxstats.csv"), BOX_COLUMNS,
              [s.box_row() for s in summaries])
    for s in summaries:
        print(f"{s.name}: avg={s.average:.6g} min={s.minimum:.6g} max={s.maximum:.6g} D_s={s.diversity}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccdiv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("random-graph", help="write a G(n, p) random graph as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_random_graph)

    p = sub.add_parser("import-graph", help="convert a Matrix Market file to graph JSON")
    p.add_argument("source")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_graph)

    p = sub.add_parser("gen-initial", help="evolve the initial discriminating population")
    _add_run_flags(p)
    p.set_defaults(func=cmd_gen_initial)

    p = sub.add_parser("evolve", help="run diversity optimisation on a population checkpoint")
    p.add_argument("population", help="checkpoint directory")
    _add_run_flags(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("ratio", help="discounted performance ratio of one instance")
    p.add_argument("instance")
    p.add_argument("--pair", choices=sorted(PAIRS), default="ea-ghc")
    p.add_argument("--solver-evals", type=int, default=10_000)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--theta", type=float, default=0.9)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("report", help="summary and box-plot statistics for population sets")
    p.add_argument("populations", nargs="+")
    p.add_argument("--feature", choices=[k.value for k in FeatureKind])
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except GenerationFailure as exc:
        print(f"ccdiv: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, CheckpointError, InstanceValidationError, GraphFormatError, ValueError) as exc:
        print(f"ccdiv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ccdiv: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
