"""Command-line front end: ``backbone --measure NAME --input FILE [options]``.

Exit codes: 0 success, 2 bad input or inconsistent options, 3 the chosen
search strategy cannot run at this size (e.g. an exact sweep over too many
edges).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .distribution import expected_entropy, gaussian_local_entropy, local_entropy
from .engine import Annealed, Exact, Sampled, SearchStrategy
from .errors import DomainError, InfeasibleStrategyError, InputError
from .graph import communicability, structural_synergy_backbone
from .io import (
    atomic_write,
    format_number,
    load_json,
    parse_distribution,
    parse_gaussian,
    parse_graph_rows,
    read_distribution,
    read_gaussian,
    read_graph,
)
from .measures import (
    DivergenceSpectrum,
    MiFormulation,
    entropy_backbone_expected,
    entropy_backbone_local,
    gaussian_entropy_backbone,
    kl_backbone,
    mi_backbone,
    negentropy_backbone,
    total_correlation_backbone,
)
from .search import AnnealSchedule, enforce_monotone, monotonicity_check
from .spectrum import Aggregator

__all__ = ["MEASURES", "RunConfig", "RunReport", "Diagnostics", "run", "emit_plot_data",
           "validate_input", "build_parser", "main"]

MEASURES = ("entropy", "negentropy", "total-correlation", "kl", "mi-conditional", "mi-joint",
            "gaussian-entropy", "communicability")
SUM_TOL = 1e-9

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3


@dataclass
class RunConfig:
    measure: str
    input_path: str
    aggregator: Aggregator = Aggregator.MIN
    strategy: SearchStrategy = field(default_factory=Exact)
    target_index: int | None = None
    log_base: str | None = None        # "2" or "e"; None picks the measure's natural unit
    output_format: str = "json"
    seed: int = 0
    enforce_monotone: bool = False
    local_state: tuple | None = None
    prior_path: str | None = None
    num_nodes: int | None = None
    directed: bool = False
    threads: int = 1

    def check(self) -> None:
        if self.measure not in MEASURES:
            raise InputError(f"unknown measure '{self.measure}'; choose one of {', '.join(MEASURES)}")
        is_mi = self.measure.startswith("mi-")
        if is_mi and self.target_index is None:
            raise InputError(f"--measure {self.measure} needs --target IDX")
        if not is_mi and self.target_index is not None:
            raise InputError(f"--target only applies to mi-conditional and mi-joint, not {self.measure}")
        if (self.measure == "kl") != (self.prior_path is not None):
            raise InputError("--prior PATH is required for --measure kl and only valid there")
        if self.measure == "communicability" and self.local_state is not None:
            raise InputError("--local does not apply to communicability")
        if self.log_base not in (None, "2", "e"):
            raise InputError("--base must be 2 or e")
        if self.output_format not in ("json", "csv"):
            raise InputError("--format must be json or csv")
        if self.threads < 1:
            raise InputError("--threads must be at least 1")

    def base(self) -> float:
        if self.log_base is None:
            return math.e if self.measure == "gaussian-entropy" else 2.0
        return 2.0 if self.log_base == "2" else math.e

    def echo(self) -> dict:
        d = asdict(self)
        d["aggregator"] = self.aggregator.value
        d["strategy"] = self.strategy.tag
        d["log_base"] = None if self.measure == "communicability" else (
            "e" if self.base() == math.e else "2")
        d["local_state"] = None if self.local_state is None else list(self.local_state)
        del d["threads"]  # never changes results
        return d


@dataclass
class RunReport:
    config: dict
    header: dict
    spectrum: list[dict]
    total: float
    atom_sum: float
    sum_identity_ok: bool
    violations: list[dict]
    components: dict | None = None
    local: list[dict] | None = None
    raw_synergy: list[float] | None = None
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    version: str = __version__

    @property
    def partial(self) -> list[float]:
        return [r["partial"] for r in self.spectrum]

    def to_dict(self, include_time: bool = True) -> dict:
        d = asdict(self)
        if not include_time:
            del d["wall_time"]
        return d

    def to_json(self, include_time: bool = True) -> str:
        return json.dumps(self.to_dict(include_time), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["alpha,synergy,partial,winner,violation"]
        for r in self.spectrum:
            winner = "" if r["winner"] is None else " ".join(map(str, r["winner"]))
            lines.append(f"{r['alpha']},{format_number(r['synergy'])},{format_number(r['partial'])},"
                         f"{winner},{str(r['violation']).lower()}")
        return "\n".join(lines) + "\n"


def _divergence_records(res: DivergenceSpectrum) -> list[dict]:
    viol = set(res.monotone_violations)
    cum = np.cumsum(res.atoms)
    return [{"alpha": a + 1, "synergy": float(cum[a]), "partial": float(res.atoms[a]),
             "winner": None, "violation": (a + 1) in viol} for a in range(len(res.atoms))]


def _local_table(res: DivergenceSpectrum) -> list[dict] | None:
    if res.states is None or res.local_atoms is None:
        return None
    return [{"state": s.tolist(), "p": float(w), "partial": a.tolist()}
            for s, w, a in zip(res.states, res.weights, res.local_atoms)]


def _parse_local(config: RunConfig, k: int, floats: bool = False):
    if config.local_state is None:
        return None
    if len(config.local_state) != k:
        raise InputError(f"--local has {len(config.local_state)} values but the input has {k} variables")
    return np.array(config.local_state, dtype=float if floats else np.int64)


def run(config: RunConfig) -> RunReport:
    """Run one decomposition described by ``config``."""
    config.check()
    start = time.perf_counter()
    base = config.base()
    agg, strat, repair, workers = config.aggregator, config.strategy, config.enforce_monotone, config.threads
    components = local = raw = None
    warnings: list[str] = []
    notes: list[str] = []

    if config.measure == "communicability":
        g = read_graph(config.input_path, config.num_nodes, config.directed)
        spec = structural_synergy_backbone(g, agg, strat, workers)
        if repair:
            spec = enforce_monotone(spec)
        records, total, ground = spec.to_records(), communicability(g).mean_offdiagonal, g.num_edges
        raw_spec, notes = spec, list(spec.notes)
    elif config.measure == "gaussian-entropy":
        model, points = read_gaussian(config.input_path)
        point = _parse_local(config, model.dim, floats=True)
        pts = points if point is None else point
        spec = gaussian_entropy_backbone(model, pts, agg, strat, base, repair, workers)
        records, ground = spec.to_records(), model.dim
        total = float(np.mean([gaussian_local_entropy(model, p, base) for p in np.atleast_2d(pts)]))
        raw_spec, notes = spec, list(spec.notes)
    else:
        dist = read_distribution(config.input_path)
        state = _parse_local(config, dist.k)
        ground = dist.k
        if config.measure == "entropy":
            if state is None:
                spec = entropy_backbone_expected(dist, agg, strat, base, repair, workers)
                total = expected_entropy(dist, base)
            else:
                spec = entropy_backbone_local(dist, state, agg, strat, base, repair)
                total = local_entropy(dist, state, base)
            records, raw_spec, notes = spec.to_records(), spec, list(spec.notes)
        else:
            kw = dict(aggregator=agg, strategy=strat, state=state, base=base, repair=repair,
                      workers=workers)
            if config.measure == "negentropy":
                res = negentropy_backbone(dist, **kw)
            elif config.measure == "total-correlation":
                res = total_correlation_backbone(dist, **kw)
            elif config.measure == "kl":
                res = kl_backbone(dist, read_distribution(config.prior_path), **kw)
            else:
                if not 0 <= config.target_index < dist.k:
                    raise InputError(f"--target {config.target_index} out of range for {dist.k} variables")
                form = MiFormulation.CONDITIONAL if config.measure == "mi-conditional" else MiFormulation.JOINT
                res = mi_backbone(dist, config.target_index, form, **kw)
                if form is MiFormulation.CONDITIONAL:
                    ground = dist.k - 1
            records, total = _divergence_records(res), res.total
            components = {"prior": res.prior_spectrum.to_records(),
                          "posterior": res.posterior_spectrum.to_records()}
            local = _local_table(res) if state is None else None
            warnings.extend(res.warnings)
            notes = sorted(set(res.prior_spectrum.notes) | set(res.posterior_spectrum.notes))
            raw_spec = None
            for part in (res.prior_spectrum, res.posterior_spectrum):
                if part.repaired:
                    raw = raw or {}
                    raw[part.label] = part.raw_alpha_synergy.tolist()

    if raw_spec is not None and raw_spec.repaired:
        raw = raw_spec.raw_alpha_synergy.tolist()
    atom_sum = float(sum(r["partial"] for r in records))
    violations = []
    if raw_spec is not None:
        series = raw_spec.raw_alpha_synergy if raw_spec.repaired else raw_spec.alpha_synergy
        violations = list(monotonicity_check(series).violations)
    else:
        violations = [{"alpha": a, "component": c} for c in ("prior", "posterior")
                      for a in [r["alpha"] for r in components[c] if r["violation"]]]
    header = {
        "measure": config.measure,
        "aggregator": agg.value,
        "strategy": strat.tag,
        "seed": config.seed,
        "ground_size": ground,
        "base": config.echo()["log_base"],
        "local_state": None if config.local_state is None else list(config.local_state),
    }
    return RunReport(
        config=config.echo(), header=header, spectrum=records, total=float(total),
        atom_sum=atom_sum,
        sum_identity_ok=abs(atom_sum - total) <= SUM_TOL * max(1.0, abs(total)),
        violations=violations, components=components, local=local, raw_synergy=raw,
        warnings=warnings, notes=notes, wall_time=time.perf_counter() - start)


def emit_plot_data(report: RunReport, path) -> None:
    """Write ``alpha,synergy,partial,violation`` rows for external plotting."""
    lines = ["alpha,synergy,partial,violation"]
    for r in report.spectrum:
        lines.append(f"{r['alpha']},{format_number(r['synergy'])},{format_number(r['partial'])},"
                     f"{str(r['violation']).lower()}")
    atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# validation

@dataclass
class Diagnostics:
    kind: str
    problems: list[str]
    summary: str = ""

    @property
    def ok(self) -> bool:
        return not self.problems

    def lines(self) -> list[str]:
        if self.ok:
            return [f"ok: {self.summary}"]
        return [f"problem: {p}" for p in self.problems]


def _validate_distribution(data: dict, source: str) -> Diagnostics:
    problems = []
    sizes = data.get("alphabet_sizes")
    names = data.get("variables")
    pmf = data.get("pmf")
    if not isinstance(sizes, list) or not all(isinstance(a, int) and a > 0 for a in sizes):
        problems.append("'alphabet_sizes' must be a list of positive integers")
        sizes = None
    if names is not None and sizes is not None and len(names) != len(sizes):
        problems.append(f"{len(names)} variable names but {len(sizes)} alphabet sizes")
    if not isinstance(pmf, list) or not pmf:
        problems.append("'pmf' must be a non-empty list of {\"state\": [...], \"p\": ...} entries")
        pmf = []
    total, seen = 0.0, set()
    for n, entry in enumerate(pmf):
        try:
            state, p = list(entry["state"]), float(entry["p"])
        except (TypeError, KeyError, ValueError):
            problems.append(f"pmf entry {n}: needs 'state' (list of ints) and 'p' (number)")
            continue
        if p < 0 or not math.isfinite(p):
            problems.append(f"pmf entry {n} {state}: probability {p} is not a non-negative number")
        else:
            total += p
        if sizes is not None:
            if len(state) != len(sizes):
                problems.append(f"pmf entry {n} {state}: {len(state)} symbols, expected {len(sizes)}")
            else:
                for i, (s, a) in enumerate(zip(state, sizes)):
                    if not isinstance(s, int) or not 0 <= s < a:
                        problems.append(f"pmf entry {n} {state}: symbol {s} of variable {i} outside [0, {a})")
        key = tuple(state)
        if key in seen:
            problems.append(f"pmf entry {n} {state}: state listed more than once")
        seen.add(key)
    if pmf and abs(total - 1.0) > 1e-9:
        problems.append(f"probabilities sum to {total:.12g} (deficit {1.0 - total:.12g}); they must sum to 1")
    if problems:
        return Diagnostics("distribution", problems)
    dist = parse_distribution(data, source)
    return Diagnostics("distribution", [], f"distribution with k={dist.k}, support size "
                       f"{dist.support_size}, entropy {format_number(expected_entropy(dist))} bits")


def _validate_graph(text: str, source: str, num_nodes: int | None) -> Diagnostics:
    try:
        edges = parse_graph_rows(text, source)
    except InputError as e:
        return Diagnostics("graph", [str(e)])
    problems, seen = [], set()
    for n, (u, v, w) in enumerate(edges):
        if not math.isfinite(w):
            problems.append(f"edge {n} ({u},{v}): weight {w} is not finite")
        elif w < 0:
            problems.append(f"edge {n} ({u},{v}): negative weight {w} violates the non-negativity "
                            "desideratum (communicability would not be monotone)")
        if u == v:
            problems.append(f"edge {n} ({u},{v}): self-loop")
        if u < 0 or v < 0 or (num_nodes is not None and max(u, v) >= num_nodes):
            problems.append(f"edge {n} ({u},{v}): node index out of range")
        key = (min(u, v), max(u, v))
        if key in seen:
            problems.append(f"edge {n} ({u},{v}): duplicate edge")
        seen.add(key)
    if problems:
        return Diagnostics("graph", problems)
    n_nodes = num_nodes if num_nodes is not None else max((max(u, v) for u, v, _ in edges), default=-1) + 1
    return Diagnostics("graph", [], f"graph with {max(n_nodes, 1)} nodes and {len(edges)} edges")


def validate_input(path, num_nodes: int | None = None) -> Diagnostics:
    """Check an input file and collect every problem found (never raises)."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            return _validate_graph(path.read_text(), str(path), num_nodes)
        data = load_json(path)
    except (InputError, OSError) as e:
        return Diagnostics("unknown", [str(e)])
    if "mean" in data:
        try:
            model, pts = parse_gaussian(data, str(path))
        except InputError as e:
            return Diagnostics("gaussian", [str(e)])
        return Diagnostics("gaussian", [], f"gaussian with dimension {model.dim}, {len(pts)} points")
    return _validate_distribution(data, str(path))


# ---------------------------------------------------------------------------
# argument parsing

def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("BACKBONE_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="backbone",
        description="Synergy backbone decomposition of discrete distributions, Gaussian "
                    "models and weighted graphs.")
    p.add_argument("--measure", choices=MEASURES)
    p.add_argument("--input", dest="input_path", help="distribution/Gaussian JSON or graph CSV")
    p.add_argument("--prior", dest="prior_path", help="prior distribution JSON (kl only)")
    p.add_argument("--aggregator", choices=[a.value for a in Aggregator], default="min")
    s = p.add_mutually_exclusive_group()
    s.add_argument("--exact", action="store_true", help="exhaustive sweep (default)")
    s.add_argument("--sample", type=int, metavar="N", help="random sampling, N draws per scale")
    s.add_argument("--anneal", action="store_true", help="simulated annealing")
    p.add_argument("--temp", type=float, help="initial temperature (default: from the data)")
    p.add_argument("--cooling", type=float, default=0.95)
    p.add_argument("--steps", type=int, default=50, help="moves per temperature")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--entropy-seed", action="store_true",
                   help="draw the seed from the OS instead (it is echoed in the report)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $BACKBONE_THREADS or 1); never changes results")
    p.add_argument("--base", choices=["2", "e"], default=None)
    p.add_argument("--target", type=int, dest="target_index", metavar="IDX")
    p.add_argument("--local", metavar="S1,S2,...", help="decompose one state instead of the expectation")
    p.add_argument("--nodes", type=int, help="node count for graph input")
    p.add_argument("--directed", action="store_true", help="treat graph edges as directed (experimental)")
    p.add_argument("--enforce-monotone", action="store_true")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json", dest="output_format")
    p.add_argument("--plot-data", metavar="PATH")
    p.add_argument("--validate", action="store_true", help="only check the input file")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if not args.measure:
        raise InputError("--measure is required")
    if not args.input_path:
        raise InputError("--input is required")
    seed = secrets.randbits(63) if args.entropy_seed else args.seed
    if args.sample is not None:
        if args.sample < 1:
            raise InputError("--sample needs a positive number of draws")
        strategy: SearchStrategy = Sampled(args.sample, seed)
    elif args.anneal:
        try:
            sched = AnnealSchedule(args.temp, args.cooling, args.steps, args.restarts)
        except ValueError as e:
            raise InputError(str(e)) from None
        strategy = Annealed(sched, seed)
    else:
        strategy = Exact()
    local = None
    if args.local is not None:
        try:
            parts = [x.strip() for x in args.local.split(",")]
            local = tuple(float(x) if args.measure == "gaussian-entropy" else int(x) for x in parts)
        except ValueError:
            raise InputError(f"cannot parse --local '{args.local}' as comma-separated values") from None
    return RunConfig(
        measure=args.measure, input_path=args.input_path, aggregator=Aggregator(args.aggregator),
        strategy=strategy, target_index=args.target_index, log_base=args.base,
        output_format=args.output_format, seed=seed, enforce_monotone=args.enforce_monotone,
        local_state=local, prior_path=args.prior_path, num_nodes=args.nodes,
        directed=args.directed,
        threads=args.threads if args.threads is not None else _default_threads())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.validate:
        if not args.input_path:
            print("problem: --validate needs --input", file=sys.stderr)
            return EXIT_OK
        for line in validate_input(args.input_path, args.nodes).lines():
            print(line)
        return EXIT_OK
    try:
        config = config_from_args(args)
        report = run(config)
    except InfeasibleStrategyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, DomainError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    text = report.to_csv() if config.output_format == "csv" else report.to_json()
    try:
        if args.output:
            atomic_write(args.output, text)
        else:
            sys.stdout.write(text)
        if args.plot_data:
            emit_plot_data(report, args.plot_data)
    except OSError as e:
        print(f"error: cannot write output: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
