"""
Command-line front end: parse a graph, run one analysis and print a versioned
JSON report (or rich tables) on standard output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .classify import base_recurrence, classify, reproduce_examples
from .conformal import CylinderMeasure, check_additivity, measure_of, ruelle_dual_check, state_check, sweep_cylinders
from .eigensolver import EigenSolution, VertexPotential, solve_family, solve_finite
from .errors import GoldenMismatchError, GraphError, KmsLabError, NoLoopsError, PotentialError
from .families import GraphFamily, load_graph, make_family
from .graph import FiniteGraph, FinitePath, VertexId
from .lattice import minimize_mgf, ray_structure
from .log import configure_logging, get_logger
from .periods import factor_type, period_report
from .schemas import LatticeReport, MeasureReport, RecodeReport, Report
from .settings import get_settings
from .spectral import beta0 as compute_beta0
from .structure import non_wandering, recode


logger = get_logger(__name__)


class UsageError(Exception):
    """Raised instead of exiting when argparse rejects the command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_graph_options(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--graph", type=Path, help="Path to a JSON graph document.")
    source.add_argument("--family", choices=("arms", "ladder", "rose", "cycle", "lattice-walk"), help="Built-in family.")
    parser.add_argument(
        "--params",
        nargs="*",
        default=[],
        metavar="KEY=VALUE",
        help="Family parameters, e.g. n=3 or mu='1:2;-1:1'.",
    )
    parser.add_argument("--depth", type=int, default=None, help="Truncation depth (default: KMSLAB_DEPTH, 50).")
    parser.add_argument("--tol", type=float, default=None, help="Numeric tolerance (default: KMSLAB_TOL, 1e-12).")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output", choices=("json", "text"), default="json", help="Report format.")
    common.add_argument("--log-level", default=None, help="Logging level (default: KMSLAB_LOG_LEVEL).")

    parser = _Parser(prog="kms-lab", description="Classify KMS weights and states of graph algebras.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    analyze = commands.add_parser("analyze", parents=[common], help="Structure, beta0 and periods in one report.")
    _add_graph_options(analyze)

    beta0 = commands.add_parser("beta0", parents=[common], help="Critical inverse temperature.")
    _add_graph_options(beta0)

    eigvec = commands.add_parser("eigvec", parents=[common], help="Nonnegative eigenvectors at beta.")
    _add_graph_options(eigvec)
    eigvec.add_argument("--beta", type=float, default=None, help="Inverse temperature (optional for finite graphs).")
    eigvec.add_argument("--f0", type=Path, default=None, help="Vertex-potential document (default: gauge action).")
    eigvec.add_argument("--base", default=None, help="Normalization vertex.")

    measure = commands.add_parser("measure", parents=[common], help="Conformal measure of a cylinder set.")
    _add_graph_options(measure)
    measure.add_argument("--beta", type=float, default=None)
    measure.add_argument("--f0", type=Path, default=None)
    measure.add_argument("--base", default=None)
    measure.add_argument("--cylinder", default="", help="Comma separated edge ids (empty for C_v).")
    measure.add_argument("--start", default=None, help="Start vertex for the empty cylinder.")
    measure.add_argument("--ray", type=int, default=1, help="Which extreme ray to use (1-based).")

    periods = commands.add_parser("periods", parents=[common], help="d_G, d'_G and the factor type.")
    _add_graph_options(periods)
    periods.add_argument("--beta", type=float, default=None, help="Report the factor type at this beta.")

    classify_cmd = commands.add_parser("classify", parents=[common], help="Full KMS classification.")
    _add_graph_options(classify_cmd)
    classify_cmd.add_argument("--beta", type=float, action="append", default=None, help="Sample beta (repeatable).")
    classify_cmd.add_argument("--jobs", type=int, default=1, help="Worker threads for the beta samples.")

    recode_cmd = commands.add_parser("recode", parents=[common], help="Higher-block recoding of a finite graph.")
    _add_graph_options(recode_cmd)
    recode_cmd.add_argument("--k", type=int, default=2, help="Block length.")

    lattice = commands.add_parser("lattice", parents=[common], help="MGF minimization and ray structure of a lattice walk.")
    _add_graph_options(lattice)
    lattice.add_argument("--beta", type=float, default=None)

    commands.add_parser("reproduce", parents=[common], help="Compare the built-in examples with their stored values.")
    return parser


# -- argument helpers --------------------------------------------------


def _parse_params(items: Sequence[str]) -> Dict[str, str]:
    params: Dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--params expects KEY=VALUE, got {item!r}")
        params[key.strip()] = value.strip()
    return params


def _load_family(args: argparse.Namespace) -> GraphFamily:
    if args.graph is not None:
        try:
            text = args.graph.read_text(encoding="utf-8")
        except OSError as exc:
            raise GraphError(f"cannot read graph document {str(args.graph)!r}: {exc.strerror}") from exc
        family = load_graph(text)
        if args.params:
            raise UsageError("--params only applies to --family")
        return family
    return make_family(args.family, _parse_params(args.params))


def _load_potential(path: Optional[Path]) -> VertexPotential:
    if path is None:
        return VertexPotential.gauge()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PotentialError(f"cannot read potential document {str(path)!r}: {exc.strerror}") from exc
    return VertexPotential.from_document(text)


def _vertex(graph: FiniteGraph, text: Optional[str]) -> Optional[VertexId]:
    """Resolve a command-line vertex id against the graph's int or str ids."""
    if text is None:
        return None
    if text in graph:
        return text
    try:
        number = int(text)
    except ValueError:
        number = None
    if number is not None and number in graph:
        return number
    raise GraphError(f"unknown vertex {text!r}")


def _family_beta(family: GraphFamily, beta: Optional[float], potential: VertexPotential, tol: Optional[float]) -> float:
    if beta is not None:
        return beta
    if not family.is_finite:
        raise UsageError("--beta is required for infinite families")
    return solve_finite(family.graph, potential, tol=tol).beta


def _solutions(args: argparse.Namespace, family: GraphFamily) -> List[EigenSolution]:
    potential = _load_potential(args.f0)
    depth = args.depth
    graph = family.graph if family.is_finite else family.truncation(get_settings().depth if depth is None else depth)
    base = _vertex(graph, args.base)
    beta = _family_beta(family, args.beta, potential, args.tol)
    return solve_family(family, beta, potential, depth=depth, base=base, tol=args.tol)


# -- commands ----------------------------------------------------------


def _run_analyze(args: argparse.Namespace, family: GraphFamily) -> Report:
    structure = non_wandering(family, family.depths(get_settings().depth if args.depth is None else args.depth)[0])
    b0 = None
    if structure.nw_class != "empty":
        try:
            b0 = compute_beta0(family, depth=args.depth, tol=args.tol)
        except NoLoopsError as exc:
            logger.warning("%s", exc)
    return Report(
        command="analyze",
        graph=family.descriptor(),
        structure=structure,
        beta0=b0,
        periods=period_report(family, depth=args.depth),
    )


def _run_beta0(args: argparse.Namespace, family: GraphFamily) -> Report:
    b0 = compute_beta0(family, depth=args.depth, tol=args.tol)
    return Report(
        command="beta0",
        graph=family.descriptor(),
        beta0=b0,
        recurrence=base_recurrence(family, b0, args.depth),
    )


def _run_eigvec(args: argparse.Namespace, family: GraphFamily) -> Report:
    solutions = _solutions(args, family)
    state = state_check(family, solutions[0], depth=args.depth) if len(solutions) == 1 else None
    return Report(
        command="eigvec",
        graph=family.descriptor(),
        eigensolution=[s.to_model() for s in solutions],
        state=state,
    )


def _run_measure(args: argparse.Namespace, family: GraphFamily) -> Report:
    solutions = _solutions(args, family)
    if not 1 <= args.ray <= len(solutions):
        raise UsageError(f"--ray must be between 1 and {len(solutions)}")
    m = CylinderMeasure.from_solution(solutions[args.ray - 1])
    ids = [part.strip() for part in args.cylinder.split(",") if part.strip()]
    start = _vertex(m.graph, args.start)
    mu = FinitePath.from_edge_ids(m.graph, ids, start=start)
    if mu.edges:
        ruelle = ruelle_dual_check(m, mu)
    else:
        _, ruelle = sweep_cylinders(m, 1, start=mu.start)
    return Report(
        command="measure",
        graph=family.descriptor(),
        eigensolution=[m.solution.to_model()],
        measure=MeasureReport(
            start=mu.start,
            cylinder=list(mu.edge_ids),
            value=measure_of(m, mu),
            additivity=check_additivity(m, mu),
            ruelle=ruelle,
        ),
    )


def _run_periods(args: argparse.Namespace, family: GraphFamily) -> Report:
    report = period_report(family, depth=args.depth)
    factor = factor_type(report, args.beta, tol=args.tol) if args.beta is not None else None
    return Report(command="periods", graph=family.descriptor(), periods=report, factor_type=factor)


def _run_classify(args: argparse.Namespace, family: GraphFamily) -> Report:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    result = classify(family, args.beta, depth=args.depth, tol=args.tol, jobs=args.jobs)
    return Report(
        command="classify",
        graph=family.descriptor(),
        recurrence=base_recurrence(family, result.beta0, args.depth),
        classification=result,
    )


def _log_beta0(family: GraphFamily) -> Optional[float]:
    try:
        return compute_beta0(family).value
    except NoLoopsError:
        return None


def _run_recode(args: argparse.Namespace, family: GraphFamily) -> Report:
    if not family.is_finite:
        raise GraphError("recode needs a finite graph")
    recoded = recode(family.graph, args.k)
    return Report(
        command="recode",
        graph=family.descriptor(),
        recode=RecodeReport(
            k=args.k,
            vertices=len(recoded),
            edges=len(recoded.edges),
            beta0_original=_log_beta0(family),
            beta0_recoded=_log_beta0(GraphFamily.from_graph(recoded)),
        ),
    )


def _run_lattice(args: argparse.Namespace, family: GraphFamily) -> Report:
    if family.walk is None:
        raise GraphError("the lattice command needs a lattice-walk family")
    solution = minimize_mgf(family.walk, args.tol)
    rays = ray_structure(family.walk, args.beta, tol=args.tol) if args.beta is not None else None
    return Report(
        command="lattice",
        graph=family.descriptor(),
        lattice=LatticeReport(mgf=solution.to_model(), rays=rays, generates=family.walk.generates()),
    )


_HANDLERS = {
    "analyze": _run_analyze,
    "beta0": _run_beta0,
    "eigvec": _run_eigvec,
    "measure": _run_measure,
    "periods": _run_periods,
    "classify": _run_classify,
    "recode": _run_recode,
    "lattice": _run_lattice,
}


# -- output ------------------------------------------------------------


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, ensure_ascii=False)
    return str(value)


def render_text(report: Report, console: Console) -> None:
    data = report.model_dump(mode="json", by_alias=True, exclude_none=True)
    console.print(f"[bold]{escape(data.pop('command'))}[/bold]  ({escape(data.pop('schema'))})")
    for section, body in data.items():
        if isinstance(body, dict) and isinstance(body.get("rows"), list):
            table = Table(title=section)
            columns = list(body["rows"][0]) if body["rows"] else []
            for column in columns:
                table.add_column(column)
            for row in body["rows"]:
                table.add_row(*(escape(_cell(row.get(c))) for c in columns))
            console.print(table)
            continue
        table = Table(title=section, show_header=False)
        table.add_column("field", style="bold")
        table.add_column("value")
        items = body.items() if isinstance(body, dict) else enumerate(body if isinstance(body, list) else [body])
        for key, value in items:
            table.add_row(escape(str(key)), escape(_cell(value)))
        console.print(table)


def _emit(report: Report, output: str) -> None:
    if output == "text":
        render_text(report, Console(file=sys.stdout, width=120))
    else:
        sys.stdout.write(report.to_json() + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    errors = Console(stderr=True)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        errors.print(escape(str(exc)), highlight=False)
        return 1

    try:
        # flags obey the same bounds as the environment
        settings = get_settings().with_overrides(
            log_level=args.log_level,
            tol=getattr(args, "tol", None),
            depth=getattr(args, "depth", None),
        )
        configure_logging(settings.log_level)
        if args.command == "reproduce":
            golden = reproduce_examples()
            _emit(Report(command="reproduce", golden=golden), args.output)
            if not golden.passed:
                errors.print("[red]error:[/red] golden mismatch")
                return GoldenMismatchError.exit_code
            return 0
        family = _load_family(args)
        report = _HANDLERS[args.command](args, family)
    except UsageError as exc:
        errors.print(escape(str(exc)), highlight=False)
        return 1
    except KmsLabError as exc:
        errors.print(f"[red]error:[/red] {escape(str(exc))}", highlight=False)
        return exc.exit_code
    _emit(report, args.output)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
