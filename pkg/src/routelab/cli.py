"""Command line entry point.

``solve`` is the batch interface (exit 0 on solve, 2 on infeasible, 1 on
usage/parse errors); ``report`` renders the map/schedule figures and a
per-route CSV next to the solution document; ``serve`` runs the HTTP service;
``fixtures`` lists or exports the named instances.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .constraints import SideConstraints
from .errors import InfeasibleConstraints, RouteLabError
from .fixtures import fixture_names, get_fixture
from .instance import ProblemInstance, parse_native, parse_solomon
from .solution import Solution, solution_from_document, solution_to_document
from .solver import (
    INFEASIBLE_CONSTRAINTS,
    SolveBudget,
    construct,
    generate_diverse,
    improve,
    solve_exhaustive,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


def _load_instance(path: str, fmt: str) -> ProblemInstance:
    if path in fixture_names() and not Path(path).exists():
        return get_fixture(path).instance()
    text = Path(path).read_text(encoding="utf-8")
    if fmt == "solomon":
        return parse_solomon(text, name=Path(path).stem)
    if fmt == "native":
        return parse_native(text)
    # sniff: native documents are JSON objects
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return parse_native(text)
    return parse_solomon(text, name=Path(path).stem)


def _emit(document: dict, out: str | None) -> None:
    text = json.dumps(document, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_solve(args) -> int:
    instance = _load_instance(args.instance, args.format)
    constraints = SideConstraints.empty()
    budget = SolveBudget(wall_time_limit=args.time, random_seed=args.seed)

    if args.oracle:
        optimum = solve_exhaustive(instance, constraints)
        if optimum is None:
            print("infeasible: no feasible solution exists", file=sys.stderr)
            return EXIT_INFEASIBLE
        _emit(solution_to_document(optimum, constraints), args.out)
        return EXIT_OK

    if args.diverse is not None:
        try:
            result = generate_diverse(
                instance, constraints, args.diverse, args.margin, budget
            )
        except InfeasibleConstraints as exc:
            print(f"infeasible: {exc.witness}", file=sys.stderr)
            return EXIT_INFEASIBLE
        document = {
            "instance": instance.name,
            "solutions": [solution_to_document(s, constraints) for s in result.solutions],
            "note": result.note,
        }
        _emit(document, args.out)
        return EXIT_OK

    start = construct(instance, constraints, args.seed)
    outcome = improve(instance, constraints, start, budget)
    if outcome.status == INFEASIBLE_CONSTRAINTS:
        print(f"infeasible: {outcome.infeasible_witness}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(solution_to_document(outcome.solution, constraints), args.out)
    return EXIT_OK


def _cmd_report(args) -> int:
    from .report import write_report

    instance = _load_instance(args.instance, args.format)
    constraints = SideConstraints.empty()
    if args.solution:
        doc = json.loads(Path(args.solution).read_text(encoding="utf-8"))
        solution = solution_from_document(doc, instance)
        if doc.get("constraints") is not None:
            constraints = SideConstraints.from_dict(doc["constraints"], instance)
    else:
        budget = SolveBudget(wall_time_limit=args.time, random_seed=args.seed)
        start = construct(instance, constraints, args.seed)
        outcome = improve(instance, constraints, start, budget)
        if outcome.status == INFEASIBLE_CONSTRAINTS:
            print(f"infeasible: {outcome.infeasible_witness}", file=sys.stderr)
            return EXIT_INFEASIBLE
        solution = outcome.solution
    out_dir = Path(args.out_dir)
    paths = write_report(instance, solution, out_dir, constraints)
    _emit(solution_to_document(solution, constraints), str(out_dir / "solution.json"))
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    print(f"solution: {out_dir / 'solution.json'}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _cmd_fixtures(args) -> int:
    if args.write_dir:
        out = Path(args.write_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name in fixture_names():
            doc = get_fixture(name).document
            (out / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n", "utf-8")
            print(f"wrote {out / f'{name}.json'}")
    else:
        for name in fixture_names():
            fixture = get_fixture(name)
            print(f"{name}: {fixture.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="routelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve an instance and print the solution document")
    solve.add_argument("instance", help="instance file or built-in fixture name")
    solve.add_argument("--format", choices=["solomon", "native"], default=None,
                       help="input format (default: sniff)")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--time", type=float, default=30.0, help="wall-time budget in seconds")
    solve.add_argument("--diverse", type=int, default=None, metavar="K",
                       help="generate K diverse solutions")
    solve.add_argument("--margin", type=float, default=0.30,
                       help="quality margin for --diverse")
    solve.add_argument("--oracle", action="store_true",
                       help="exhaustive optimum (small instances only)")
    solve.add_argument("--out", default=None, help="write the document to a file")
    solve.set_defaults(fn=_cmd_solve)

    report = sub.add_parser("report", help="render map/schedule figures and a route CSV")
    report.add_argument("instance")
    report.add_argument("--format", choices=["solomon", "native"], default=None)
    report.add_argument("--solution", default=None, help="existing solution document")
    report.add_argument("--seed", type=int, default=0)
    report.add_argument("--time", type=float, default=10.0)
    report.add_argument("--out-dir", default="report")
    report.set_defaults(fn=_cmd_report)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(fn=_cmd_serve)

    fixtures = sub.add_parser("fixtures", help="list or export built-in fixtures")
    fixtures.add_argument("--write-dir", default=None)
    fixtures.set_defaults(fn=_cmd_fixtures)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RouteLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
