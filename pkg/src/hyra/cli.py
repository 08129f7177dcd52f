"""Command-line front end.

Exit codes (stable contract): 0 success / SafeProved, 1 PossiblyUnsafe,
2 input or parse error, 3 engine error. stdout carries machine-parseable
results only; human-oriented diagnostics go to stderr. HYRA_THREADS caps
the internal worker count; the engine is sequential today, so the variable
is accepted and validated but results never depend on it.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import corpus
from .config import parse_config
from .errors import EngineError, HyraError, ModelFormatError
from .flowstar import emit_flowstar
from .interchange import read_json, write_json
from .ir import ModelBundle, ReachSettings, validate
from .plot import project_csv, projection_to_csv, projection_to_svg
from .reach import Verdict, reach, segments_to_csv
from .simulate import Integrator, SimOptions, sample_initial, simulate, trajectory_to_csv
from .spaceex import emit_spaceex, parse_spaceex

EXIT_OK = 0
EXIT_UNSAFE = 1
EXIT_INPUT = 2
EXIT_ENGINE = 3


def _threads() -> int:
    raw = os.environ.get("HYRA_THREADS", "")
    if not raw:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ModelFormatError(f"HYRA_THREADS must be an integer, got {raw!r}")
    return max(1, count)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc


def _load_bundle(model_path: str, cfg_path: str | None, step_override: float | None) -> ModelBundle:
    path = Path(model_path)
    if path.suffix == ".json":
        bundle = read_json(_read_text(model_path))
    else:
        automaton = parse_spaceex(_read_text(model_path))
        if cfg_path is None:
            sibling = path.with_name("config.cfg")
            cfg_path = str(sibling) if sibling.exists() else None
        if cfg_path is None:
            raise ModelFormatError(
                f"no configuration for {model_path}: pass one or place config.cfg next to the model"
            )
        parsed = parse_config(_read_text(cfg_path), automaton.vars)
        if parsed.initial is None:
            raise ModelFormatError("configuration does not define an initial set (key: initially)")
        if parsed.system is not None and parsed.system != automaton.name:
            print(
                f"note: config system {parsed.system!r} differs from model name {automaton.name!r}",
                file=sys.stderr,
            )
        if parsed.initial.location not in automaton.location_names():
            raise ModelFormatError(f"initial location {parsed.initial.location!r} not in model")
        bundle = ModelBundle(automaton, parsed.settings, parsed.initial, source_format=path.suffix.lstrip("."))
    if step_override is not None:
        s = bundle.settings
        try:
            settings = ReachSettings(
                s.horizon, step_override, s.max_jumps, s.forbidden, s.output_vars, s.fixpoint_check
            )
        except ValueError as exc:
            raise ModelFormatError(f"--step: {exc}") from exc
        bundle = ModelBundle(bundle.automaton, settings, bundle.initial, bundle.source_format)
    return bundle


def _write_output(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _verdict_line(result) -> str:
    verdict = "SafeProved" if result.verdict == Verdict.SAFE_PROVED else "PossiblyUnsafe"
    return (
        f"VERDICT {verdict} jumps={result.stats.max_depth} "
        f"segments={result.stats.segments} time={result.stats.covered_time:g}"
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    path = Path(args.model)
    if path.suffix == ".json":
        automaton = read_json(_read_text(args.model)).automaton
    else:
        automaton = parse_spaceex(_read_text(args.model), validated=False)
    report = validate(automaton)
    if report.ok:
        print("OK")
        return EXIT_OK
    for defect in report:
        print(f"DEFECT {defect.code} {defect.message}")
    return EXIT_INPUT


def cmd_translate(args) -> int:
    bundle = _load_bundle(args.model, args.cfg, None)
    if args.to == "flowstar":
        text = emit_flowstar(bundle)
    elif args.to == "spaceex":
        text = emit_spaceex(bundle.automaton)
    else:
        text = write_json(bundle)
    _write_output(text, args.out)
    return EXIT_OK


def cmd_reach(args) -> int:
    bundle = _load_bundle(args.model, args.cfg, args.step)
    result = reach(bundle)
    print(_verdict_line(result))
    if result.stats.termination is not None:
        print(f"note: exploration ended via {result.stats.termination.value}", file=sys.stderr)
    print(f"note: wall time {result.stats.wall_time:.3f}s", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(segments_to_csv(result, bundle.automaton.vars.state_vars))
    return EXIT_OK if result.verdict == Verdict.SAFE_PROVED else EXIT_UNSAFE


def cmd_check(args) -> int:
    bundle = _load_bundle(args.model, args.cfg, args.step)
    result = reach(bundle)
    print(_verdict_line(result))
    return EXIT_OK if result.verdict == Verdict.SAFE_PROVED else EXIT_UNSAFE


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args.model, args.cfg, None)
    kind = Integrator.EULER if args.integrator == "euler" else Integrator.HEUN
    step = args.step if args.step is not None else bundle.settings.step / 10.0
    options = SimOptions(step=step)
    points = sample_initial(bundle.initial.box, args.seeds, args.seed)
    state_vars = bundle.automaton.vars.state_vars
    chunks = []
    for run, x0 in enumerate(points):
        traj = simulate(bundle, x0, kind, options)
        print(
            f"RUN {run} samples={traj.sample_count} events={len(traj.events)} "
            f"zeno={'true' if traj.zeno else 'false'}"
        )
        body = trajectory_to_csv(traj, state_vars).splitlines()
        if run == 0:
            chunks.append("run," + body[0])
        chunks.extend(f"{run},{line}" for line in body[1:])
    if args.out:
        Path(args.out).write_text("\n".join(chunks) + "\n")
    return EXIT_OK


def cmd_plot(args) -> int:
    proj = project_csv(_read_text(args.csv), args.x, args.y)
    text = projection_to_svg(proj) if args.format == "svg" else projection_to_csv(proj)
    _write_output(text, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        bench = corpus.benchmark_from_name(args.name)
    except KeyError as exc:
        raise ModelFormatError(str(exc.args[0])) from exc
    bundle = corpus.build(bench)
    sub = args.subcommand
    if sub == "check":
        result = reach(bundle)
        print(_verdict_line(result))
        return EXIT_OK if result.verdict == Verdict.SAFE_PROVED else EXIT_UNSAFE
    if sub == "reach":
        result = reach(bundle)
        print(_verdict_line(result))
        if args.out:
            Path(args.out).write_text(segments_to_csv(result, bundle.automaton.vars.state_vars))
        return EXIT_OK if result.verdict == Verdict.SAFE_PROVED else EXIT_UNSAFE
    if sub == "validate":
        report = validate(bundle.automaton)
        if report.ok:
            print("OK")
            return EXIT_OK
        for defect in report:
            print(f"DEFECT {defect.code} {defect.message}")
        return EXIT_INPUT
    if sub == "translate":
        if args.to == "flowstar":
            text = emit_flowstar(bundle)
        elif args.to == "spaceex":
            text = emit_spaceex(bundle.automaton)
        else:
            text = write_json(bundle)
        _write_output(text, args.out)
        return EXIT_OK
    if sub == "plot":
        result = reach(bundle)
        csv_text = segments_to_csv(result, bundle.automaton.vars.state_vars)
        x_name, y_name = bundle.settings.output_vars or bundle.automaton.vars.state_vars[:2]
        proj = project_csv(csv_text, args.x or x_name, args.y or y_name)
        text = projection_to_svg(proj) if args.format == "svg" else projection_to_csv(proj)
        _write_output(text, args.out)
        return EXIT_OK
    if sub == "simulate":
        kind = Integrator.EULER if args.integrator == "euler" else Integrator.HEUN
        options = SimOptions(step=bundle.settings.step / 10.0)
        points = sample_initial(bundle.initial.box, args.seeds, args.seed)
        chunks = []
        for run, x0 in enumerate(points):
            traj = simulate(bundle, x0, kind, options)
            print(
                f"RUN {run} samples={traj.sample_count} events={len(traj.events)} "
                f"zeno={'true' if traj.zeno else 'false'}"
            )
            body = trajectory_to_csv(traj, bundle.automaton.vars.state_vars).splitlines()
            if run == 0:
                chunks.append("run," + body[0])
            chunks.extend(f"{run},{line}" for line in body[1:])
        if args.out:
            Path(args.out).write_text("\n".join(chunks) + "\n")
        return EXIT_OK
    raise ModelFormatError(f"unknown bench subcommand {sub!r}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyra",
        description="Affine hybrid automata: translate models, compute flowpipes, simulate runs.",
        epilog="Option precedence: command-line flag > configuration file > built-in default.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="structural checks on a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("translate", help="convert between model formats")
    p.add_argument("model")
    p.add_argument("cfg", nargs="?", default=None)
    p.add_argument("--to", choices=("flowstar", "spaceex", "json"), required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("reach", help="flowpipe reachability with verdict and CSV export")
    p.add_argument("model")
    p.add_argument("cfg", nargs="?", default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("check", help="verdict only, scripting-friendly")
    p.add_argument("model")
    p.add_argument("cfg", nargs="?", default=None)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="seeded hybrid trajectories")
    p.add_argument("model")
    p.add_argument("cfg", nargs="?", default=None)
    p.add_argument("--integrator", choices=("euler", "heun"), default="heun")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="project a CSV export to SVG or CSV")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--format", choices=("svg", "csv"), default="svg")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bench", help="run a command against a built-in benchmark")
    p.add_argument("name")
    p.add_argument(
        "subcommand",
        choices=("check", "reach", "validate", "translate", "simulate", "plot"),
    )
    p.add_argument("--to", choices=("flowstar", "spaceex", "json"), default="flowstar")
    p.add_argument("--integrator", choices=("euler", "heun"), default="heun")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x", default=None)
    p.add_argument("--y", default=None)
    p.add_argument("--format", choices=("svg", "csv"), default="svg")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads()
        return args.func(args)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EngineError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except HyraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
