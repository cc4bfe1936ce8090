"""Batch command line: load a task directory, run a learning mode,
print the learned program, the anytime trace, and stage statistics.

A task directory holds bias.pl, bk.pl and exs.pl, plus an optional
ground.json manifest for list tasks: the manifest's example lists are
pre-ground into suffix constants with head/tail/empty relation facts so
that recursion runs over a finite domain.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .bias import BiasError, BiasSpec, parse_bias
from .combine import emit_asp_encoding
from .engine import STAGES, LearnConfig, LearnResult, Mode, learn
from .evaluate import ExampleSet, KnowledgeBase, TaskError
from .logic import Const, Literal, render_program
from .oracle import OracleTooLarge, brute_force_optimal
from .parse import ParseError

EXIT_OPTIMAL = 0
EXIT_TIMEOUT = 1
EXIT_NO_SOLUTION = 2
EXIT_ERROR = 3

BANNER = "*" * 20
SOLUTION_BANNER = "*" * 10 + " SOLUTION " + "*" * 10
SOLUTION_FOOTER = "*" * 30


@dataclass(frozen=True)
class TaskDirectory:
    bias_path: Path
    bk_path: Path
    exs_path: Path
    manifest_path: Path | None

    @classmethod
    def locate(cls, root: Path) -> "TaskDirectory":
        if not root.is_dir():
            raise TaskError(f"task directory not found: {root}")
        paths = {name: root / f"{name}.pl" for name in ("bias", "bk", "exs")}
        for name, path in paths.items():
            if not path.is_file():
                raise TaskError(f"missing {name} file: {path}")
        manifest = root / "ground.json"
        return cls(paths["bias"], paths["bk"], paths["exs"], manifest if manifest.is_file() else None)


def bundled_task_path(name: str) -> Path:
    return Path(resources.files("rulefuse") / "tasks" / name)


# ---------------------------------------------------------------------------
# List grounding.

def list_constant(values: list[int]) -> str:
    return "l_" + "_".join(str(v) for v in values) if values else "nil"


def ground_lists(manifest: dict) -> list[Literal]:
    """Ground facts for the manifest's lists: one constant per distinct
    suffix plus head/2, tail/2, empty/1, and the declared element
    predicates (cN/1).  Deterministically sorted."""
    if not isinstance(manifest, dict):
        raise TaskError("grounding manifest must be a JSON object")
    lists: list[list[int]] = []
    for key in ("pos", "neg", "extra"):
        block = manifest.get(key, [])
        if not isinstance(block, list) or any(not isinstance(xs, list) for xs in block):
            raise TaskError(f"manifest field {key!r} must be a list of integer lists")
        lists.extend(block)
    if not lists:
        raise TaskError("grounding manifest declares no lists")
    for xs in lists:
        if any(not isinstance(v, int) for v in xs):
            raise TaskError(f"list {xs!r} has non-integer elements")
    int_range = manifest.get("int_range")
    if int_range is not None:
        if (not isinstance(int_range, list)) or len(int_range) != 2:
            raise TaskError("int_range must be [low, high]")
        low, high = int_range
        for xs in lists:
            for v in xs:
                if not low <= v <= high:
                    raise TaskError(f"list element {v} outside int_range [{low}, {high}]")

    facts: set[Literal] = set()
    for xs in lists:
        suffix = list(xs)
        while suffix:
            name = Const(list_constant(suffix))
            rest = Const(list_constant(suffix[1:]))
            facts.add(Literal("head", (name, Const(str(suffix[0])))))
            facts.add(Literal("tail", (name, rest)))
            suffix = suffix[1:]
        facts.add(Literal("empty", (Const(list_constant([])),)))

    for value in manifest.get("element_predicates", []):
        if not isinstance(value, int):
            raise TaskError("element_predicates must be integers")
        if int_range is not None and not int_range[0] <= value <= int_range[1]:
            raise TaskError(f"element predicate {value} outside int_range")
        facts.add(Literal(f"c{value}", (Const(str(value)),)))

    from .logic import literal_key

    return sorted(facts, key=literal_key)


def load_task(task: TaskDirectory) -> tuple[BiasSpec, KnowledgeBase, ExampleSet]:
    spec = parse_bias(task.bias_path.read_text())
    kb = KnowledgeBase.from_text(task.bk_path.read_text())
    if task.manifest_path is not None:
        try:
            manifest = json.loads(task.manifest_path.read_text())
        except json.JSONDecodeError as exc:
            raise TaskError(f"malformed grounding manifest: {exc}") from exc
        kb = KnowledgeBase(kb.facts | frozenset(ground_lists(manifest)), kb.rules)
    exs = ExampleSet.from_text(task.exs_path.read_text())
    return spec, kb, exs


# ---------------------------------------------------------------------------
# Output.

def _format_hypothesis_block(tp: int, fn: int, cost: int, text: str) -> str:
    return "\n".join([BANNER, "New best hypothesis:", f"tp:{tp} fn:{fn} size:{cost}", text, BANNER])


def _solution_block(result: LearnResult) -> str:
    tp, fn, tn, fp = result.tp, result.fn, result.tn, result.fp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    lines = [
        SOLUTION_BANNER,
        f"Precision:{precision:.2f} Recall:{recall:.2f} TP:{tp} FN:{fn} TN:{tn} FP:{fp} Size:{result.cost}",
        render_program(result.best),
        SOLUTION_FOOTER,
    ]
    return "\n".join(lines)


def _stats_lines(result: LearnResult, with_timing: bool) -> list[str]:
    lines = [f"Num. programs: {result.stats.num_programs}"]
    for name in STAGES:
        stage = result.stats.stages[name]
        lines.append(f"{name.capitalize()}:")
        if with_timing:
            lines.append(
                f"    Called: {stage.calls} times    Total: {stage.total:.2f}"
                f"    Mean: {stage.mean:.3f}    Max: {stage.max:.3f}"
            )
        else:
            lines.append(f"    Called: {stage.calls} times")
    if with_timing:
        operation = sum(result.stats.stages[name].total for name in STAGES)
        lines.append(f"Total operation time: {operation:.2f}s")
        lines.append(f"Total execution time: {result.stats.total_time:.2f}s")
    return lines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulefuse",
        description="Learn an optimal definite program from a task directory.",
    )
    parser.add_argument("--task", required=True, help="task directory (bias.pl, bk.pl, exs.pl)")
    parser.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.COMBO.value)
    parser.add_argument("--max-size", type=int, default=20, help="maximum program size in literals")
    parser.add_argument("--timeout", type=float, default=None, help="wall-clock budget in seconds")
    parser.add_argument("--emit-asp", metavar="PATH", default=None,
                        help="write the combine-stage ASP encoding to PATH after the run")
    parser.add_argument("--stats", action="store_true", help="print per-stage statistics")
    parser.add_argument("--quiet", action="store_true", help="suppress the anytime trace")
    parser.add_argument("--no-timing", action="store_true",
                        help="omit wall-clock lines (stable output for golden comparisons)")
    parser.add_argument("--threads", type=int, default=1, help=argparse.SUPPRESS)
    parser.add_argument("--oracle-cap", type=int, default=None, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        task = TaskDirectory.locate(Path(args.task))
        spec, kb, exs = load_task(task)
    except (TaskError, BiasError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if args.oracle_cap is not None:
        try:
            res = brute_force_optimal(kb, exs, spec, args.oracle_cap)
        except (OracleTooLarge, TaskError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        if res.optimum_cost is None:
            print(f"Oracle: no solution within size {args.oracle_cap}")
        else:
            print(f"Oracle optimum: {res.optimum_cost} ({res.num_optima} optima)")
            print(render_program(res.witness))
        return EXIT_OPTIMAL

    mode = Mode(args.mode)
    if args.emit_asp and mode is not Mode.COMBO:
        print("error: --emit-asp requires combo mode", file=sys.stderr)
        return EXIT_ERROR
    try:
        config = LearnConfig(
            max_size=args.max_size,
            timeout=args.timeout,
            mode=mode,
            threads=args.threads,
        )
    except TaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    print(f"Num. pos examples: {exs.num_pos}")
    print(f"Num. neg examples: {exs.num_neg}")

    def progress(event: str, payload) -> None:
        if args.quiet:
            return
        if event == "size":
            print(f"Searching programs of size: {payload}")
        elif event == "best":
            text = render_program(payload.hypothesis)
            print(_format_hypothesis_block(payload.tp, payload.fn, payload.cost, text))

    try:
        result = learn(kb, exs, spec, config, progress)
    except TaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if result.best:
        print(_solution_block(result))
        solution_path = Path(args.task) / "solution.pl"
        solution_path.write_text(render_program(result.best) + "\n")
    if args.stats:
        print("\n".join(_stats_lines(result, with_timing=not args.no_timing)))

    if args.emit_asp and result.pool is not None and result.pool.programs:
        bound = result.cost if result.solution_found else None
        Path(args.emit_asp).write_text(emit_asp_encoding(result.pool, bound))

    if result.timed_out:
        if result.best:
            print("timeout: returning the best hypothesis found so far", file=sys.stderr)
        else:
            print("timeout: no hypothesis found", file=sys.stderr)
        return EXIT_TIMEOUT
    if not result.solution_found:
        print(f"no solution exists within max size {config.max_size}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    return EXIT_OPTIMAL


if __name__ == "__main__":
    sys.exit(main())
