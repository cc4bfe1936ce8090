"""The generate, test, combine, constrain loop and the plain
generate-test-constrain baseline, with anytime best tracking and
per-stage statistics.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum

from .bias import BiasSpec
from .combine import CombineStatus, PromisingPool, solve_combine
from .evaluate import (
    DEFAULT_BUDGET,
    CoverageRecord,
    EvalBudget,
    ExampleSet,
    KnowledgeBase,
    TaskError,
    coverage,
)
from .generate import ConstraintKind, ConstraintStore, Generator
from .logic import Hypothesis, program_cost, render_program

STAGES = ("generate", "test", "combine", "constrain")


class Mode(Enum):
    COMBO = "combo"
    BASELINE = "baseline"


@dataclass
class StageStats:
    calls: int = 0
    total: float = 0.0
    max: float = 0.0

    @property
    def mean(self) -> float:
        return self.total / self.calls if self.calls else 0.0


class Stats:
    def __init__(self):
        self.stages = {name: StageStats() for name in STAGES}
        self.num_programs = 0
        self.total_time = 0.0

    @contextmanager
    def duration(self, stage: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            s = self.stages[stage]
            s.calls += 1
            s.total += dt
            if dt > s.max:
                s.max = dt


@dataclass(frozen=True)
class LearnConfig:
    max_size: int = 20
    timeout: float | None = None
    mode: Mode = Mode.COMBO
    budget: EvalBudget = DEFAULT_BUDGET
    # The engine is fully deterministic; the seed exists for any future
    # randomized internals and is recorded, never consumed.
    seed: int = 0
    constraints_enabled: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.max_size < 1:
            raise TaskError("max_size must be at least 1")


@dataclass(frozen=True)
class TraceEntry:
    tp: int
    fn: int
    cost: int
    hypothesis: Hypothesis

    def describe(self) -> str:
        return f"tp:{self.tp} fn:{self.fn} size:{self.cost}\n{render_program(self.hypothesis)}"


@dataclass
class LearnResult:
    best: Hypothesis
    cost: int
    tp: int
    fn: int
    tn: int
    fp: int
    solution_found: bool
    proven_optimal: bool
    timed_out: bool
    stats: Stats = field(repr=False)
    trace: list[TraceEntry] = field(repr=False)
    # Final promising pool, kept so the combine encoding can be emitted
    # after a run; None in baseline mode.
    pool: PromisingPool | None = field(default=None, repr=False)

    def describe(self) -> str:
        """Timing-free summary; byte-identical across identical runs."""
        lines = [f"programs:{self.stats.num_programs}"]
        for name in STAGES:
            lines.append(f"{name}:{self.stages_calls(name)}")
        for entry in self.trace:
            lines.append(entry.describe())
        lines.append(
            f"tp:{self.tp} fn:{self.fn} tn:{self.tn} fp:{self.fp} size:{self.cost} "
            f"solution:{self.solution_found} optimal:{self.proven_optimal}"
        )
        lines.append(render_program(self.best))
        return "\n".join(lines)

    def stages_calls(self, name: str) -> int:
        return self.stats.stages[name].calls


def validate_task(kb: KnowledgeBase, exs: ExampleSet, spec: BiasSpec) -> None:
    """Reject degenerate or assumption-violating tasks."""
    if not exs.pos:
        raise TaskError("no positive examples: a solution must cover all of a non-empty E+")
    target = spec.head
    for atom in exs.pos + exs.neg:
        if (atom.pred, atom.arity) != target:
            raise TaskError(f"example {atom} does not match the declared head {target[0]}/{target[1]}")
    for rule in kb.rules:
        if (rule.head.pred, rule.head.arity) == target:
            raise TaskError(f"background rule defines the target predicate: {rule}")
        for lit in rule.body:
            if (lit.pred, lit.arity) == target:
                raise TaskError(f"background rule depends on the target predicate: {rule}")
    for fact in kb.facts:
        if (fact.pred, fact.arity) == target:
            raise TaskError(f"background fact uses the target predicate: {fact}")


def outcome_to_constraints(outcome: CoverageRecord, mode: Mode) -> frozenset[ConstraintKind]:
    """Failure-to-constraint mapping.

    Combo: inconsistent programs prune their generalisations; totally
    incomplete or consistent programs prune their specialisations, so a
    partial-and-inconsistent program yields only a generalisation
    constraint (we may still want to specialise it).  Baseline: the
    classic incomplete/specialisation, inconsistent/generalisation pair.
    """
    kinds: set[ConstraintKind] = set()
    if mode is Mode.COMBO:
        if not outcome.consistent:
            kinds.add(ConstraintKind.GENERALISATION)
        if outcome.is_totally_incomplete:
            kinds.add(ConstraintKind.SPECIALISATION)
        if outcome.consistent:
            kinds.add(ConstraintKind.SPECIALISATION)
    else:
        if not outcome.is_complete:
            kinds.add(ConstraintKind.SPECIALISATION)
        if not outcome.consistent:
            kinds.add(ConstraintKind.GENERALISATION)
    return frozenset(kinds)


class _Clock:
    def __init__(self, timeout: float | None):
        self.start = time.monotonic()
        self.timeout = timeout

    def expired(self) -> bool:
        return self.timeout is not None and time.monotonic() - self.start > self.timeout


def _final_counts(best: Hypothesis, kb, exs, budget) -> tuple[int, int, int, int]:
    """Actual tp/fn/tn/fp of the returned hypothesis."""
    if not best:
        return 0, exs.num_pos, exs.num_neg, 0
    cov = coverage(best, kb, exs, budget)
    tp = cov.tp()
    fp = cov.fp()
    return tp, exs.num_pos - tp, exs.num_neg - fp, fp


def learn_combo(
    kb: KnowledgeBase,
    exs: ExampleSet,
    spec: BiasSpec,
    config: LearnConfig = LearnConfig(),
    progress=None,
) -> LearnResult:
    """Iterative-deepening search over non-separable programs with exact
    recombination; returns the lexicographically best (coverage, -cost)
    combination found, proven optimal when the loop exhausts every size
    below the ceiling set by the best complete solution."""
    validate_task(kb, exs, spec)
    stats = Stats()
    clock = _Clock(config.timeout)
    store = ConstraintStore()
    generator = Generator(spec, store, non_separable_only=True)
    pool = PromisingPool(exs.num_pos)
    trace: list[TraceEntry] = []
    best = None  # CombineResult
    ceiling = config.max_size
    timed_out = False
    emit = progress if progress is not None else lambda event, payload: None
    emit("size", generator.current_size)

    while generator.current_size <= min(config.max_size, ceiling):
        if clock.expired():
            timed_out = True
            break
        with stats.duration("generate"):
            h = generator.next_program()
        if h is None:
            emit("size", generator.advance_size())
            continue
        stats.num_programs += 1
        with stats.duration("test"):
            outcome = coverage(h, kb, exs, config.budget)
        if outcome.is_promising:
            pool.add(h, outcome.pos_covered)
            incumbent = None
            bound = config.max_size + 1
            if best is not None:
                incumbent = (best.pos_coverage.bit_count(), best.cost)
                if best.pos_coverage == exs.all_pos_mask:
                    bound = best.cost
            with stats.duration("combine"):
                result = solve_combine(pool, bound, kb, exs, incumbent, config.budget)
            if result.status is CombineStatus.SOLUTION:
                best = result
                entry = TraceEntry(
                    tp=result.pos_coverage.bit_count(),
                    fn=exs.num_pos - result.pos_coverage.bit_count(),
                    cost=result.cost,
                    hypothesis=result.hypothesis,
                )
                trace.append(entry)
                emit("best", entry)
                if result.pos_coverage == exs.all_pos_mask:
                    ceiling = result.cost - 1
        with stats.duration("constrain"):
            if config.constraints_enabled:
                for kind in outcome_to_constraints(outcome, Mode.COMBO):
                    store.register(h, kind)

    best_prog: Hypothesis = best.hypothesis if best is not None else frozenset()
    solution_found = best is not None and best.pos_coverage == exs.all_pos_mask
    tp, fn, tn, fp = _final_counts(best_prog, kb, exs, config.budget)
    stats.total_time = time.monotonic() - clock.start
    return LearnResult(
        best=best_prog,
        cost=program_cost(best_prog),
        tp=tp,
        fn=fn,
        tn=tn,
        fp=fp,
        solution_found=solution_found,
        proven_optimal=solution_found and not timed_out,
        timed_out=timed_out,
        stats=stats,
        trace=trace,
        pool=pool,
    )


def learn_baseline(
    kb: KnowledgeBase,
    exs: ExampleSet,
    spec: BiasSpec,
    config: LearnConfig = LearnConfig(),
    progress=None,
) -> LearnResult:
    """Plain generate-test-constrain over the full program space
    (separable programs included, as unions of up to max_clause rules);
    returns the first complete and consistent program, which the
    size-ordered enumeration makes optimal."""
    validate_task(kb, exs, spec)
    stats = Stats()
    clock = _Clock(config.timeout)
    store = ConstraintStore()
    generator = Generator(spec, store, non_separable_only=False)
    trace: list[TraceEntry] = []
    best: Hypothesis = frozenset()
    solution_found = False
    timed_out = False
    emit = progress if progress is not None else lambda event, payload: None
    emit("size", generator.current_size)

    while generator.current_size <= config.max_size:
        if clock.expired():
            timed_out = True
            break
        with stats.duration("generate"):
            h = generator.next_program()
        if h is None:
            emit("size", generator.advance_size())
            continue
        stats.num_programs += 1
        with stats.duration("test"):
            outcome = coverage(h, kb, exs, config.budget)
        if outcome.is_complete and outcome.consistent:
            best = h
            solution_found = True
            entry = TraceEntry(exs.num_pos, 0, program_cost(h), h)
            trace.append(entry)
            emit("best", entry)
            break
        with stats.duration("constrain"):
            if config.constraints_enabled:
                for kind in outcome_to_constraints(outcome, Mode.BASELINE):
                    store.register(h, kind)

    tp, fn, tn, fp = _final_counts(best, kb, exs, config.budget)
    stats.total_time = time.monotonic() - clock.start
    return LearnResult(
        best=best,
        cost=program_cost(best),
        tp=tp,
        fn=fn,
        tn=tn,
        fp=fp,
        solution_found=solution_found,
        proven_optimal=solution_found and not timed_out,
        timed_out=timed_out,
        stats=stats,
        trace=trace,
    )


def learn(kb, exs, spec, config: LearnConfig = LearnConfig(), progress=None) -> LearnResult:
    if config.mode is Mode.BASELINE:
        return learn_baseline(kb, exs, spec, config, progress)
    return learn_combo(kb, exs, spec, config, progress)
