"""Bottom-up evaluation of a hypothesis plus background knowledge and
coverage classification against the examples.

Evaluation is a semi-naive fixpoint over the finite constant domain:
structured data must be pre-ground into constants plus relations before
loading (see the grounding helper in the CLI).  Exceeding the resource
budget is a per-hypothesis evaluation failure, reported to callers as
non-coverage with a warning flag, never a crash.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .logic import Const, Literal, Rule, Var
from .parse import ParseError, parse_clause, parse_clauses, strip_comment


class EvaluationBudgetExceeded(Exception):
    """The fact-count or iteration cap was hit while evaluating."""


class TaskError(ValueError):
    """Malformed background knowledge or example data."""


@dataclass(frozen=True)
class EvalBudget:
    max_facts: int = 10_000_000
    max_iterations: int = 10_000


DEFAULT_BUDGET = EvalBudget()


@dataclass(frozen=True)
class KnowledgeBase:
    facts: frozenset[Literal]
    rules: frozenset[Rule] = frozenset()

    def __post_init__(self):
        for fact in self.facts:
            if not fact.is_ground():
                raise TaskError(f"background fact is not ground: {fact}")
        for rule in self.rules:
            body_vars = set()
            for lit in rule.body:
                body_vars.update(lit.variables())
            if not set(rule.head.variables()) <= body_vars:
                raise TaskError(f"background rule is not range-restricted: {rule}")

    @classmethod
    def from_text(cls, text: str) -> "KnowledgeBase":
        facts, rules = [], []
        for clause in parse_clauses(text):
            if isinstance(clause, Rule):
                rules.append(clause)
            else:
                facts.append(clause)
        return cls(frozenset(facts), frozenset(rules))

    def predicates(self) -> set[tuple[str, int]]:
        out = {(f.pred, f.arity) for f in self.facts}
        for r in self.rules:
            out.add((r.head.pred, r.head.arity))
            out.update((l.pred, l.arity) for l in r.body)
        return out


_EXAMPLE_LINE = re.compile(r"(pos|neg)\s*\((.*)\)\s*\.\s*$")


@dataclass(frozen=True)
class ExampleSet:
    pos: tuple[Literal, ...]
    neg: tuple[Literal, ...]

    def __post_init__(self):
        for atom in self.pos + self.neg:
            if not atom.is_ground():
                raise TaskError(f"example atom is not ground: {atom}")
        overlap = set(self.pos) & set(self.neg)
        if overlap:
            raise TaskError(f"examples labelled both pos and neg: {sorted(map(str, overlap))}")

    @classmethod
    def from_text(cls, text: str) -> "ExampleSet":
        pos, neg = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            stripped = strip_comment(raw).strip()
            if not stripped:
                continue
            m = _EXAMPLE_LINE.match(stripped)
            if m is None:
                raise ParseError(f"cannot parse example line {stripped!r}", lineno)
            atom = parse_clause(m.group(2).strip() + ".", lineno)
            if isinstance(atom, Rule):
                raise ParseError("example atoms cannot have bodies", lineno)
            (pos if m.group(1) == "pos" else neg).append(atom)
        return cls(tuple(pos), tuple(neg))

    @property
    def num_pos(self) -> int:
        return len(self.pos)

    @property
    def num_neg(self) -> int:
        return len(self.neg)

    @property
    def all_pos_mask(self) -> int:
        return (1 << len(self.pos)) - 1


class Completeness(Enum):
    COMPLETE = "complete"
    PARTIAL = "partial"
    TOTALLY_INCOMPLETE = "totally_incomplete"


@dataclass(frozen=True)
class CoverageRecord:
    pos_covered: int
    neg_covered: int
    completeness: Completeness
    consistent: bool
    eval_failed: bool = False

    @property
    def is_complete(self) -> bool:
        return self.completeness is Completeness.COMPLETE

    @property
    def is_totally_incomplete(self) -> bool:
        return self.completeness is Completeness.TOTALLY_INCOMPLETE

    @property
    def is_promising(self) -> bool:
        """Covers at least one positive and no negative example."""
        return self.consistent and not self.is_totally_incomplete

    def tp(self) -> int:
        return self.pos_covered.bit_count()

    def fp(self) -> int:
        return self.neg_covered.bit_count()


# ---------------------------------------------------------------------------
# Semi-naive fixpoint.

_VarSlot = tuple[int]  # ("v", index) / ("c", name) encoded below


def _compile_literal(lit: Literal):
    return (
        lit.pred,
        tuple(("v", t.index) if isinstance(t, Var) else ("c", t.name) for t in lit.args),
    )


def _compile_rule(rule: Rule):
    head = _compile_literal(rule.head)
    # Join order: most constants and already-seen variables first.
    body = [_compile_literal(l) for l in sorted(rule.body, key=lambda l: l.pred)]
    ordered = []
    seen: set[int] = set()
    remaining = list(body)
    while remaining:
        def bound_count(cl):
            return sum(1 for kind, v in cl[1] if kind == "c" or v in seen)

        pick = max(remaining, key=lambda cl: (bound_count(cl), -len(cl[1])))
        ordered.append(pick)
        seen.update(v for kind, v in pick[1] if kind == "v")
        remaining.remove(pick)
    return head, tuple(ordered)


class _Relation:
    """Tuple set with a first-argument index."""

    __slots__ = ("tuples", "by_first")

    def __init__(self):
        self.tuples: set[tuple] = set()
        self.by_first: dict = {}

    def add(self, row: tuple) -> bool:
        if row in self.tuples:
            return False
        self.tuples.add(row)
        if row:
            self.by_first.setdefault(row[0], []).append(row)
        return True

    def candidates(self, first):
        if first is None:
            return self.tuples
        return self.by_first.get(first, ())


def _match_rows(compiled_args, rows, env):
    for row in rows:
        new_env = env
        copied = False
        ok = True
        for (kind, v), value in zip(compiled_args, row):
            if kind == "c":
                if v != value:
                    ok = False
                    break
            else:
                bound = new_env.get(v)
                if bound is None:
                    if not copied:
                        new_env = dict(new_env)
                        copied = True
                    new_env[v] = value
                elif bound != value:
                    ok = False
                    break
        if ok:
            yield new_env


def _satisfy(body, idx, env, total, delta, pivot):
    """Enumerate environments for body[idx:], reading the pivot literal
    from the delta relation and every other literal from the total."""
    if idx == len(body):
        yield env
        return
    pred, args = body[idx]
    rel = delta.get(pred) if idx == pivot else total.get(pred)
    if rel is None:
        return
    first = None
    if args and args[0][0] == "c":
        first = args[0][1]
    elif args and args[0][1] in env:
        first = env[args[0][1]]
    for new_env in _match_rows(args, rel.candidates(first), env):
        yield from _satisfy(body, idx + 1, new_env, total, delta, pivot)


def least_model(h, kb: KnowledgeBase, budget: EvalBudget = DEFAULT_BUDGET) -> frozenset[Literal]:
    """Minimal model of kb.facts + kb.rules + h over the finite domain.

    Deterministic and independent of rule/literal ordering.  Raises
    EvaluationBudgetExceeded when the fact or iteration cap is hit.
    """
    compiled = [_compile_rule(r) for r in sorted(kb.rules, key=lambda r: str(r))]
    compiled += [_compile_rule(r) for r in sorted(h, key=lambda r: str(r))]

    total: dict[str, _Relation] = {}
    delta: dict[str, _Relation] = {}
    fact_count = 0
    for fact in kb.facts:
        row = tuple(t.name for t in fact.args)
        rel = total.setdefault(fact.pred, _Relation())
        if rel.add(row):
            fact_count += 1
            delta.setdefault(fact.pred, _Relation()).add(row)

    iterations = 0
    while delta:
        iterations += 1
        if iterations > budget.max_iterations:
            raise EvaluationBudgetExceeded(f"iteration cap {budget.max_iterations} exceeded")
        fresh: dict[str, _Relation] = {}
        for head, body in compiled:
            head_pred, head_args = head
            for pivot in range(len(body)):
                if body[pivot][0] not in delta:
                    continue
                for env in _satisfy(body, 0, {}, total, delta, pivot):
                    row = tuple(v if kind == "c" else env[v] for kind, v in head_args)
                    rel = total.get(head_pred)
                    if rel is not None and row in rel.tuples:
                        continue
                    if fresh.setdefault(head_pred, _Relation()).add(row):
                        fact_count += 1
                        if fact_count > budget.max_facts:
                            raise EvaluationBudgetExceeded(
                                f"fact cap {budget.max_facts} exceeded"
                            )
        for pred, rel in fresh.items():
            dst = total.setdefault(pred, _Relation())
            for row in rel.tuples:
                dst.add(row)
        delta = fresh

    out = []
    for pred, rel in total.items():
        for row in rel.tuples:
            out.append(Literal(pred, tuple(Const(v) for v in row)))
    return frozenset(out)


def consequences(h, kb: KnowledgeBase, pred: str, budget: EvalBudget = DEFAULT_BUDGET) -> frozenset[Literal]:
    return frozenset(a for a in least_model(h, kb, budget) if a.pred == pred)


def _classify(pos_covered: int, num_pos: int, neg_covered: int, eval_failed: bool = False) -> CoverageRecord:
    if pos_covered == (1 << num_pos) - 1 and num_pos > 0:
        completeness = Completeness.COMPLETE
    elif pos_covered == 0:
        completeness = Completeness.TOTALLY_INCOMPLETE
    else:
        completeness = Completeness.PARTIAL
    return CoverageRecord(pos_covered, neg_covered, completeness, neg_covered == 0, eval_failed)


def coverage(h, kb: KnowledgeBase, exs: ExampleSet, budget: EvalBudget = DEFAULT_BUDGET) -> CoverageRecord:
    """Test h on the examples.  Evaluation failures are reported as
    (totally incomplete, consistent) with the eval_failed flag set."""
    try:
        model = least_model(h, kb, budget)
    except EvaluationBudgetExceeded:
        return _classify(0, exs.num_pos, 0, eval_failed=True)
    pos_covered = 0
    for i, atom in enumerate(exs.pos):
        if atom in model:
            pos_covered |= 1 << i
    neg_covered = 0
    for i, atom in enumerate(exs.neg):
        if atom in model:
            neg_covered |= 1 << i
    return _classify(pos_covered, exs.num_pos, neg_covered)
