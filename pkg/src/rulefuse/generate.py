"""Program enumeration in non-decreasing cost order with constraint
pruning.

The default space is the non-separable programs: single rules, and
multi-rule recursive programs with at least one non-recursive base rule
(a recursive program without a base case derives nothing, so those are
skipped at generation time).  The same enumerator extended to arbitrary
unions of rules backs the baseline mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

from .bias import (
    BiasSpec,
    candidate_literals,
    extend_type_env,
    head_literal,
    head_type_env,
    literals_for_preds,
    recursion_allowed,
    rule_is_bias_valid,
)
from .logic import (
    Hypothesis,
    Literal,
    Rule,
    canonical_rule,
    literal_key,
    program_key,
    rule_key,
    subsumes_theory,
)


class ConstraintKind(Enum):
    GENERALISATION = "generalisation"
    SPECIALISATION = "specialisation"


@dataclass(frozen=True)
class _StoreEntry:
    program: Hypothesis
    kind: ConstraintKind


class ConstraintStore:
    """Accumulated (program, kind) pruning records.

    A generalisation record g prunes every h with h <= g (h generalises
    g); a specialisation record g prunes every h with g <= h.
    Registering a duplicate record is a no-op.
    """

    def __init__(self):
        self._entries: list[_StoreEntry] = []
        self._seen: set[tuple] = set()

    def __len__(self) -> int:
        return len(self._entries)

    def register(self, program: Hypothesis, kind: ConstraintKind) -> None:
        prog = frozenset(canonical_rule(r) for r in program)
        key = (program_key(prog), kind)
        if key in self._seen:
            return
        self._seen.add(key)
        self._entries.append(_StoreEntry(prog, kind))

    def is_pruned(self, h: Hypothesis) -> bool:
        for entry in self._entries:
            if entry.kind is ConstraintKind.GENERALISATION:
                if subsumes_theory(h, entry.program):
                    return True
            else:
                if subsumes_theory(entry.program, h):
                    return True
        return False

    @property
    def records(self) -> list[tuple[Hypothesis, ConstraintKind]]:
        return [(e.program, e.kind) for e in self._entries]


def register_constraint(store: ConstraintStore, h: Hypothesis, kind: ConstraintKind) -> ConstraintStore:
    store.register(h, kind)
    return store


def is_pruned(store: ConstraintStore, h: Hypothesis) -> bool:
    return store.is_pruned(h)


# ---------------------------------------------------------------------------
# Rule enumeration.

def _env_key(env) -> tuple:
    return tuple(sorted((v.index, t or "") for v, t in env.items()))


def enumerate_rules(spec: BiasSpec, body_size: int, allow_recursive: bool) -> list[Rule]:
    """All canonical bias-valid rules with exactly body_size body
    literals, sorted; recursive literals included only when asked."""
    head = head_literal(spec)
    base_env = head_type_env(spec)
    found: set[Rule] = set()
    pool_cache: dict[tuple, list[Literal]] = {}

    def pool_for(scope: int, env) -> list[Literal]:
        key = (scope, _env_key(env))
        pool = pool_cache.get(key)
        if pool is None:
            pool = candidate_literals(spec, scope, env)
            if allow_recursive and recursion_allowed(spec):
                extra = literals_for_preds(spec, (spec.head,), scope, env)
                pool = sorted(set(pool) | set(extra), key=literal_key)
            pool_cache[key] = pool
        return pool

    def extend(body: frozenset[Literal], scope: int, env) -> None:
        if len(body) == body_size:
            rule = Rule(head, body)
            if rule_is_bias_valid(spec, rule):
                found.add(canonical_rule(rule))
            return
        for lit in pool_for(scope, env):
            if lit in body:
                continue
            new_vars = {v for v in lit.variables() if v.index >= scope}
            new_scope = scope + len(new_vars)
            if new_scope > spec.max_vars:
                continue
            new_env = extend_type_env(spec, env, lit)
            if new_env is None:
                continue
            extend(body | {lit}, new_scope, new_env)

    extend(frozenset(), spec.head_arity, base_env)
    return sorted(found, key=rule_key)


class _RuleTable:
    """Canonical rules per size, computed once per bias."""

    def __init__(self, spec: BiasSpec):
        self.spec = spec
        self._cache: dict[int, tuple[list[Rule], list[Rule]]] = {}

    def rules(self, size: int) -> tuple[list[Rule], list[Rule]]:
        """(non-recursive, recursive) canonical rules of the given size."""
        if size < 2 or size - 1 > self.spec.max_body:
            return [], []
        if size not in self._cache:
            rules = enumerate_rules(self.spec, size - 1, allow_recursive=recursion_allowed(self.spec))
            non_rec = [r for r in rules if not r.is_recursive]
            rec = [r for r in rules if r.is_recursive]
            self._cache[size] = (non_rec, rec)
        return self._cache[size]

    def all_rules(self, size: int) -> list[Rule]:
        non_rec, rec = self.rules(size)
        return sorted(non_rec + rec, key=rule_key)


def _partitions(total: int, max_parts: int, min_part: int = 2):
    """Non-decreasing size tuples with at most max_parts parts summing
    to total, every part at least min_part."""

    def rec(remaining: int, parts_left: int, minimum: int):
        if remaining == 0:
            yield ()
            return
        if parts_left == 0 or remaining < minimum:
            return
        for first in range(minimum, remaining + 1):
            for rest in rec(remaining - first, parts_left - 1, first):
                yield (first,) + rest

    yield from rec(total, max_parts, min_part)


def _programs_from_sizes(table: _RuleTable, sizes: tuple[int, ...]):
    """Distinct-rule sets realizing the size multiset, each set once."""
    groups: dict[int, int] = {}
    for s in sizes:
        groups[s] = groups.get(s, 0) + 1

    def build(group_items, chosen):
        if not group_items:
            yield frozenset(chosen)
            return
        (size, count), rest = group_items[0], group_items[1:]
        pool = table.all_rules(size)
        for combo in combinations(pool, count):
            yield from build(rest, chosen + list(combo))

    yield from build(sorted(groups.items()), [])


def programs_of_size(table: _RuleTable, size: int, non_separable_only: bool) -> list[Hypothesis]:
    """Canonical programs of exactly this cost, sorted for determinism.

    Non-separable mode: single non-recursive rules, plus multi-rule
    programs with at least one recursive and one non-recursive rule.
    Otherwise: every rule set within max_clause (the baseline space).
    """
    spec = table.spec
    progs: list[Hypothesis] = []
    if non_separable_only:
        progs.extend(frozenset({r}) for r in table.rules(size)[0])
    else:
        progs.extend(frozenset({r}) for r in table.all_rules(size))
    if spec.max_clauses >= 2:
        for sizes in _partitions(size, spec.max_clauses):
            if len(sizes) < 2:
                continue
            for prog in _programs_from_sizes(table, sizes):
                if non_separable_only:
                    has_rec = any(r.is_recursive for r in prog)
                    has_base = any(not r.is_recursive for r in prog)
                    if not (has_rec and has_base):
                        continue
                progs.append(prog)
    return sorted(progs, key=program_key)


EXHAUSTED = None


class Generator:
    """Cursor over the canonical enumeration at the current size.

    next_program() yields the next unpruned program of the current size
    or None (exhausted at this size); advance_size() moves on, mirroring
    the UNSAT/size-increment step of the outer loop.
    """

    def __init__(self, spec: BiasSpec, store: ConstraintStore, non_separable_only: bool = True):
        self.spec = spec
        self.store = store
        self.non_separable_only = non_separable_only
        self.table = _RuleTable(spec)
        self.current_size = 1
        self._pending: list[Hypothesis] = []
        self._cursor = 0
        self._load()

    def _load(self) -> None:
        self._pending = programs_of_size(self.table, self.current_size, self.non_separable_only)
        self._cursor = 0

    def next_program(self) -> Hypothesis | None:
        while self._cursor < len(self._pending):
            prog = self._pending[self._cursor]
            self._cursor += 1
            if self.store.is_pruned(prog):
                continue
            return prog
        return EXHAUSTED

    def advance_size(self) -> int:
        self.current_size += 1
        self._load()
        return self.current_size
