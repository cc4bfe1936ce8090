"""Exact combination of promising programs.

Given the pool of tested partial-and-consistent programs, find the rule
selection that maximizes covered positives and then minimizes the total
size of the distinct selected rules, under a strict cost bound.  The
search is a deterministic branch-and-bound over program subsets; pools
stay small (tens of programs), so exactness is cheap.  Recursive unions
are re-tested on the negatives and blocked (with all supersets) when
inconsistent.

The equivalent answer-set encoding can be emitted as text for use with
any standard grounder/solver toolchain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .evaluate import DEFAULT_BUDGET, EvalBudget, ExampleSet, KnowledgeBase, coverage
from .logic import Hypothesis, Rule, canonical_rule, is_recursive_program, rule_key


@dataclass(frozen=True)
class PoolProgram:
    rule_ids: frozenset[int]
    ordered_ids: tuple[int, ...]  # program's rules in canonical order
    new_ids: tuple[int, ...]      # ids first interned by this program
    pos_coverage: int


class PromisingPool:
    """Deduplicated rules with sizes plus per-program coverage facts.

    Rules are interned across programs by canonical form, so a rule
    shared by several programs is counted once in any combination.
    Blocked rule-id sets are nogoods from inconsistent recursive unions.
    """

    def __init__(self, num_pos: int):
        self.num_pos = num_pos
        self.rules: dict[int, tuple[Rule, int]] = {}
        self._id_by_rule: dict[Rule, int] = {}
        self.programs: list[PoolProgram] = []
        self._seen: set[frozenset[int]] = set()
        self.blocked: list[frozenset[int]] = []

    def __len__(self) -> int:
        return len(self.programs)

    def add(self, program: Hypothesis, pos_coverage: int) -> bool:
        """Intern the program's rules and record its coverage; a program
        whose distinct-rule set was already recorded is a no-op."""
        ordered_rules = sorted((canonical_rule(r) for r in program), key=rule_key)
        ids, new = [], []
        for rule in ordered_rules:
            rid = self._id_by_rule.get(rule)
            if rid is None:
                rid = len(self._id_by_rule) + 1
                self._id_by_rule[rule] = rid
                self.rules[rid] = (rule, rule.size)
                new.append(rid)
            ids.append(rid)
        ruleset = frozenset(ids)
        if ruleset in self._seen:
            return False
        self._seen.add(ruleset)
        self.programs.append(PoolProgram(ruleset, tuple(ids), tuple(new), pos_coverage))
        return True

    def block(self, ruleset: frozenset[int]) -> None:
        self.blocked.append(frozenset(ruleset))

    def cost_of(self, ruleset) -> int:
        return sum(self.rules[rid][1] for rid in ruleset)

    def hypothesis_of(self, ruleset) -> Hypothesis:
        return frozenset(self.rules[rid][0] for rid in ruleset)

    def credited_coverage(self, ruleset: frozenset[int]) -> int:
        """Union of the coverage of every pool program fully contained
        in the selection (exactly what the encoding's covered-rules
        derive); emergent coverage of recursive unions is not counted."""
        cov = 0
        for prog in self.programs:
            if prog.rule_ids <= ruleset:
                cov |= prog.pos_coverage
        return cov


class CombineStatus(Enum):
    SOLUTION = "solution"
    NO_SOLUTION = "no_solution"


@dataclass(frozen=True)
class CombineResult:
    selected_rule_ids: frozenset[int]
    hypothesis: Hypothesis
    pos_coverage: int
    cost: int
    status: CombineStatus


NO_SOLUTION = CombineResult(frozenset(), frozenset(), 0, 0, CombineStatus.NO_SOLUTION)


def _search(pool: PromisingPool, bound: int | None, incumbent: tuple[int, int] | None):
    """Best (coverage count, -cost, rule-id tuple) selection, or None.

    Must strictly beat the incumbent (coverage count, cost) when given.
    Selections at or above the cost bound, and supersets of blocked
    sets, are infeasible.
    """
    programs = pool.programs
    n = len(programs)
    blocked = pool.blocked

    suffix_rules = [frozenset()] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_rules[i] = suffix_rules[i + 1] | programs[i].rule_ids

    best_obj = None
    best_sel: tuple | None = None
    if incumbent is not None:
        best_obj = (incumbent[0], -incumbent[1])

    def candidate(ruleset: frozenset[int]) -> None:
        nonlocal best_obj, best_sel
        cost = pool.cost_of(ruleset)
        if bound is not None and cost >= bound:
            return
        cov = pool.credited_coverage(ruleset)
        obj = (cov.bit_count(), -cost)
        key = tuple(sorted(ruleset))
        if best_obj is None or obj > best_obj or (obj == best_obj and best_sel is not None and key < best_sel):
            best_obj = obj
            best_sel = key

    def walk(i: int, ruleset: frozenset[int]) -> None:
        if any(b <= ruleset for b in blocked):
            return
        if bound is not None and pool.cost_of(ruleset) >= bound and ruleset:
            return
        if i == n:
            if ruleset:
                candidate(ruleset)
            return
        if best_obj is not None:
            potential = pool.credited_coverage(ruleset | suffix_rules[i]).bit_count()
            floor_cost = pool.cost_of(ruleset)
            if (potential, -floor_cost) < best_obj:
                return
        walk(i + 1, ruleset | programs[i].rule_ids)
        walk(i + 1, ruleset)

    walk(0, frozenset())
    if best_sel is None:
        return None
    return frozenset(best_sel)


def solve_combine(
    pool: PromisingPool,
    bound: int | None,
    kb: KnowledgeBase,
    exs: ExampleSet,
    incumbent: tuple[int, int] | None = None,
    budget: EvalBudget = DEFAULT_BUDGET,
) -> CombineResult:
    """Lexicographically optimal combination of pooled programs.

    Returns the rule selection maximizing (positives covered, -cost)
    with cost strictly below the bound, excluding blocked selections; a
    recursive union is re-tested on the negatives and blocked together
    with its supersets when inconsistent, then the search resumes.
    Returns no_solution when nothing beats the incumbent.
    """
    if not pool.programs:
        raise ValueError("combine called with an empty pool")
    while True:
        ruleset = _search(pool, bound, incumbent)
        if ruleset is None:
            return NO_SOLUTION
        hypothesis = pool.hypothesis_of(ruleset)
        if is_recursive_program(hypothesis):
            outcome = coverage(hypothesis, kb, exs, budget)
            if not outcome.consistent or outcome.eval_failed:
                pool.block(ruleset)
                continue
        return CombineResult(
            selected_rule_ids=ruleset,
            hypothesis=hypothesis,
            pos_coverage=pool.credited_coverage(ruleset),
            cost=pool.cost_of(ruleset),
            status=CombineStatus.SOLUTION,
        )


# ---------------------------------------------------------------------------
# ASP encoding emission.

def emit_asp_encoding(pool: PromisingPool, bound: int | None = None) -> str:
    """Text encoding of the current combine problem.

    Facts for example ids and rule sizes, one covered-rule per program
    per covered example, the selection choice rule, the two soft
    constraints (coverage at priority 2, size at priority 1), and the
    strict size bound when one is set.  Output is byte-stable for a
    fixed pool.
    """
    lines: list[str] = []
    for i in range(1, pool.num_pos + 1):
        lines.append(f"example({i}).")
    for prog in pool.programs:
        for rid in prog.ordered_ids:
            if rid in prog.new_ids:
                lines.append(f"size({rid},{pool.rules[rid][1]}).")
        body = ", ".join(f"rule({rid})" for rid in prog.ordered_ids)
        for ex in range(pool.num_pos):
            if prog.pos_coverage >> ex & 1:
                lines.append(f"covered({ex + 1}) :- {body}.")
    lines.append("{rule(R)}:-size(R,_).")
    lines.append(":~ example(E), not covered(E). [1@2, (E,)]")
    lines.append(":~ rule(R),size(R,K). [K@1, (R,)]")
    if bound is not None:
        lines.append(f":- #sum{{K,R : rule(R), size(R,K)}} >= {bound}.")
    return "\n".join(lines) + "\n"
