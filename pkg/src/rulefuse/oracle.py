"""Brute-force reference learner over the full hypothesis space
(separable programs included) for small instances.

Independent of the search engine: rules come from a plain breadth-first
body enumeration and hypotheses from a nested-loop subset search.  The
only reductions applied are ones that can never change the optimum
(definite programs are monotone):

  * a non-recursive rule whose own consequences cover a negative can
    never appear in a consistent hypothesis, and one with no
    consequences can never help;
  * non-recursive rules with identical consequence sets are
    interchangeable everywhere, so one cheapest representative is kept;
  * a recursive rule whose body repeats its own head literal, or whose
    body cannot match even inside the maximal model of all candidate
    rules together, derives nothing in any hypothesis.

Exceeding the search budget raises OracleTooLarge, never a wrong answer.
"""

from __future__ import annotations

from dataclasses import dataclass
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
from .evaluate import (
    DEFAULT_BUDGET,
    EvalBudget,
    EvaluationBudgetExceeded,
    ExampleSet,
    KnowledgeBase,
    least_model,
)
from .logic import Hypothesis, Literal, Rule, canonical_rule, program_key, rule_key


class OracleTooLarge(Exception):
    """The hypothesis space exceeds the oracle's search budget."""


@dataclass(frozen=True)
class OracleResult:
    optimum_cost: int | None
    witness: Hypothesis | None
    # Number of minimal-cost solutions over the oracle's reduced rule
    # space (consequence-equivalent rules collapsed to one).
    num_optima: int


def enumerate_candidate_rules(spec: BiasSpec, size_cap: int) -> list[Rule]:
    """Every canonical bias-valid rule of size <= size_cap, by plain
    breadth-first body growth over the candidate vocabulary."""
    max_body = min(spec.max_body, size_cap - 1)
    head = head_literal(spec)
    frontier: dict[frozenset, tuple[int, dict]] = {
        frozenset(): (spec.head_arity, head_type_env(spec))
    }
    rules: set[Rule] = set()
    for _depth in range(max_body):
        grown: dict[frozenset, tuple[int, dict]] = {}
        for body, (scope, env) in frontier.items():
            pool = list(candidate_literals(spec, scope, env))
            if recursion_allowed(spec):
                pool += literals_for_preds(spec, (spec.head,), scope, env)
            for lit in pool:
                if lit in body:
                    continue
                fresh = {v for v in lit.variables() if v.index >= scope}
                new_scope = scope + len(fresh)
                if new_scope > spec.max_vars:
                    continue
                new_env = extend_type_env(spec, env, lit)
                if new_env is None:
                    continue
                grown.setdefault(body | {lit}, (new_scope, new_env))
        for body in grown:
            rule = Rule(head, body)
            if rule_is_bias_valid(spec, rule):
                rules.add(canonical_rule(rule))
        frontier = grown
    return sorted(rules, key=rule_key)


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, amount: int = 1) -> None:
        self.used += amount
        if self.used > self.limit:
            raise OracleTooLarge(f"oracle budget of {self.limit} evaluations exceeded")


def _target_atoms(model, pred: str) -> frozenset:
    return frozenset(a for a in model if a.pred == pred)


def _mask(atoms, pos_index) -> int:
    mask = 0
    for a in atoms:
        i = pos_index.get(a)
        if i is not None:
            mask |= 1 << i
    return mask


def _rec_subsets(recs: list[Rule], max_cost: int) -> list[tuple[Rule, ...]]:
    """All recursive-rule subsets (including empty) within the cost cap."""
    out: list[tuple[Rule, ...]] = [()]
    for k in range(1, len(recs) + 1):
        added = False
        for combo in combinations(recs, k):
            if sum(r.size for r in combo) <= max_cost:
                out.append(combo)
                added = True
        if not added:
            break
    return out


def _body_can_fire(rule: Rule, atoms: frozenset, budget: EvalBudget) -> bool:
    """Whether the rule body has any match within the given atom set."""
    probe = Rule(Literal("__probe__", rule.head.args), rule.body)
    model = least_model(frozenset({probe}), KnowledgeBase(atoms), budget)
    return any(a.pred == "__probe__" for a in model)


def brute_force_optimal(
    kb: KnowledgeBase,
    exs: ExampleSet,
    spec: BiasSpec,
    size_cap: int,
    budget: EvalBudget = DEFAULT_BUDGET,
    max_candidates: int = 2_000_000,
) -> OracleResult:
    """Minimal-cost complete and consistent hypothesis of cost at most
    size_cap; optimum_cost is None when no solution exists within the
    cap.  The caller must size the task so the space fits the budget."""
    search_budget = _Budget(max_candidates)
    target = spec.head_pred
    neg_set = set(exs.neg)
    pos_index = {atom: i for i, atom in enumerate(exs.pos)}
    all_mask = exs.all_pos_mask
    if all_mask == 0:
        raise ValueError("the oracle needs at least one positive example")

    def model_of(h) -> frozenset:
        try:
            return least_model(h, kb, budget)
        except EvaluationBudgetExceeded as exc:
            raise OracleTooLarge(f"evaluation budget exceeded inside the oracle: {exc}") from exc

    rules = enumerate_candidate_rules(spec, size_cap)

    # Non-recursive rules: target consequences are fixed by the
    # background knowledge alone, so filter and deduplicate on them.
    by_conseq: dict[frozenset, Rule] = {}
    for rule in (r for r in rules if not r.is_recursive):
        search_budget.spend()
        conseq = _target_atoms(model_of(frozenset({rule})), target)
        if not conseq or conseq & neg_set:
            continue
        prev = by_conseq.get(conseq)
        if prev is None or (rule.size, rule_key(rule)) < (prev.size, rule_key(prev)):
            by_conseq[conseq] = rule
    bases = sorted(by_conseq.items(), key=lambda cr: (cr[1].size, rule_key(cr[1])))
    bases = [(rule, conseq) for conseq, rule in bases]

    recs = [r for r in rules if r.is_recursive and r.head not in r.body]
    if recs and bases:
        everything = frozenset(r for r, _ in bases) | frozenset(recs)
        top = model_of(everything)
        recs = [r for r in recs if _body_can_fire(r, top, budget)]

    best_cost: int | None = None
    optima: set[tuple] = set()
    witnesses: dict[tuple, Hypothesis] = {}

    def record(rules_chosen: frozenset[Rule], cost: int) -> None:
        nonlocal best_cost
        if best_cost is None or cost < best_cost:
            best_cost = cost
            optima.clear()
            witnesses.clear()
        if cost == best_cost:
            key = program_key(rules_chosen)
            optima.add(key)
            witnesses[key] = rules_chosen

    def current_cap() -> int:
        return size_cap if best_cost is None else min(size_cap, best_cost)

    def covering_search(usable, rec_rules: frozenset[Rule], rec_cost: int) -> None:
        """Exhaustive subset search over consistent bases with known
        coverage masks; every complete union is a candidate."""
        n = len(usable)
        suffix = [0] * (n + 1)
        for i in range(n - 1, -1, -1):
            suffix[i] = suffix[i + 1] | usable[i][1]

        def dfs(i: int, chosen: tuple, mask: int, cost: int) -> None:
            search_budget.spend()
            if mask == all_mask and chosen:
                record(rec_rules | frozenset(chosen), rec_cost + cost)
                return
            if i == n or mask | suffix[i] != all_mask:
                return
            rule, rmask = usable[i]
            if rec_cost + cost + rule.size <= current_cap():
                dfs(i + 1, chosen + (rule,), mask | rmask, cost + rule.size)
            dfs(i + 1, chosen, mask, cost)

        dfs(0, (), 0, 0)

    def joint_search(usable, rec_rules: frozenset[Rule], rec_cost: int) -> None:
        """Fallback for non-linear recursion: evaluate unions jointly."""
        n = len(usable)

        def dfs(i: int, chosen: tuple, cost: int) -> None:
            if chosen:
                search_budget.spend()
                model = model_of(rec_rules | frozenset(chosen))
                atoms = _target_atoms(model, target)
                if atoms & neg_set:
                    return  # supersets stay inconsistent
                if _mask(atoms, pos_index) == all_mask:
                    record(rec_rules | frozenset(chosen), rec_cost + cost)
                    return
            if i == n:
                return
            rule = usable[i]
            if rec_cost + cost + rule.size <= current_cap():
                dfs(i + 1, chosen + (rule,), cost + rule.size)
            dfs(i + 1, chosen, cost)

        dfs(0, (), 0)

    min_base_size = bases[0][0].size if bases else None
    if min_base_size is not None:
        for rec_combo in _rec_subsets(recs, size_cap - min_base_size):
            rec_rules = frozenset(rec_combo)
            rec_cost = sum(r.size for r in rec_combo)
            remaining = current_cap() - rec_cost
            if remaining < min_base_size:
                continue
            if not rec_combo:
                usable = [(rule, _mask(conseq, pos_index)) for rule, conseq in bases]
                covering_search(usable, rec_rules, rec_cost)
                continue
            linear = all(
                sum(1 for l in r.body if (l.pred, l.arity) == spec.head) <= 1
                for r in rec_combo
            )
            if linear:
                # Per-base closures decompose: each derivation chains
                # down to exactly one seeded base consequence.
                usable = []
                for rule, conseq in bases:
                    if rule.size > remaining:
                        break
                    search_budget.spend()
                    seeded = KnowledgeBase(kb.facts | conseq, kb.rules)
                    try:
                        closed = _target_atoms(least_model(rec_rules, seeded, budget), target)
                    except EvaluationBudgetExceeded as exc:
                        raise OracleTooLarge(str(exc)) from exc
                    if closed & neg_set:
                        continue
                    usable.append((rule, _mask(closed, pos_index)))
                covering_search(usable, rec_rules, rec_cost)
            else:
                joint_search([rule for rule, _ in bases], rec_rules, rec_cost)

    if best_cost is None:
        return OracleResult(None, None, 0)
    best_key = min(optima)
    return OracleResult(best_cost, witnesses[best_key], len(optima))
