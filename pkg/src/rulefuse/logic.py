"""First-order core: terms, literals, definite rules, programs.

Variables live in the canonical ordered alphabet V0, V1, ... and are
rendered A, B, C, ... for output.  Constants are interned symbols; lists
and numbers are opaque constants related only by background facts.
Rule bodies are sets (no duplicate literals, no ordering), so two rules
are the same program element iff they differ only by a variable renaming.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations


@dataclass(frozen=True, slots=True)
class Var:
    index: int

    def __repr__(self) -> str:
        return var_name(self.index)


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __repr__(self) -> str:
        return self.name


Term = Var | Const

# A substitution maps variables to terms; absent variables are identity.
# Application is simultaneous: bindings never feed each other.
Substitution = dict[Var, Term]


@dataclass(frozen=True, slots=True)
class Literal:
    pred: str
    args: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> tuple[Var, ...]:
        return tuple(t for t in self.args if isinstance(t, Var))

    def is_ground(self) -> bool:
        return all(isinstance(t, Const) for t in self.args)

    def __repr__(self) -> str:
        return render_literal(self)


@dataclass(frozen=True, slots=True)
class Rule:
    head: Literal
    body: frozenset[Literal]

    @property
    def size(self) -> int:
        return 1 + len(self.body)

    @property
    def is_recursive(self) -> bool:
        return any(lit.pred == self.head.pred for lit in self.body)

    def variables(self) -> set[Var]:
        out = set(self.head.variables())
        for lit in self.body:
            out.update(lit.variables())
        return out

    def __repr__(self) -> str:
        return render_rule(self)


# A hypothesis (program) is a set of rules; the empty program is allowed
# as the "no solution yet" value.
Hypothesis = frozenset[Rule]


def make_rule(head: Literal, body) -> Rule:
    return Rule(head, frozenset(body))


def make_program(rules) -> Hypothesis:
    return frozenset(canonical_rule(r) for r in rules)


# ---------------------------------------------------------------------------
# Ordering keys.  Terms of different kinds never compare directly; every
# ordered collection goes through these keys.

def term_key(t: Term) -> tuple:
    if isinstance(t, Var):
        return (0, t.index, "")
    return (1, 0, t.name)


def literal_key(lit: Literal) -> tuple:
    return (lit.pred, lit.arity, tuple(term_key(t) for t in lit.args))


def rule_key(rule: Rule) -> tuple:
    """Total order on canonical rules (canonicalize first)."""
    return (literal_key(rule.head), tuple(sorted(literal_key(l) for l in rule.body)))


def program_key(h: Hypothesis) -> tuple:
    return tuple(sorted(rule_key(canonical_rule(r)) for r in h))


# ---------------------------------------------------------------------------
# Substitution and canonical forms.

def apply_substitution(lit: Literal, theta: Substitution) -> Literal:
    return Literal(lit.pred, tuple(theta.get(t, t) if isinstance(t, Var) else t for t in lit.args))


@lru_cache(maxsize=1 << 16)
def canonical_rule(rule: Rule) -> Rule:
    """Unique representative of the rule's variable-renaming class.

    Head variables are pinned by first occurrence in the head; the
    remaining (body-only) variables take the renaming that minimizes the
    sorted body serialization.  Exhaustive over body-variable bijections,
    which is fine for bias-sized rules.
    """
    mapping: Substitution = {}
    for t in rule.head.args:
        if isinstance(t, Var) and t not in mapping:
            mapping[t] = Var(len(mapping))
    free: list[Var] = []
    seen = set(mapping)
    for lit in sorted(rule.body, key=literal_key):
        for v in lit.variables():
            if v not in seen:
                seen.add(v)
                free.append(v)
    base = len(mapping)
    if not free:
        body = frozenset(apply_substitution(l, mapping) for l in rule.body)
        return Rule(apply_substitution(rule.head, mapping), body)
    best_key = None
    best_body = None
    for perm in permutations(range(len(free))):
        theta = dict(mapping)
        for v, i in zip(free, perm):
            theta[v] = Var(base + i)
        body = frozenset(apply_substitution(l, theta) for l in rule.body)
        key = tuple(sorted(literal_key(l) for l in body))
        if best_key is None or key < best_key:
            best_key = key
            best_body = body
    return Rule(apply_substitution(rule.head, mapping), best_body)


def canonical_program(h) -> Hypothesis:
    return frozenset(canonical_rule(r) for r in h)


# ---------------------------------------------------------------------------
# Theta-subsumption.

def _extend_match(lit: Literal, target: Literal, theta: Substitution) -> Substitution | None:
    if lit.pred != target.pred or lit.arity != target.arity:
        return None
    out = dict(theta)
    for a, b in zip(lit.args, target.args):
        if isinstance(a, Const):
            if a != b:
                return None
        else:
            bound = out.get(a)
            if bound is None:
                out[a] = b
            elif bound != b:
                return None
    return out


def subsumes_clause(c1: Rule, c2: Rule) -> bool:
    """True iff some substitution maps c1 (head included) into a subset of c2.

    Backtracking over literal-to-literal matchings with incremental
    binding checks; clauses are small so exhaustive search is fine.
    Several c1 literals may map onto one c2 literal (clauses are sets).
    """
    theta = _extend_match(c1.head, c2.head, {})
    if theta is None:
        return False
    body2 = sorted(c2.body, key=literal_key)

    def candidates(lit: Literal) -> int:
        return sum(1 for t in body2 if t.pred == lit.pred and t.arity == lit.arity)

    todo = sorted(c1.body, key=lambda l: (candidates(l), literal_key(l)))

    def search(i: int, theta: Substitution) -> bool:
        if i == len(todo):
            return True
        for target in body2:
            ext = _extend_match(todo[i], target, theta)
            if ext is not None and search(i + 1, ext):
                return True
        return False

    return search(0, theta)


def subsumes_theory(h1, h2) -> bool:
    """h1 subsumes h2 iff every rule of h2 is subsumed by some rule of h1."""
    return all(any(subsumes_clause(c1, c2) for c1 in h1) for c2 in h2)


# ---------------------------------------------------------------------------
# Program-level predicates.

def is_separable(h) -> bool:
    """At least two rules and no head predicate occurs in any body."""
    if len(h) < 2:
        return False
    heads = {r.head.pred for r in h}
    return all(lit.pred not in heads for r in h for lit in r.body)


def is_recursive_program(h) -> bool:
    heads = {r.head.pred for r in h}
    return any(lit.pred in heads for r in h for lit in r.body)


def program_cost(h) -> int:
    """Total literal count: sum over rules of 1 + body size."""
    return sum(r.size for r in h)


# ---------------------------------------------------------------------------
# Rendering.  Canonical variables print as A, B, C, ...

def var_name(i: int) -> str:
    return chr(ord("A") + i) if i < 26 else f"V{i}"


def render_term(t: Term) -> str:
    return var_name(t.index) if isinstance(t, Var) else t.name


def render_literal(lit: Literal) -> str:
    if not lit.args:
        return lit.pred
    return f"{lit.pred}({','.join(render_term(t) for t in lit.args)})"


def render_rule(rule: Rule) -> str:
    """`head(A,B):- lit1(...),lit2(...).` with canonical variable order."""
    r = canonical_rule(rule)
    body = ",".join(render_literal(l) for l in sorted(r.body, key=literal_key))
    return f"{render_literal(r.head)}:- {body}."


def render_fact(lit: Literal) -> str:
    return f"{render_literal(lit)}."


def render_program(h) -> str:
    rules = sorted((canonical_rule(r) for r in h), key=rule_key)
    return "\n".join(render_rule(r) for r in rules)
