"""Hypothesis-space declaration (bias) files and the candidate-literal
vocabulary they induce.

Directive grammar, one directive per line, `%` comments:

    max_clause(N).  max_vars(N).  max_body(N).
    head_pred(p,a).  body_pred(p,a).
    type(p,(t1,...,ta)).  direction(p,(d1,...,da)).
    constant(c,t).  constant(c).

`constant` declares a symbol that may appear inline in rule bodies
(e.g. head(A,7)); everything else follows the usual declaration style.
Types and directions are optional: absent types mean one universal type,
absent directions mean all-out arguments, which disables dataflow
pruning rather than rejecting the task.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

from .logic import Const, Literal, Rule, Term, Var

IN = "in"
OUT = "out"


class BiasError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class BiasSpec:
    max_clauses: int
    max_vars: int
    max_body: int
    head: tuple[str, int]
    body_preds: frozenset[tuple[str, int]]
    # (pred -> per-argument type names), (pred -> per-argument in/out)
    types: tuple[tuple[str, tuple[str, ...]], ...] = ()
    directions: tuple[tuple[str, tuple[str, ...]], ...] = ()
    # (symbol, type or None), sorted
    constants: tuple[tuple[str, str | None], ...] = ()

    @property
    def head_pred(self) -> str:
        return self.head[0]

    @property
    def head_arity(self) -> int:
        return self.head[1]

    @property
    def typed(self) -> bool:
        return bool(self.types)

    def type_of(self, pred: str, arity: int) -> tuple[str | None, ...]:
        for p, ts in self.types:
            if p == pred and len(ts) == arity:
                return ts
        return (None,) * arity

    def direction_of(self, pred: str, arity: int) -> tuple[str, ...] | None:
        for p, ds in self.directions:
            if p == pred and len(ds) == arity:
                return ds
        return None

    def constants_of_type(self, t: str | None) -> tuple[str, ...]:
        return tuple(c for c, ct in self.constants if t is None or ct is None or ct == t)


# ---------------------------------------------------------------------------
# Parsing.

_DIRECTIVE = re.compile(r"([a-z_]+)\s*\((.*)\)\s*\.\s*$")
_SYMBOL = re.compile(r"[A-Za-z0-9_]+$")


def _split_args(body: str, line: int) -> list[str]:
    """Top-level comma split of a directive argument list."""
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
            cur.append(ch)
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise BiasError("unbalanced parentheses", line)
            cur.append(ch)
        elif ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise BiasError("unbalanced parentheses", line)
    last = "".join(cur).strip()
    if last:
        parts.append(last)
    return parts


def _parse_tuple(text: str, line: int) -> tuple[str, ...]:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise BiasError(f"expected a parenthesized tuple, found {text!r}", line)
    inner = text[1:-1].strip()
    if inner.endswith(","):
        inner = inner[:-1]
    items = tuple(s.strip() for s in inner.split(",")) if inner else ()
    for item in items:
        if not _SYMBOL.match(item):
            raise BiasError(f"bad tuple element {item!r}", line)
    return items


def _symbol(text: str, line: int) -> str:
    text = text.strip()
    if not _SYMBOL.match(text):
        raise BiasError(f"bad symbol {text!r}", line)
    return text


def _number(text: str, line: int) -> int:
    text = text.strip()
    if not text.isdigit():
        raise BiasError(f"expected a number, found {text!r}", line)
    return int(text)


def parse_bias(text: str) -> BiasSpec:
    settings: dict[str, int] = {}
    head: tuple[str, int] | None = None
    body_preds: set[tuple[str, int]] = set()
    types: dict[str, tuple[str, ...]] = {}
    directions: dict[str, tuple[str, ...]] = {}
    constants: dict[str, str | None] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        cut = raw.find("%")
        stripped = (raw if cut < 0 else raw[:cut]).strip()
        if not stripped:
            continue
        m = _DIRECTIVE.match(stripped)
        if m is None:
            raise BiasError(f"cannot parse directive {stripped!r}", lineno)
        name, body = m.group(1), m.group(2)
        args = _split_args(body, lineno)

        if name in {"max_clause", "max_vars", "max_body"}:
            if len(args) != 1:
                raise BiasError(f"{name} takes one argument", lineno)
            value = _number(args[0], lineno)
            key = {"max_clause": "max_clauses", "max_vars": "max_vars", "max_body": "max_body"}[name]
            if key in settings and settings[key] != value:
                raise BiasError(f"conflicting {name} declarations", lineno)
            settings[key] = value
        elif name == "head_pred":
            if len(args) != 2:
                raise BiasError("head_pred takes (p,a)", lineno)
            decl = (_symbol(args[0], lineno), _number(args[1], lineno))
            if head is not None and head != decl:
                raise BiasError("conflicting head_pred declarations", lineno)
            head = decl
        elif name == "body_pred":
            if len(args) != 2:
                raise BiasError("body_pred takes (p,a)", lineno)
            body_preds.add((_symbol(args[0], lineno), _number(args[1], lineno)))
        elif name == "type":
            if len(args) != 2:
                raise BiasError("type takes (p,(t1,...,ta))", lineno)
            pred = _symbol(args[0], lineno)
            ts = _parse_tuple(args[1], lineno)
            if pred in types and types[pred] != ts:
                raise BiasError(f"conflicting type declarations for {pred}", lineno)
            types[pred] = ts
        elif name == "direction":
            if len(args) != 2:
                raise BiasError("direction takes (p,(d1,...,da))", lineno)
            pred = _symbol(args[0], lineno)
            ds = _parse_tuple(args[1], lineno)
            for d in ds:
                if d not in {IN, OUT}:
                    raise BiasError(f"direction must be in/out, found {d!r}", lineno)
            if pred in directions and directions[pred] != ds:
                raise BiasError(f"conflicting direction declarations for {pred}", lineno)
            directions[pred] = ds
        elif name == "constant":
            if len(args) == 1:
                sym, ctype = _symbol(args[0], lineno), None
            elif len(args) == 2:
                sym, ctype = _symbol(args[0], lineno), _symbol(args[1], lineno)
            else:
                raise BiasError("constant takes (c) or (c,t)", lineno)
            if sym in constants and constants[sym] != ctype:
                raise BiasError(f"conflicting constant declarations for {sym}", lineno)
            constants[sym] = ctype
        else:
            raise BiasError(f"unknown directive {name!r}", lineno)

    if head is None:
        raise BiasError("missing head_pred declaration")

    declared = {head} | body_preds
    arities = {}
    for p, a in declared:
        arities.setdefault(p, set()).add(a)
    for pred, ts in types.items():
        if pred not in arities:
            raise BiasError(f"type declared for unknown predicate {pred}")
        if len(ts) not in arities[pred]:
            raise BiasError(
                f"type arity mismatch for {pred}: declared /{sorted(arities[pred])[0]}, type has {len(ts)} slots"
            )
    for pred, ds in directions.items():
        if pred not in arities:
            raise BiasError(f"direction declared for unknown predicate {pred}")
        if len(ds) not in arities[pred]:
            raise BiasError(
                f"direction arity mismatch for {pred}: declared /{sorted(arities[pred])[0]}, direction has {len(ds)} slots"
            )

    spec = BiasSpec(
        max_clauses=settings.get("max_clauses", 1),
        max_vars=settings.get("max_vars", 6),
        max_body=settings.get("max_body", 6),
        head=head,
        body_preds=frozenset(body_preds),
        types=tuple(sorted(types.items())),
        directions=tuple(sorted(directions.items())),
        constants=tuple(sorted(constants.items(), key=lambda kv: (kv[0], kv[1] or ""))),
    )
    if spec.max_body < 1:
        raise BiasError("max_body must be at least 1")
    if spec.max_clauses < 1:
        raise BiasError("max_clause must be at least 1")
    if spec.max_vars < spec.head_arity:
        raise BiasError("max_vars is smaller than the head arity")
    return spec


def render_bias(spec: BiasSpec) -> str:
    lines = [
        f"max_clause({spec.max_clauses}).",
        f"max_vars({spec.max_vars}).",
        f"max_body({spec.max_body}).",
        "",
        f"head_pred({spec.head_pred},{spec.head_arity}).",
    ]
    for p, a in sorted(spec.body_preds):
        lines.append(f"body_pred({p},{a}).")
    if spec.types:
        lines.append("")
        for p, ts in spec.types:
            tup = ",".join(ts) + ("," if len(ts) == 1 else "")
            lines.append(f"type({p},({tup})).")
    if spec.directions:
        lines.append("")
        for p, ds in spec.directions:
            tup = ",".join(ds) + ("," if len(ds) == 1 else "")
            lines.append(f"direction({p},({tup})).")
    if spec.constants:
        lines.append("")
        for c, t in spec.constants:
            lines.append(f"constant({c},{t})." if t is not None else f"constant({c}).")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Candidate literals.

# Type environment for a rule under construction: variable -> type name,
# None meaning not yet constrained.
TypeEnv = dict[Var, str | None]


def head_literal(spec: BiasSpec) -> Literal:
    return Literal(spec.head_pred, tuple(Var(i) for i in range(spec.head_arity)))


def head_type_env(spec: BiasSpec) -> TypeEnv:
    ts = spec.type_of(spec.head_pred, spec.head_arity)
    return {Var(i): ts[i] for i in range(spec.head_arity)}


def candidate_literals(spec: BiasSpec, vars_in_scope: int, type_env: TypeEnv | None = None) -> list[Literal]:
    """All body-predicate literals over V0..V(vars_in_scope-1), at most
    (arity) fresh variables, and declared constants, respecting types.
    Fresh variables are numbered consecutively from vars_in_scope in
    order of first occurrence, so each shape appears exactly once.
    """
    return literals_for_preds(spec, tuple(sorted(spec.body_preds)), vars_in_scope, type_env)


def literals_for_preds(
    spec: BiasSpec,
    preds: tuple[tuple[str, int], ...],
    vars_in_scope: int,
    type_env: TypeEnv | None = None,
) -> list[Literal]:
    env = type_env or {}
    out: set[Literal] = set()
    for pred, arity in preds:
        slot_types = spec.type_of(pred, arity)
        slot_options: list[list] = []
        for t in slot_types:
            opts: list = []
            for i in range(vars_in_scope):
                vt = env.get(Var(i))
                if t is None or vt is None or vt == t:
                    opts.append(Var(i))
            for k in range(arity):
                opts.append(("fresh", k))
            for c in spec.constants_of_type(t):
                opts.append(Const(c))
            slot_options.append(opts)
        for combo in product(*slot_options):
            args: list[Term] = []
            fresh_map: dict[int, Var] = {}
            fresh_types: dict[Var, str | None] = {}
            ok = True
            for slot, choice in zip(range(arity), combo):
                t = slot_types[slot]
                if isinstance(choice, tuple):
                    var = fresh_map.get(choice[1])
                    if var is None:
                        var = Var(vars_in_scope + len(fresh_map))
                        fresh_map[choice[1]] = var
                        fresh_types[var] = t
                    else:
                        prev = fresh_types[var]
                        if prev is not None and t is not None and prev != t:
                            ok = False
                            break
                        if prev is None:
                            fresh_types[var] = t
                    args.append(var)
                else:
                    args.append(choice)
            if not ok:
                continue
            lit = Literal(pred, tuple(args))
            if len(set(lit.variables())) > spec.max_vars:
                continue
            out.add(lit)
    from .logic import literal_key

    return sorted(out, key=literal_key)


def extend_type_env(spec: BiasSpec, env: TypeEnv, lit: Literal) -> TypeEnv | None:
    """Fold a literal's slot types into the environment; None on conflict."""
    slot_types = spec.type_of(lit.pred, lit.arity)
    out = dict(env)
    for term, t in zip(lit.args, slot_types):
        if not isinstance(term, Var):
            continue
        cur = out.get(term)
        if cur is None:
            out[term] = t
        elif t is not None and cur != t:
            return None
    return out


# ---------------------------------------------------------------------------
# Rule validity under the bias.

def _initially_bound(spec: BiasSpec, head: Literal) -> set[Var]:
    ds = spec.direction_of(head.pred, head.arity)
    if ds is None:
        return set(head.variables())
    return {t for t, d in zip(head.args, ds) if d == IN and isinstance(t, Var)}


def _in_vars(spec: BiasSpec, lit: Literal) -> set[Var]:
    ds = spec.direction_of(lit.pred, lit.arity)
    if ds is None:
        return set()
    return {t for t, d in zip(lit.args, ds) if d == IN and isinstance(t, Var)}


def is_safe_rule(spec: BiasSpec, rule: Rule) -> bool:
    """Some body ordering binds every `in` argument before use."""
    bound = _initially_bound(spec, rule.head)
    remaining = set(rule.body)
    while remaining:
        pick = None
        for lit in remaining:
            if _in_vars(spec, lit) <= bound:
                pick = lit
                break
        if pick is None:
            return False
        bound.update(pick.variables())
        remaining.discard(pick)
    return True


def rule_type_env(spec: BiasSpec, rule: Rule) -> TypeEnv | None:
    """Unified per-variable types for the whole rule; None on conflict."""
    env = extend_type_env(spec, {}, rule.head)
    if env is None:
        return None
    for lit in sorted(rule.body, key=lambda l: (l.pred, l.arity)):
        env = extend_type_env(spec, env, lit)
        if env is None:
            return None
    return env


def _constants_ok(spec: BiasSpec, rule: Rule) -> bool:
    declared = dict(spec.constants)
    for lit in rule.body:
        slot_types = spec.type_of(lit.pred, lit.arity)
        for term, t in zip(lit.args, slot_types):
            if not isinstance(term, Const):
                continue
            if term.name not in declared:
                return False
            ct = declared[term.name]
            if ct is not None and t is not None and ct != t:
                return False
    return True


def rule_is_bias_valid(spec: BiasSpec, rule: Rule) -> bool:
    """Generation-time validity: vocabulary, sizes, types, range
    restriction (every head variable occurs in the body) and dataflow
    safety.  Renaming-invariant.
    """
    if (rule.head.pred, rule.head.arity) != spec.head:
        return False
    if any(not isinstance(t, Var) for t in rule.head.args):
        return False
    if not 1 <= len(rule.body) <= spec.max_body:
        return False
    for lit in rule.body:
        sig = (lit.pred, lit.arity)
        if sig not in spec.body_preds and sig != spec.head:
            return False
    if len(rule.variables()) > spec.max_vars:
        return False
    body_vars = set().union(*(set(l.variables()) for l in rule.body))
    if not set(rule.head.variables()) <= body_vars:
        return False
    if rule_type_env(spec, rule) is None:
        return False
    if not _constants_ok(spec, rule):
        return False
    return is_safe_rule(spec, rule)


@lru_cache(maxsize=None)
def recursion_allowed(spec: BiasSpec) -> bool:
    return spec.max_clauses >= 2
