"""Terms, substitutions, unification and theta-subsumption.

Terms are immutable: variables, constants, and compound terms. Lists are
built from the functor ``cons`` with the constant ``nil`` as terminator.
Constraint sets are frozensets of :class:`Constraint` objects (primitive
relations or user-defined atoms).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Union

# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    id: str

    def __repr__(self):
        return self.id


@dataclass(frozen=True)
class Const:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class Compound:
    functor: str
    args: tuple["Term", ...]

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Compound):
            return NotImplemented
        if hash(self) != hash(other):
            return False
        return self.functor == other.functor and self.args == other.args

    def __hash__(self):
        # Deeply nested terms get hashed a lot; compute once.
        try:
            return self._hash
        except AttributeError:
            h = hash((self.functor, self.args))
            object.__setattr__(self, "_hash", h)
            return h

    def __repr__(self):
        return f"{self.functor}({', '.join(map(repr, self.args))})"


Term = Union[Var, Const, Compound]

NIL = Const("nil")


def cons(head: Term, tail: Term) -> Compound:
    return Compound("cons", (head, tail))


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = cons(item, out)
    return out


def term_vars(t: Term) -> set[Var]:
    if isinstance(t, Var):
        return {t}
    if isinstance(t, Compound):
        out: set[Var] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    return set()


def occurs(v: Var, t: Term) -> bool:
    if isinstance(t, Var):
        return t == v
    if isinstance(t, Compound):
        return any(occurs(v, a) for a in t.args)
    return False


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------

#: Primitive relation names, paired with their negations.
NEGATION = {"eq": "neq", "neq": "eq", "le": "gt", "gt": "le", "lt": "ge", "ge": "lt"}
PRIMITIVE_RELATIONS = frozenset(NEGATION)
ORDER_RELATIONS = frozenset({"le", "lt", "ge", "gt"})


@dataclass(frozen=True)
class Constraint:
    """A primitive constraint (relation in PRIMITIVE_RELATIONS, arity 2) or a
    user-defined atom (any other functor)."""

    functor: str
    args: tuple[Term, ...]

    @property
    def is_primitive(self) -> bool:
        return self.functor in PRIMITIVE_RELATIONS

    def __repr__(self):
        if self.is_primitive:
            sym = {"eq": "=", "neq": "!=", "le": "=<", "lt": "<", "ge": ">=", "gt": ">"}[
                self.functor
            ]
            return f"{self.args[0]!r}{sym}{self.args[1]!r}"
        if not self.args:
            return self.functor
        return f"{self.functor}({', '.join(map(repr, self.args))})"


def prim(rel: str, left: Term, right: Term) -> Constraint:
    assert rel in PRIMITIVE_RELATIONS
    return Constraint(rel, (left, right))


def atom(functor: str, *args: Term) -> Constraint:
    return Constraint(functor, tuple(args))


def constraint_vars(c: Constraint) -> set[Var]:
    out: set[Var] = set()
    for a in c.args:
        out |= term_vars(a)
    return out


def constraints_vars(cs: Iterable[Constraint]) -> set[Var]:
    out: set[Var] = set()
    for c in cs:
        out |= constraint_vars(c)
    return out


# ---------------------------------------------------------------------------
# Substitutions
# ---------------------------------------------------------------------------

Subst = dict[Var, Term]


def apply_subst(s: Mapping[Var, Term], t: Term) -> Term:
    if isinstance(t, Var):
        bound = s.get(t)
        if bound is None or bound == t:
            return t
        # Walk chains so application is idempotent on composed substitutions.
        return apply_subst(s, bound) if isinstance(bound, (Var, Compound)) else bound
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(apply_subst(s, a) for a in t.args))
    return t


def rename_term(s: Mapping[Var, Var], t: Term) -> Term:
    """One-shot variable renaming; no chain walking, safe when old and new
    name spaces overlap."""
    if isinstance(t, Var):
        return s.get(t, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(rename_term(s, a) for a in t.args))
    return t


def rename_constraint(s: Mapping[Var, Var], c: "Constraint") -> "Constraint":
    return Constraint(c.functor, tuple(rename_term(s, a) for a in c.args))


def apply_match(s: Mapping[Var, Term], t: Term) -> Term:
    """Apply a matching substitution: pattern variables are replaced by
    their bindings verbatim, with no substitution inside the replacement.
    Pattern and target may share variable names."""
    if isinstance(t, Var):
        return s.get(t, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(apply_match(s, a) for a in t.args))
    return t


def match_subst_constraint(s: Mapping[Var, Term], c: "Constraint") -> "Constraint":
    return Constraint(c.functor, tuple(apply_match(s, a) for a in c.args))


def match_subst_constraints(
    s: Mapping[Var, Term], cs: Iterable["Constraint"]
) -> frozenset["Constraint"]:
    return frozenset(match_subst_constraint(s, c) for c in cs)


def subst_constraint(s: Mapping[Var, Term], c: Constraint) -> Constraint:
    return Constraint(c.functor, tuple(apply_subst(s, a) for a in c.args))


def subst_constraints(s: Mapping[Var, Term], cs: Iterable[Constraint]) -> frozenset[Constraint]:
    return frozenset(subst_constraint(s, c) for c in cs)


def unify(t1: Term, t2: Term, s: Optional[Subst] = None) -> Optional[Subst]:
    """Most general unifier of ``t1`` and ``t2`` extending ``s``, or None.

    Occurs check is always performed; failure is returned as None, never
    raised.
    """
    s = dict(s) if s else {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = apply_subst(s, a)
        b = apply_subst(s, b)
        if a == b:
            continue
        if isinstance(a, Var):
            if occurs(a, b):
                return None
            s[a] = b
        elif isinstance(b, Var):
            if occurs(b, a):
                return None
            s[b] = a
        elif isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
        else:
            return None
    # Normalize to a fully-applied (idempotent) map.
    return {v: apply_subst(s, t) for v, t in s.items()}


# ---------------------------------------------------------------------------
# Fresh variables and renaming
# ---------------------------------------------------------------------------

_counter = itertools.count(1)


def fresh_var(prefix: str = "_G") -> Var:
    return Var(f"{prefix}{next(_counter)}")


def rename_apart(cs: Iterable[Constraint], prefix: str = "_G") -> frozenset[Constraint]:
    """Replace every variable with a fresh one, preserving sharing."""
    cs = list(cs)
    mapping: Subst = {v: fresh_var(prefix) for v in sorted(constraints_vars(cs), key=lambda v: v.id)}
    return subst_constraints(mapping, cs)


def renaming_for(vars_: Iterable[Var], prefix: str = "_G") -> Subst:
    return {v: fresh_var(prefix) for v in sorted(set(vars_), key=lambda v: v.id)}


# ---------------------------------------------------------------------------
# Canonical forms and variant equality
# ---------------------------------------------------------------------------


def _term_key(t: Term) -> tuple:
    if isinstance(t, Var):
        return (0, t.id)
    if isinstance(t, Const):
        return (1, t.name)
    return (2, t.functor, tuple(_term_key(a) for a in t.args))


def constraint_key(c: Constraint) -> tuple:
    return (c.functor, tuple(_term_key(a) for a in c.args))


def canonical(cs: Iterable[Constraint]) -> tuple[Constraint, ...]:
    """Canonical form of a constraint set: variables renumbered V1, V2, ... in
    first-occurrence order over the sorted constraint sequence.

    Two sets are variants (equal up to renaming) iff their canonical forms are
    equal. Sorting happens before renumbering, so the result is order
    independent; a fixpoint loop handles sort order shifting after renaming.
    """
    current = tuple(sorted(set(cs), key=constraint_key))
    for _ in range(3 + len(current)):
        mapping: Subst = {}

        def number(t: Term):
            if isinstance(t, Var) and t not in mapping:
                mapping[t] = Var(f"V{len(mapping) + 1}")
            elif isinstance(t, Compound):
                for a in t.args:
                    number(a)

        for c in current:
            for a in c.args:
                number(a)
        renamed = tuple(sorted((rename_constraint(mapping, c) for c in current), key=constraint_key))
        if renamed == current:
            return current
        current = renamed
    return current


def canonical_key(cs: Iterable[Constraint]) -> tuple:
    """Totally ordered (and hashable) image of :func:`canonical`."""
    return tuple(constraint_key(c) for c in canonical(cs))


def variant_equal(a: Iterable[Constraint], b: Iterable[Constraint]) -> bool:
    return canonical(a) == canonical(b)


# ---------------------------------------------------------------------------
# Theta-subsumption
# ---------------------------------------------------------------------------

_subsume_cache: dict[tuple, bool] = {}


def match_term(pat: Term, t: Term, s: Subst) -> Optional[Subst]:
    """One-way matching: extend s so that pat.s == t (t is not instantiated).

    Bindings map pattern variables to target terms; target terms are never
    substituted, so shared variable names across the two sides are harmless.
    A pattern variable that is already bound must match its binding verbatim.
    """
    if isinstance(pat, Var):
        bound = s.get(pat)
        if bound is not None:
            return s if bound == t else None
        out = dict(s)
        out[pat] = t
        return out
    if isinstance(pat, Const):
        return s if pat == t else None
    if isinstance(t, Compound) and pat.functor == t.functor and len(pat.args) == len(t.args):
        for pa, ta in zip(pat.args, t.args):
            s2 = match_term(pa, ta, s)
            if s2 is None:
                return None
            s = s2
        return s
    return None


def match_into(
    pattern: Iterable[Constraint], target: Iterable[Constraint], s: Optional[Subst] = None
) -> Iterator[Subst]:
    """All substitutions sigma with pattern.sigma a subset of target."""
    pattern = list(pattern)
    target = list(target)

    def go(i: int, s: Subst) -> Iterator[Subst]:
        if i == len(pattern):
            yield s
            return
        p = pattern[i]
        for t in target:
            if t.functor != p.functor or len(t.args) != len(p.args):
                continue
            s2: Optional[Subst] = s
            for pa, ta in zip(p.args, t.args):
                s2 = match_term(pa, ta, s2)
                if s2 is None:
                    break
            if s2 is not None:
                yield from go(i + 1, s2)

    return go(0, dict(s) if s else {})


def theta_subsumes(a: Iterable[Constraint], b: Iterable[Constraint]) -> bool:
    """True iff some substitution maps ``a`` into a subset of ``b``."""
    a = frozenset(a)
    b = frozenset(b)
    key = (canonical(a), canonical(b))
    hit = _subsume_cache.get(key)
    if hit is not None:
        return hit
    result = next(iter(match_into(a, b)), None) is not None
    _subsume_cache[key] = result
    return result
