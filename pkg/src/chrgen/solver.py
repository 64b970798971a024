"""Sound, incomplete satisfiability and entailment for primitive constraints.

The store keeps equalities in a union-find over terms (decomposing compound
equalities structurally with occurs check), disequalities against class
representatives, and order constraints in a graph whose cycles through a
strict edge signal inconsistency. Anything the store cannot decide is
treated as satisfiable; incompleteness only ever suppresses rule
generation, it cannot let an invalid rule through.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .terms import (
    NEGATION,
    ORDER_RELATIONS,
    Compound,
    Const,
    Constraint,
    Term,
    Var,
)


class BlowupExceeded(Exception):
    """DNF expansion exceeded the configured conjunct cap."""


def negate(c: Constraint) -> Constraint:
    """Complementary primitive relation; arguments unchanged."""
    if not c.is_primitive:
        raise ValueError(f"cannot negate user-defined constraint {c!r}")
    return Constraint(NEGATION[c.functor], c.args)


#: Constants with an order sort: numerals, plus anything declared ordered
#: via a program directive. Order relations apply only to variables and
#: these.
ORDERED_CONSTANTS: set[str] = set()


def declare_ordered(names: Iterable[str]) -> None:
    ORDERED_CONSTANTS.update(names)


def is_ordered_const(t: Term) -> bool:
    if not isinstance(t, Const):
        return False
    return t.name.lstrip("-").isdigit() or t.name in ORDERED_CONSTANTS


def _const_value(t: Term) -> Optional[int]:
    if is_ordered_const(t):
        return int(t.name)
    return None


@dataclass
class Store:
    """A set of primitive constraints with derived eq-classes and order graph.

    Value semantics: ``assert_constraint`` copies, so stores may be shared
    freely.
    """

    parent: dict[Term, Term] = field(default_factory=dict)
    neqs: set[frozenset] = field(default_factory=set)  # pairs of representatives
    strict: set[tuple[Term, Term]] = field(default_factory=set)  # a < b
    nonstrict: set[tuple[Term, Term]] = field(default_factory=set)  # a <= b
    suspended_neqs: list[tuple[Term, Term]] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    seen_vars: set[Var] = field(default_factory=set)

    def copy(self) -> "Store":
        return Store(
            dict(self.parent),
            set(self.neqs),
            set(self.strict),
            set(self.nonstrict),
            list(self.suspended_neqs),
            list(self.constraints),
            set(self.seen_vars),
        )

    # -- union-find over terms --------------------------------------------

    def walk(self, t: Term) -> Term:
        """Chase variable links only; compound arguments stay unresolved.
        Only variables ever appear as parent keys."""
        if not isinstance(t, Var):
            return t
        chain = []
        while t in self.parent:
            chain.append(t)
            t = self.parent[t]
        for link in chain[:-1]:
            self.parent[link] = t
        return t

    def _same(self, a: Term, b: Term) -> bool:
        """Denotational equality of two terms under the current bindings,
        without materializing resolved structures."""
        a = self.walk(a)
        b = self.walk(b)
        if a == b:
            return True
        if isinstance(a, Compound) and isinstance(b, Compound):
            return (
                a.functor == b.functor
                and len(a.args) == len(b.args)
                and all(self._same(x, y) for x, y in zip(a.args, b.args))
            )
        return False

    def _occurs(self, v: Var, t: Term) -> bool:
        t = self.walk(t)
        if t == v:
            return True
        if isinstance(t, Compound):
            return any(self._occurs(v, a) for a in t.args)
        return False

    def _distinct(self, a: Term, b: Term) -> bool:
        """True when the two terms denote distinct values for sure under
        the current bindings: clashing constants or functors anywhere."""
        a = self.walk(a)
        b = self.walk(b)
        if isinstance(a, Const) and isinstance(b, Const):
            return a != b
        if isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return True
            return any(self._distinct(x, y) for x, y in zip(a.args, b.args))
        if isinstance(a, Const) and isinstance(b, Compound):
            return True
        if isinstance(a, Compound) and isinstance(b, Const):
            return True
        return False

    def find(self, t: Term, memo: Optional[dict] = None) -> Term:
        if memo is not None:
            hit = memo.get(t)
            if hit is not None:
                return hit
        start = t
        chain = []
        while t in self.parent:
            chain.append(t)
            t = self.parent[t]
        # Path compression; keeps variable chains flat.
        for link in chain[:-1]:
            self.parent[link] = t
        if isinstance(t, Compound):
            resolved = Compound(t.functor, tuple(self.find(a, memo) for a in t.args))
            if resolved != t and resolved in self.parent:
                resolved = self.find(resolved, memo)
            t = resolved
        if memo is not None:
            memo[start] = t
        return t

    def _union(self, a: Term, b: Term, safe: frozenset = frozenset()) -> bool:
        """Merge the classes of a and b; False on clash/occurs failure.

        ``safe`` holds variables that provably cannot occur inside the other
        side (linear in the constraint being asserted, unseen before it), so
        the occurs check may be skipped for them.
        """
        a = self.walk(a)
        b = self.walk(b)
        if a == b:
            return True
        if isinstance(a, Var):
            if a not in safe and self._occurs(a, b):
                return False
            self.parent[a] = b
        elif isinstance(b, Var):
            if b not in safe and self._occurs(b, a):
                return False
            self.parent[b] = a
        elif isinstance(a, Const) and isinstance(b, Const):
            return False  # distinct constants
        elif isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return False
            for x, y in zip(a.args, b.args):
                if not self._union(x, y, safe):
                    return False
        else:
            return False  # const vs compound
        return True


def _count_vars(t: Term, counts: dict[Var, int]) -> None:
    if isinstance(t, Var):
        counts[t] = counts.get(t, 0) + 1
    elif isinstance(t, Compound):
        for a in t.args:
            _count_vars(a, counts)


def _assert_inplace(s: Store, c: Constraint) -> bool:
    """Record one constraint in the store without propagating; False on an
    immediately detected inconsistency."""
    s.constraints.append(c)
    left, right = c.args
    rel = c.functor
    counts: dict[Var, int] = {}
    _count_vars(left, counts)
    _count_vars(right, counts)
    if rel == "eq":
        safe = frozenset(
            v for v, n in counts.items() if n == 1 and v not in s.seen_vars
        )
        if not s._union(left, right, safe):
            s.seen_vars.update(counts)
            return False
    elif rel == "neq":
        s.suspended_neqs.append((left, right))
    elif rel in ORDER_RELATIONS:
        a, b = left, right
        if rel == "ge":
            a, b, rel = b, a, "le"
        elif rel == "gt":
            a, b, rel = b, a, "lt"
        ra, rb = s.walk(a), s.walk(b)
        va, vb = _const_value(ra), _const_value(rb)
        if va is not None and vb is not None:
            if rel == "le" and not va <= vb:
                return False
            if rel == "lt" and not va < vb:
                return False
        elif rel == "le":
            s.nonstrict.add((ra, rb))
        else:
            s.strict.add((ra, rb))
    else:
        raise ValueError(f"not a primitive constraint: {c!r}")
    s.seen_vars.update(counts)
    return True


def assert_constraint(s: Store, c: Constraint) -> Optional[Store]:
    """Extended store, or None when inconsistency is detected."""
    return assert_many(s, (c,))


def assert_many(s: Store, cs: Iterable[Constraint]) -> Optional[Store]:
    """Assert a batch of constraints with one copy and one propagation
    pass; None when inconsistency is detected."""
    s = s.copy()
    for c in cs:
        if not _assert_inplace(s, c):
            return None
    return _propagate(s)


def _propagate(s: Store) -> Optional[Store]:
    """Saturate derived structures; None on detected inconsistency."""
    for _ in range(1000):
        changed = False
        # Re-anchor order edges on current representatives, folding in
        # numeric endpoints.
        strict, nonstrict = set(), set()
        for a, b in s.strict:
            ra, rb = s.walk(a), s.walk(b)
            va, vb = _const_value(ra), _const_value(rb)
            if va is not None and vb is not None:
                if not va < vb:
                    return None
                continue
            if ra == rb:
                return None
            strict.add((ra, rb))
        for a, b in s.nonstrict:
            ra, rb = s.walk(a), s.walk(b)
            va, vb = _const_value(ra), _const_value(rb)
            if va is not None and vb is not None:
                if not va <= vb:
                    return None
                continue
            if ra == rb:
                continue
            nonstrict.add((ra, rb))
        if strict != s.strict or nonstrict != s.nonstrict:
            changed = True
        s.strict, s.nonstrict = strict, nonstrict

        # Antisymmetry: a<=b and b<=a force a=b.
        for a, b in list(s.nonstrict):
            if (b, a) in s.nonstrict:
                if not s._union(a, b):
                    return None
                s.nonstrict.discard((a, b))
                s.nonstrict.discard((b, a))
                changed = True

        # Cycle through a strict edge = unsat. Compute reachability over the
        # combined graph, tracking whether a strict edge was used.
        edges: dict[Term, list[tuple[Term, bool]]] = {}
        for a, b in s.nonstrict:
            edges.setdefault(a, []).append((b, False))
        for a, b in s.strict:
            edges.setdefault(a, []).append((b, True))
        for start in list(edges):
            # BFS from start; reaching start again via any strict edge
            # fails, as does reaching a numeric constant the start constant
            # does not actually precede.
            v_start = _const_value(start)
            seen: dict[Term, bool] = {}
            frontier = [(start, False)]
            while frontier:
                node, any_strict = frontier.pop()
                for nxt, is_strict in edges.get(node, ()):
                    flag = any_strict or is_strict
                    if nxt == start:
                        if flag:
                            return None
                        continue
                    if v_start is not None:
                        v_nxt = _const_value(nxt)
                        if v_nxt is not None and not (
                            v_start < v_nxt if flag else v_start <= v_nxt
                        ):
                            return None
                    if seen.get(nxt) is None or (flag and not seen[nxt]):
                        seen[nxt] = flag
                        frontier.append((nxt, flag))

        # Disequalities: decide what has become decidable. Undecided ones
        # are kept reduced to their undecided frontier, so repeated checks
        # on growing structures stay cheap.
        still: list[tuple[Term, Term]] = []
        for l, r in s.suspended_neqs:
            reduced = _reduce_neq(s, l, r)
            if reduced is _NEQ_UNSAT:
                return None
            if reduced is not None and reduced not in still:
                still.append(reduced)
        s.suspended_neqs = still
        if not changed:
            return s
    return s


_NEQ_UNSAT = object()

_SAME, _DISTINCT, _UNDECIDED = 0, 1, 2


def _neq_status(s: Store, l: Term, r: Term, frontier: list) -> int:
    """One-pass classification of a term pair under the current bindings.
    Undecided variable-level pairs are appended to ``frontier``."""
    a, b = s.walk(l), s.walk(r)
    if a == b:
        return _SAME
    if isinstance(a, Compound) and isinstance(b, Compound):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return _DISTINCT
        mark = len(frontier)
        status = _SAME
        for x, y in zip(a.args, b.args):
            st = _neq_status(s, x, y, frontier)
            if st == _DISTINCT:
                del frontier[mark:]
                return _DISTINCT
            if st == _UNDECIDED:
                status = _UNDECIDED
        return status
    if isinstance(a, Var) or isinstance(b, Var):
        frontier.append((a, b))
        return _UNDECIDED
    return _DISTINCT  # clashing constants, or constant vs compound


def _reduce_neq(s: Store, l: Term, r: Term):
    """Advance a suspended disequality to its undecided frontier.

    Returns ``_NEQ_UNSAT`` when both sides are equal under the current
    bindings, None when they are decidably distinct (the disequality is
    discharged), and otherwise an equivalent pair to keep suspended. When
    matching compounds disagree in exactly one undecided argument pair, the
    disequality is equivalent to that pair alone, so the kept pair moves to
    it; long equal spines are then never rescanned.
    """
    frontier: list[tuple[Term, Term]] = []
    status = _neq_status(s, l, r, frontier)
    if status == _SAME:
        return _NEQ_UNSAT
    if status == _DISTINCT:
        return None
    if len(frontier) == 1:
        return frontier[0]
    return (s.walk(l), s.walk(r))


def satisfiable(cs: Iterable[Constraint]) -> bool:
    """Build a store from scratch; False only on detected inconsistency."""
    return assert_many(Store(), cs) is not None


def entails(s: Store, c: Constraint) -> bool:
    """True only if the store entails c (sound, incomplete): asserting the
    negation must yield unsat."""
    return assert_constraint(s, negate(c)) is None


def store_from(cs: Iterable[Constraint]) -> Optional[Store]:
    return assert_many(Store(), cs)


def _var_age(t: Term) -> tuple:
    return (0, t.id) if isinstance(t, Var) else (1,)


def simplify(s: Store) -> frozenset[Constraint]:
    """Equivalent, non-redundant constraint set: drop every constraint
    entailed by the remainder; orient equalities older-variable-first."""
    kept: list[Constraint] = []
    remaining = list(dict.fromkeys(s.constraints))
    for i, c in enumerate(remaining):
        others = kept + remaining[i + 1 :]
        base = store_from(others)
        if base is not None and entails(base, c):
            continue
        kept.append(c)
    out = []
    for c in kept:
        if c.functor in ("eq", "neq"):
            l, r = c.args
            if sorted((_var_age(l), _var_age(r))) != [_var_age(l), _var_age(r)]:
                c = Constraint(c.functor, (r, l))
        out.append(c)
    return frozenset(out)


def dnf_satisfiable(
    pos: list[frozenset[Constraint]],
    neg: list[frozenset[Constraint]],
    cap: int = 10_000,
) -> bool:
    """Satisfiability of (OR pos) AND (AND_j NOT neg_j) by DNF expansion.

    Each negated answer distributes ``negate`` over its constraints; a
    conjunct is one positive answer plus one negated literal per negated
    answer. Raises BlowupExceeded past ``cap`` conjuncts.
    """
    count = len(pos)
    for b in neg:
        count *= max(len(b), 1)
        if count > cap:
            raise BlowupExceeded(f"{count} conjuncts exceeds cap {cap}")
    if not pos:
        return False

    def expand(j: int, acc: list[Constraint]) -> bool:
        if j == len(neg):
            return satisfiable(acc)
        for c in neg[j]:
            if expand(j + 1, acc + [negate(c)]):
                return True
        # An empty negated answer means NOT(true): whole formula unsat.
        return bool(neg[j]) and False

    for a in pos:
        if not satisfiable(a):
            continue
        if expand(0, list(a)):
            return True
    return False
