"""Tabled CLP evaluation with call subsumption and a depth bound, plus a
classical depth-first evaluator used when tabling is off.

Each resolution node (remaining user-defined atoms plus the branch's
primitive store) is registered as a table entry. Before expanding a node,
the table is scanned for an earlier entry whose call is more general; if one
is found the node suspends and consumes that entry's answers instead of
unfolding. Answers are propagated through a worklist until the forest
saturates.

Resolution binds by asserting head-argument equalities into the branch
store rather than by substitution, so derivation branches mirror the
constraint-accumulation style of CLP derivation trees and answers fall out
of store simplification.

The classical evaluator keeps the resolvent as an ordered literal sequence
with left-to-right selection: leading primitive constraints are moved into
the store, then the leftmost atom is replaced in place by a clause body.
Constraints written after an atom therefore reach the store only once that
atom is fully resolved, so recursive calls are unfolded without them and
goals that a tabled evaluation finitely fails may run into the depth bound
here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional

from . import solver
from .program import Clause, Goal, Program, format_constraint, format_constraints
from .solver import Store, assert_many, entails, store_from
from .terms import (
    Constraint,
    Subst,
    Var,
    constraint_key,
    occurs as occurs_in,
    constraints_vars,
    fresh_var,
    match_into,
    match_subst_constraint,
    match_subst_constraints,
    rename_constraint,
    renaming_for,
    subst_constraint,
    subst_constraints,
)

Answer = frozenset  # of primitive Constraint


@dataclass(frozen=True)
class Fails:
    pass


@dataclass(frozen=True)
class Answers:
    answers: tuple[Answer, ...]


@dataclass(frozen=True)
class DepthExceeded:
    pass


Outcome = object  # Fails | Answers | DepthExceeded

FAILS = Fails()
DEPTH_EXCEEDED = DepthExceeded()


def call_subsumes(
    tabled: tuple[Goal, Iterable[Constraint]],
    current: tuple[Goal, Iterable[Constraint]],
    current_store: Optional[Store] = None,
) -> Optional[Subst]:
    """Substitution witnessing that the tabled call is at least as general
    as the current one, or None.

    The matcher must map the tabled atoms onto the current atoms and the
    current store must entail every tabled store constraint under it.
    Sound but incomplete: a missed subsumption only costs reuse. Passing
    ``current_store`` avoids rebuilding the store of the current call.
    """
    t_atoms, t_store = tabled
    c_atoms, c_store = current
    t_atoms = sorted(t_atoms, key=constraint_key)
    c_atoms = sorted(c_atoms, key=constraint_key)
    if sorted(a.functor for a in t_atoms) != sorted(a.functor for a in c_atoms):
        return None
    cur = current_store if current_store is not None else store_from(c_store)
    if cur is None:
        return None
    t_store = sorted(t_store, key=constraint_key)
    store_vars = constraints_vars(t_store)
    for sigma in match_into(t_atoms, c_atoms):
        # The matcher must cover the current atoms exactly; a partial image
        # would ignore constraints of the current call.
        if match_subst_constraints(sigma, t_atoms) != frozenset(c_atoms):
            continue
        if any(v not in sigma for v in store_vars):
            continue
        if all(entails(cur, match_subst_constraint(sigma, c)) for c in t_store):
            return sigma
    return None


@dataclass
class _Entry:
    idx: int
    atoms: tuple[Constraint, ...]  # sorted, leftmost selected first
    store: Store
    variables: frozenset[Var]
    depth: int
    # Incrementally maintained caches for the producer scan.
    store_vars: frozenset[Var] = frozenset()
    functor_key: tuple = ()
    # A call can only subsume others if the matcher, which binds atom
    # variables alone, can cover all of its store variables.
    subsumable: bool = False
    answers: list[Answer] = field(default_factory=list)
    answer_keys: set = field(default_factory=set)
    # (consumer entry, sigma mapping producer vars to consumer terms)
    consumers: list[tuple["_Entry", Subst]] = field(default_factory=list)
    parent: Optional["_Entry"] = None
    expanded: bool = False


class Evaluation:
    """One tabled evaluation forest for a single goal."""

    def __init__(
        self,
        program: Program,
        goal: Goal,
        depth: int = 200,
        tabling: bool = True,
        answer_cap: int = 512,
        trace: Optional[Callable[[str], None]] = None,
    ):
        self.program = program
        self.depth = depth
        self.tabling = tabling
        self.answer_cap = answer_cap
        self.trace = trace
        self.entries: list[_Entry] = []
        self.depth_exceeded = False
        self.cap_exceeded = False
        self.goal = goal

    def _log(self, msg: str):
        if self.trace:
            self.trace(msg)

    def run(self, mode: str = "exists") -> Outcome:
        atoms = tuple(
            sorted((c for c in self.goal if not c.is_primitive), key=constraint_key)
        )
        prims = sorted((c for c in self.goal if c.is_primitive), key=constraint_key)
        store = store_from(prims)
        if store is None:
            self._log("root: primitive store inconsistent")
            return FAILS
        store_vars = frozenset(constraints_vars(prims))
        root = _Entry(
            0,
            atoms,
            store,
            frozenset(constraints_vars(self.goal)),
            self.depth,
            store_vars=store_vars,
            functor_key=tuple(sorted(a.functor for a in atoms)),
            subsumable=store_vars <= constraints_vars(atoms),
        )
        self.entries.append(root)
        if self.trace:
            self._log(f"call: {self._fmt_entry(root)}")

        work: list[_Entry] = [root]
        answer_work: list[tuple[_Entry, Answer]] = []
        steps = 0
        while work or answer_work:
            steps += 1
            if steps > 200_000:
                self.cap_exceeded = True
                break
            if mode == "exists" and root.answers:
                break
            while answer_work:
                entry, ans = answer_work.pop(0)
                for consumer, sigma in list(entry.consumers):
                    self._consume(consumer, ans, sigma, answer_work)
                if entry.parent is not None:
                    self._lift(entry.parent, ans, answer_work)
                if mode == "exists" and root.answers:
                    break
            if mode == "exists" and root.answers:
                break
            if work:
                entry = work.pop(0)
                self._expand(entry, work, answer_work)

        if root.answers:
            if mode == "exists":
                return Answers((root.answers[0],))
            if self.depth_exceeded or self.cap_exceeded:
                return DEPTH_EXCEEDED
            return Answers(tuple(sorted(root.answers, key=_answer_key)))
        if self.depth_exceeded or self.cap_exceeded:
            return DEPTH_EXCEEDED
        return FAILS

    # -- node processing --------------------------------------------------

    def _fmt_entry(self, e: _Entry) -> str:
        parts = [format_constraint(c) for c in e.atoms]
        parts += [format_constraint(c) for c in sorted(e.store.constraints, key=constraint_key)]
        return ", ".join(parts)

    def _expand(self, entry: _Entry, work: list[_Entry], answer_work: list):
        if entry.expanded:
            return
        entry.expanded = True
        if not entry.atoms:
            self._emit_answer(entry, answer_work)
            return
        if self.tabling:
            producer_sigma = self._find_producer(entry)
            if producer_sigma is not None:
                producer, sigma = producer_sigma
                self._log(
                    f"suspend: entry {entry.idx} consumes entry {producer.idx}"
                )
                producer.consumers.append((entry, sigma))
                for ans in list(producer.answers):
                    self._consume(entry, ans, sigma, answer_work)
                return
        if entry.depth <= 0:
            self.depth_exceeded = True
            self._log(f"depth: entry {entry.idx} exceeded the bound")
            return
        selected = entry.atoms[0]
        rest = entry.atoms[1:]
        clauses = self.program.predicates.get((selected.functor, len(selected.args)), [])
        for clause in clauses:
            child = self._resolve(entry, selected, rest, clause)
            if child is not None:
                self.entries.append(child)
                work.append(child)

    def _resolve(
        self, entry: _Entry, selected: Constraint, rest: tuple, clause: Clause
    ) -> Optional[_Entry]:
        c_head, c_prim, c_user, variables = _clause_parts(clause)
        ren = {v: fresh_var() for v in variables}
        head = rename_constraint(ren, c_head)
        body_user = frozenset(rename_constraint(ren, c) for c in c_user)
        body_prim = frozenset(rename_constraint(ren, c) for c in c_prim)
        batch = [Constraint("eq", (sa, ha)) for sa, ha in zip(selected.args, head.args)]
        batch.extend(sorted(body_prim, key=constraint_key))
        store = assert_many(entry.store, batch)
        if store is None:
            if self.trace:
                self._log(
                    f"resolve: entry {entry.idx} x {format_constraint(clause.head)} -> false"
                )
            return None
        atoms = tuple(sorted((*rest, *body_user), key=constraint_key))
        store_vars = (
            entry.store_vars
            | constraints_vars([selected, head])
            | constraints_vars(body_prim)
        )
        atom_vars = frozenset(constraints_vars(atoms))
        child = _Entry(
            len(self.entries),
            atoms,
            store,
            atom_vars | store_vars,
            entry.depth - 1,
            store_vars=frozenset(store_vars),
            functor_key=tuple(sorted(a.functor for a in atoms)),
            subsumable=store_vars <= atom_vars,
            parent=entry,
        )
        if self.trace:
            self._log(
                f"resolve: entry {entry.idx} x {format_constraint(clause.head)}"
                f" -> entry {child.idx}: {self._fmt_entry(child)}"
            )
        return child

    def _find_producer(self, entry: _Entry) -> Optional[tuple[_Entry, Subst]]:
        """Scan earlier entries for one whose call subsumes this one.

        Same logic as :func:`call_subsumes`, but driven by the per-entry
        caches so a long chain of non-subsuming calls stays cheap.
        """
        c_atoms = frozenset(entry.atoms)
        single = len(entry.atoms) == 1
        for cand in self.entries:
            if cand is entry or not cand.subsumable or not cand.atoms:
                continue
            if cand.functor_key != entry.functor_key:
                continue
            for sigma in match_into(cand.atoms, entry.atoms):
                # With one atom apiece the matcher's image is necessarily
                # the whole current call; larger calls need the check.
                if not single and match_subst_constraints(sigma, cand.atoms) != c_atoms:
                    continue
                if any(v not in sigma for v in cand.store_vars):
                    continue
                if all(
                    entails(entry.store, match_subst_constraint(sigma, c))
                    for c in cand.store.constraints
                ):
                    return cand, sigma
        return None

    # -- answers ----------------------------------------------------------

    def _project(self, entry: _Entry, store: Store) -> Optional[Answer]:
        return _project_store(store, entry.variables)

    def _add_answer(self, entry: _Entry, ans: Answer, answer_work: list) -> None:
        key = _answer_canonical(ans, entry.variables)
        if key in entry.answer_keys:
            return
        if len(entry.answers) >= self.answer_cap:
            self.cap_exceeded = True
            return
        entry.answer_keys.add(key)
        entry.answers.append(ans)
        self._log(
            f"answer: entry {entry.idx}: {format_constraints(ans)}"
        )
        answer_work.append((entry, ans))

    def _emit_answer(self, entry: _Entry, answer_work: list):
        ans = self._project(entry, entry.store)
        if ans is not None:
            self._add_answer(entry, ans, answer_work)

    def _lift(self, parent: _Entry, ans: Answer, answer_work: list):
        # A child answer is an answer of the parent once reprojected onto
        # the parent's variable set.
        ans = _eliminate_locals(ans, parent.variables)
        locals_ = constraints_vars(ans) - parent.variables
        ren = renaming_for(locals_, prefix="_L")
        self._add_answer(parent, subst_constraints(ren, ans), answer_work)

    def _consume(self, consumer: _Entry, ans: Answer, sigma: Subst, answer_work: list):
        local_ren = renaming_for(constraints_vars(ans) - set(sigma), prefix="_L")
        mapped = match_subst_constraints(sigma, subst_constraints(local_ren, ans))
        store = assert_many(consumer.store, sorted(mapped, key=constraint_key))
        if store is None:
            return
        projected = self._project(consumer, store)
        if projected is not None:
            self._add_answer(consumer, projected, answer_work)


def _project_store(store: Store, variables: frozenset[Var]) -> Answer:
    """Answer constraint set of a leaf store, restricted to the given
    variables where possible; remaining locals are renamed for readability."""
    simplified = _eliminate_locals(solver.simplify(store), variables)
    locals_ = constraints_vars(simplified) - variables
    ren = renaming_for(locals_, prefix="_L")
    return subst_constraints(ren, simplified)


def _eliminate_locals(cs: Iterable[Constraint], keep: frozenset[Var]) -> frozenset[Constraint]:
    """Substitute away local variables bound by an equality to a term not
    containing them; then drop constraints that became redundant."""
    current = set(cs)
    changed = True
    while changed:
        changed = False
        for c in sorted(current, key=constraint_key):
            if c.functor != "eq":
                continue
            l, r = c.args
            for a, b in ((l, r), (r, l)):
                if isinstance(a, Var) and a not in keep and not occurs_in(a, b):
                    current.remove(c)
                    current = {subst_constraint({a: b}, x) for x in current}
                    changed = True
                    break
            if changed:
                break
    store = store_from(sorted(current, key=constraint_key))
    if store is None:
        # Elimination cannot introduce inconsistency; be safe anyway.
        return frozenset(current)
    return solver.simplify(store)


def _answer_key(a: Answer) -> tuple:
    return tuple(sorted(constraint_key(c) for c in a))


def _answer_canonical(a: Answer, keep: frozenset[Var]) -> tuple:
    # Canonicalize local variables while keeping the call variables fixed.
    mapping: Subst = {}
    ordered = sorted(a, key=constraint_key)
    for c in ordered:
        for v in sorted(constraints_vars([c]), key=lambda v: v.id):
            if v not in keep and v not in mapping:
                mapping[v] = Var(f"_C{len(mapping) + 1}")
    return tuple(sorted(constraint_key(subst_constraint(mapping, c)) for c in ordered))


@lru_cache(maxsize=None)
def _clause_parts(clause: Clause) -> tuple:
    body_prim = tuple(sorted(clause.body_prim, key=constraint_key))
    body_user = tuple(sorted(clause.body_user, key=constraint_key))
    variables = tuple(
        sorted(
            constraints_vars([clause.head, *body_prim, *body_user]),
            key=lambda v: v.id,
        )
    )
    return clause.head, body_prim, body_user, variables


def _resolve_seq(
    selected: Constraint, rest: tuple, clause: Clause
) -> tuple[Constraint, ...]:
    """Resolvent sequence obtained by replacing the selected atom with a
    renamed clause body: head equalities, then the body constraints."""
    head, body_prim, body_user, variables = _clause_parts(clause)
    ren = {v: fresh_var() for v in variables}
    head = rename_constraint(ren, head)
    return (
        tuple(Constraint("eq", (sa, ha)) for sa, ha in zip(selected.args, head.args))
        + tuple(rename_constraint(ren, c) for c in body_prim)
        + tuple(rename_constraint(ren, c) for c in body_user)
        + rest
    )


def _classical(
    program: Program,
    goal: Goal,
    depth: int,
    mode: str,
    answer_cap: int,
    trace: Optional[Callable[[str], None]],
) -> Outcome:
    """Depth-first left-to-right resolution over an ordered resolvent; no
    tabling, so recursion is unfolded until the depth bound.

    The resolvent semantics keep the goal's own primitive constraints after
    its atoms, so they reach the store only once the atoms are resolved and
    cannot stop recursive unfolding. For speed they are still asserted
    eagerly into a shadow store: a branch whose shadow store turns
    inconsistent cannot produce answers and is cut. The cut branch may hide
    an infinite classical subtree, so when the verdict comes down to
    fails-versus-depth-exceeded those branches are re-expanded without the
    goal constraints just to probe finiteness.
    """
    atoms = tuple(sorted((c for c in goal if not c.is_primitive), key=constraint_key))
    prims = tuple(sorted((c for c in goal if c.is_primitive), key=constraint_key))
    variables = frozenset(constraints_vars(goal))
    shadow_root = assert_many(Store(), prims)
    if shadow_root is None:
        # No leaf can be consistent; only the tree shape remains to decide.
        finite = _classical_finite(program, Store(), atoms, depth, trace)
        return FAILS if finite else DEPTH_EXCEEDED
    answers: list[Answer] = []
    answer_keys: set = set()
    depth_exceeded = False
    # Only the shadow store rides along; the classical store of a branch is
    # its constraint list minus the goal primitives seeded at the root, so
    # it is rebuilt on demand at the rare prune events.
    n_seeded = len(shadow_root.constraints)
    stack: list[tuple[Store, tuple[Constraint, ...], int]] = [
        (shadow_root, atoms, depth)
    ]
    pruned: list[tuple[Store, tuple[Constraint, ...], int]] = []
    steps = 0
    while stack:
        steps += 1
        if steps > 200_000:
            depth_exceeded = True
            break
        shadow, seq, d = stack.pop()
        split = 0
        while split < len(seq) and seq[split].is_primitive:
            split += 1
        if split:
            batch = seq[:split]
            prev = shadow
            shadow = assert_many(shadow, batch)
            seq = seq[split:]
            if shadow is None:
                if not seq:
                    # A leaf asserts the goal primitives too, so this is a
                    # plain classical failure.
                    if trace:
                        trace("classical: leaf inconsistent")
                    continue
                store = store_from(prev.constraints[n_seeded:] + list(batch))
                if store is None:
                    if trace:
                        trace("classical: branch inconsistent")
                    continue
                # Consistent classically, but no answer can follow.
                pruned.append((store, seq, d))
                if trace:
                    trace("classical: branch cut, no consistent leaf below")
                continue
        if not seq:
            # The shadow store holds the leaf constraints plus the goal's
            # trailing primitives, exactly what the leaf would assert.
            ans = _project_store(shadow, variables)
            key = _answer_canonical(ans, variables)
            if key in answer_keys:
                continue
            answer_keys.add(key)
            answers.append(ans)
            if trace:
                trace(f"classical answer: {format_constraints(ans)}")
            if mode == "exists":
                return Answers((ans,))
            if len(answers) >= answer_cap:
                depth_exceeded = True
                break
            continue
        if d <= 0:
            depth_exceeded = True
            if trace:
                trace("classical: depth bound exceeded")
            continue
        selected, rest = seq[0], seq[1:]
        clauses = program.predicates.get((selected.functor, len(selected.args)), [])
        children = [
            (shadow, _resolve_seq(selected, rest, clause), d - 1)
            for clause in clauses
        ]
        # Reversed so the textually first clause is explored first.
        stack.extend(reversed(children))
    if not depth_exceeded:
        for store, seq, d in pruned:
            if not _classical_finite(program, store, seq, d, trace):
                depth_exceeded = True
                break
    if answers:
        if depth_exceeded:
            return DEPTH_EXCEEDED
        return Answers(tuple(sorted(answers, key=_answer_key)))
    if depth_exceeded:
        return DEPTH_EXCEEDED
    return FAILS


def _classical_finite(
    program: Program,
    store: Store,
    seq: tuple[Constraint, ...],
    depth: int,
    trace: Optional[Callable[[str], None]],
) -> bool:
    """Whether the classical tree under the given resolvent is finite
    within the depth budget; answers are irrelevant here."""
    stack = [(store, seq, depth)]
    steps = 0
    while stack:
        steps += 1
        if steps > 200_000:
            return False
        store, seq, d = stack.pop()
        split = 0
        while split < len(seq) and seq[split].is_primitive:
            split += 1
        if split:
            store = assert_many(store, seq[:split])
            if store is None:
                continue
            seq = seq[split:]
        if not seq:
            continue
        if d <= 0:
            if trace:
                trace("classical: cut branch runs into the depth bound")
            return False
        selected, rest = seq[0], seq[1:]
        clauses = program.predicates.get((selected.functor, len(selected.args)), [])
        stack.extend(
            (store, _resolve_seq(selected, rest, clause), d - 1)
            for clause in clauses
        )
    return True


def evaluate(
    program: Program,
    goal: Goal,
    depth: int = 200,
    mode: str = "exists",
    tabling: bool = True,
    answer_cap: int = 512,
    trace: Optional[Callable[[str], None]] = None,
) -> Outcome:
    """Evaluate a goal against a program.

    mode="exists" returns FAILS, Answers with one witness, or
    DEPTH_EXCEEDED; mode="all_answers" returns the saturated answer set or
    DEPTH_EXCEEDED when the bound or the answer cap was hit. With
    ``tabling=False`` the classical ordered depth-first scheme is used
    instead of the tabled forest.
    """
    if not tabling:
        return _classical(program, goal, depth, mode, answer_cap, trace)
    return Evaluation(program, goal, depth, tabling, answer_cap, trace).run(mode)
