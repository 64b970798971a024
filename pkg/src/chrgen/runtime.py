"""Minimal CHR / CHR-or fixpoint interpreter for validating generated
solvers on ground and partially-ground goals.

Matching is naive: every injective assignment of rule heads to active user
constraints is tried, head arguments are matched against the primitive
store's representatives, and guards must be entailed by the store. A
propagation history prevents a propagation rule from refiring on the same
constraint tuple. Splitting bodies fork the state; the run returns every
consistent leaf.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .emit import ChrRule
from .solver import Store, assert_constraint, entails, store_from
from .terms import (
    Constraint,
    Subst,
    constraint_key,
    constraints_vars,
    match_subst_constraint,
    match_term,
    renaming_for,
    subst_constraint,
)


class StepLimitExceeded(Exception):
    pass


@dataclass
class State:
    """One branch of a CHR-or execution."""

    user: dict[int, Constraint]  # id -> active user constraint
    store: Store
    history: set[tuple]  # (rule index, matched constraint ids)
    next_id: int

    def copy(self) -> "State":
        return State(dict(self.user), self.store.copy(), set(self.history), self.next_id)

    @property
    def primitive_constraints(self) -> frozenset[Constraint]:
        return frozenset(self.store.constraints)

    @property
    def user_constraints(self) -> frozenset[Constraint]:
        return frozenset(self.user.values())

    def entails_constraint(self, c: Constraint) -> bool:
        return entails(self.store, c)


def _match_heads(rule: ChrRule, state: State) -> Iterable[tuple[tuple[int, ...], Subst]]:
    """All (constraint ids, matcher) pairs assigning the rule heads to
    distinct active user constraints, modulo store equalities."""
    ids = sorted(state.user)
    for combo in itertools.permutations(ids, len(rule.heads)):
        sigma: Optional[Subst] = {}
        for head, cid in zip(rule.heads, combo):
            c = state.user[cid]
            if c.functor != head.functor or len(c.args) != len(head.args):
                sigma = None
                break
            for pat, arg in zip(head.args, c.args):
                sigma = match_term(pat, state.store.find(arg), sigma)
                if sigma is None:
                    break
            if sigma is None:
                break
        if sigma is not None:
            yield combo, sigma


def _fire(rule: ChrRule, idx: int, state: State) -> Optional[list[State]]:
    """Try to fire one rule once; None when nothing matched."""
    for combo, sigma in _match_heads(rule, state):
        if rule.kind in ("propagation", "splitting", "failure"):
            key = (idx, combo)
            if key in state.history:
                continue
        if not all(
            entails(state.store, match_subst_constraint(sigma, g)) for g in rule.guard
        ):
            continue
        branches: list[State] = []
        for body in rule.bodies or ((),):
            branch = state.copy()
            if rule.kind == "simplification":
                for cid in combo:
                    del branch.user[cid]
            else:
                branch.history.add((idx, combo))
            if rule.kind == "failure":
                continue  # matched lhs with guard entailed: inconsistent leaf
            ok = True
            local_ren = renaming_for(
                constraints_vars(body) - set(sigma), prefix="_R"
            )
            for c in body:
                inst = match_subst_constraint(sigma, subst_constraint(local_ren, c))
                if inst.is_primitive:
                    new_store = assert_constraint(branch.store, inst)
                    if new_store is None:
                        ok = False
                        break
                    branch.store = new_store
                else:
                    if inst not in branch.user_constraints:
                        branch.user[branch.next_id] = inst
                        branch.next_id += 1
            if ok:
                branches.append(branch)
        return branches
    return None


def run(
    chr_rules: list[ChrRule], goal: Iterable[Constraint], step_limit: int = 10_000
) -> list[State]:
    """Run the encoded rules on a goal to fixpoint; returns the consistent
    leaf states (empty when every branch failed)."""
    goal = sorted(goal, key=constraint_key)
    store = store_from([c for c in goal if c.is_primitive])
    if store is None:
        return []
    users = {i: c for i, c in enumerate(c for c in goal if not c.is_primitive)}
    initial = State(users, store, set(), len(users))
    leaves: list[State] = []
    pending = [initial]
    steps = 0
    while pending:
        state = pending.pop()
        fired = False
        for idx, rule in enumerate(chr_rules):
            steps += 1
            if steps > step_limit:
                raise StepLimitExceeded(f"exceeded {step_limit} rule-match steps")
            branches = _fire(rule, idx, state)
            if branches is not None:
                pending.extend(branches)
                fired = True
                break
        if not fired:
            leaves.append(state)
    return leaves
