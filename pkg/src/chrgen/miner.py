"""Mining of failure, propagation, splitting, and general propagation rules,
plus redundancy simplification of the resulting rule set.

The primitive miner enumerates candidate left hand sides smallest first,
prunes supersets of failing ones, and asks the tabled engine one
fail/succeed question per (lhs, rhs-candidate) pair. The general miner
replaces the negated-goal test by an answer-set comparison so user-defined
constraints may appear on the right hand side.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from . import solver
from .program import CandidateSpec, Program, format_constraints
from .resolution import FAILS, Answers, DepthExceeded, Fails, evaluate
from .rules import Rule, RuleSet
from .solver import BlowupExceeded, dnf_satisfiable, negate, store_from
from .terms import (
    Constraint,
    canonical_key,
    constraint_key,
    constraints_vars,
    match_into,
    match_subst_constraints,
    renaming_for,
    subst_constraint,
    subst_constraints,
)


@dataclass
class MinerOptions:
    depth: int = 200
    tabling: bool = True
    opt1: bool = True  # skip trivially redundant failure rules
    opt2: bool = True  # skip lhs supersets of C1+{d} once C1 ==> d exists
    opt3: bool = True  # reuse failed goal evaluations (contrapositive rules)
    dnf_cap: int = 10_000
    answer_cap: int = 64
    trace: Optional[object] = None


@dataclass
class MinerStats:
    evaluations: int = 0
    depth_exceeded: int = 0
    skipped_opt1: int = 0
    skipped_opt2: int = 0
    skipped_opt3: int = 0
    skipped_redundant_splitting: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class _Engine:
    """Shared goal-evaluation plumbing with a verdict cache."""

    def __init__(self, program: Program, opts: MinerOptions):
        self.program = program
        self.opts = opts
        self.stats = MinerStats()
        self._fail_cache: dict[frozenset, object] = {}

    def goal_fails(self, constraints: frozenset, cacheable: bool = True):
        """Outcome of an exists-mode evaluation, cached per goal set."""
        key = constraints
        if cacheable and key in self._fail_cache:
            self.stats.skipped_opt3 += 1
            return self._fail_cache[key]
        if store_from([c for c in constraints if c.is_primitive]) is None:
            # The primitive part alone is unsatisfiable; no resolution needed.
            if cacheable and self.opts.opt3:
                self._fail_cache[key] = FAILS
            return FAILS
        outcome = evaluate(
            self.program,
            constraints,
            depth=self.opts.depth,
            mode="exists",
            tabling=self.opts.tabling,
            trace=self.opts.trace,
        )
        self.stats.evaluations += 1
        if isinstance(outcome, DepthExceeded):
            self.stats.depth_exceeded += 1
        if cacheable and self.opts.opt3:
            self._fail_cache[key] = outcome
        return outcome

    def goal_answers(self, constraints: frozenset):
        outcome = evaluate(
            self.program,
            constraints,
            depth=self.opts.depth,
            mode="all_answers",
            tabling=self.opts.tabling,
            answer_cap=self.opts.answer_cap,
            trace=self.opts.trace,
        )
        self.stats.evaluations += 1
        if isinstance(outcome, DepthExceeded):
            self.stats.depth_exceeded += 1
        return outcome


def _ordered_subsets(cands: tuple[Constraint, ...]) -> list[frozenset]:
    """All subsets of the candidate list, cardinality ascending, ties in
    canonical lexicographic order (compatible with subset partial order)."""
    out = []
    for size in range(len(cands) + 1):
        layer = [frozenset(c) for c in itertools.combinations(cands, size)]
        layer.sort(key=canonical_key)
        out.extend(layer)
    return out


def mine_primitive(
    program: Program,
    spec: CandidateSpec,
    opts: Optional[MinerOptions] = None,
    engine: Optional[_Engine] = None,
) -> RuleSet:
    opts = opts or MinerOptions()
    engine = engine or _Engine(program, opts)
    rs = RuleSet()
    base = spec.base_lhs
    cand_lhs_set = frozenset(spec.cand_lhs)

    failure_filters: list[frozenset] = []  # emitted failure lhs (candidate part)
    silent_failures: list[frozenset] = []  # opt1: known failing, never emitted
    opt2_blocks: list[tuple[frozenset, Constraint]] = []

    for c_lhs in _ordered_subsets(spec.cand_lhs):
        if any(f <= c_lhs for f in failure_filters):
            continue
        if opts.opt1 and any(f <= c_lhs for f in silent_failures):
            engine.stats.skipped_opt1 += 1
            continue
        if opts.opt2 and any(c1 < c_lhs and d in c_lhs for c1, d in opt2_blocks):
            engine.stats.skipped_opt2 += 1
            continue
        lhs = base | c_lhs
        outcome = engine.goal_fails(lhs)
        if isinstance(outcome, Fails):
            failure_filters.append(c_lhs)
            if opts.opt1 and store_from(c_lhs) is None:
                # The candidate part alone is unsatisfiable: the failure
                # rule would be trivially redundant. Keep the filter only.
                engine.stats.skipped_opt1 += 1
                continue
            rs.add(
                Rule(
                    "failure",
                    lhs,
                    (),
                    (f"goal failed: {format_constraints(lhs)}",),
                )
            )
            continue
        if isinstance(outcome, DepthExceeded):
            continue
        rhs: list[Constraint] = []
        notes: list[str] = []
        for d in spec.cand_rhs:
            if d in lhs:
                # Trivially valid; only worth noting that C+{not(d)} would
                # be a trivially redundant failure rule.
                if d.is_primitive and negate(d) in cand_lhs_set:
                    silent_failures.append(c_lhs | {negate(d)})
                continue
            goal = lhs | {negate(d)}
            d_outcome = engine.goal_fails(goal)
            if isinstance(d_outcome, Fails):
                rhs.append(d)
                notes.append(f"goal failed: {format_constraints(goal)}")
                if negate(d) in cand_lhs_set:
                    # The later lhs C+{not(d)} would only yield a trivially
                    # redundant failure rule.
                    silent_failures.append(c_lhs | {negate(d)})
                if d in cand_lhs_set:
                    opt2_blocks.append((c_lhs, d))
        if rhs:
            rs.add(Rule("propagation", lhs, tuple(rhs), tuple(notes)))
    rs.stats = engine.stats.as_dict()
    return rs


def mine_splitting(
    program: Program,
    spec: CandidateSpec,
    prior: Optional[RuleSet] = None,
    opts: Optional[MinerOptions] = None,
    engine: Optional[_Engine] = None,
) -> RuleSet:
    """Primitive splitting rules lhs ==> d1 ; d2, skipping pairs already
    implied by a prior propagation rule (the validity test itself is
    avoided in that case)."""
    opts = opts or MinerOptions()
    engine = engine or _Engine(program, opts)
    rs = RuleSet()
    base = spec.base_lhs
    prior_rules = list(prior.rules) if prior else []
    failure_filters: list[frozenset] = []

    def redundant(lhs: frozenset, d1: Constraint, d2: Constraint) -> bool:
        for r in prior_rules:
            if r.kind in ("propagation", "simplification") and r.lhs <= lhs:
                if d1 in r.rhs or d2 in r.rhs:
                    return True
            if r.kind == "failure" and r.lhs <= lhs:
                return True
        return False

    for c_lhs in _ordered_subsets(spec.cand_lhs):
        if any(f <= c_lhs for f in failure_filters):
            continue
        lhs = base | c_lhs
        if any(r.kind == "failure" and r.lhs <= lhs for r in prior_rules):
            continue
        for d1, d2 in itertools.combinations(spec.cand_rhs, 2):
            if d1 in lhs or d2 in lhs:
                continue
            if redundant(lhs, d1, d2):
                engine.stats.skipped_redundant_splitting += 1
                continue
            goal = lhs | {negate(d1), negate(d2)}
            if not solver.satisfiable([negate(d1), negate(d2)]):
                # not(d1) and not(d2) contradict each other outright: the
                # split d1 ; d2 is a tautology, not worth emitting.
                continue
            outcome = engine.goal_fails(goal)
            if isinstance(outcome, Fails):
                rs.add(
                    Rule(
                        "splitting",
                        lhs,
                        (d1, d2),
                        (f"goal failed: {format_constraints(goal)}",),
                    )
                )
    rs.stats = engine.stats.as_dict()
    return rs


def mine_general(
    program: Program,
    spec: CandidateSpec,
    opts: Optional[MinerOptions] = None,
    engine: Optional[_Engine] = None,
) -> RuleSet:
    """Propagation rules whose rhs may contain user-defined constraints,
    validated by comparing the answer sets of lhs and lhs+{d}."""
    opts = opts or MinerOptions()
    engine = engine or _Engine(program, opts)
    rs = RuleSet()
    base = spec.base_lhs
    failure_filters: list[frozenset] = []
    answers_cache: dict[frozenset, object] = {}

    def all_answers(goal: frozenset):
        if goal not in answers_cache:
            answers_cache[goal] = engine.goal_answers(goal)
        return answers_cache[goal]

    for c_lhs in _ordered_subsets(spec.cand_lhs):
        if any(f <= c_lhs for f in failure_filters):
            continue
        lhs = base | c_lhs
        outcome = engine.goal_fails(lhs)
        if isinstance(outcome, Fails):
            rs.add(Rule("failure", lhs, (), (f"goal failed: {format_constraints(lhs)}",)))
            failure_filters.append(c_lhs)
            continue
        if isinstance(outcome, DepthExceeded):
            continue
        rhs: list[Constraint] = []
        notes: list[str] = []
        for d in spec.cand_rhs:
            if d in lhs:
                continue
            valid = None
            if d.is_primitive:
                neg_outcome = engine.goal_fails(lhs | {negate(d)})
                if isinstance(neg_outcome, Fails):
                    valid = True
                    notes.append(
                        f"goal failed: {format_constraints(lhs | {negate(d)})}"
                    )
                elif isinstance(neg_outcome, Answers):
                    valid = False
                # DepthExceeded: fall through to the answer-set test.
            if valid is None:
                valid = _answer_set_valid(all_answers, lhs, d, opts, notes)
            if valid:
                rhs.append(d)
        if rhs:
            rs.add(Rule("propagation", lhs, tuple(rhs), tuple(notes)))
    rs.stats = engine.stats.as_dict()
    return rs


def _answer_set_valid(all_answers, lhs: frozenset, d: Constraint, opts, notes) -> bool:
    pos_out = all_answers(lhs)
    if not isinstance(pos_out, (Answers, Fails)):
        return False
    ext_out = all_answers(lhs | {d})
    if not isinstance(ext_out, (Answers, Fails)):
        return False
    pos = list(pos_out.answers) if isinstance(pos_out, Answers) else []
    ext = list(ext_out.answers) if isinstance(ext_out, Answers) else []
    try:
        sat = dnf_satisfiable(pos, ext, cap=opts.dnf_cap)
    except BlowupExceeded:
        return False
    if not sat:
        notes.append(
            f"answer sets coincide: {format_constraints(lhs)} vs"
            f" {format_constraints(lhs | {d})}"
        )
        return True
    return False


# ---------------------------------------------------------------------------
# Redundancy simplification
# ---------------------------------------------------------------------------


def _closure(lhs: frozenset, kept: Iterable[Rule], rounds: int = 10) -> Optional[frozenset]:
    """Saturate a constraint set under the kept rules (propagation reading).
    Returns None when the closure turns inconsistent."""
    current = set(lhs)
    # Rename each rule apart so its variables cannot collide with the set
    # being saturated.
    renamed: list[Rule] = []
    for r in kept:
        if r.kind == "splitting":
            continue
        ren = renaming_for(constraints_vars([*r.lhs, *r.rhs]), prefix="_S")
        renamed.append(
            Rule(
                r.kind,
                subst_constraints(ren, r.lhs),
                tuple(subst_constraint(ren, c) for c in r.rhs),
                r.provenance,
            )
        )
    for _ in range(rounds):
        added = False
        for r in renamed:
            for sigma in match_into(sorted(r.lhs, key=constraint_key), current):
                if r.kind == "failure":
                    return None
                for c in match_subst_constraints(sigma, r.rhs):
                    # Skip rhs constraints with unbound local variables; they
                    # carry only existential information.
                    if c not in current:
                        current.add(c)
                        added = True
                break  # one matcher per rule per round keeps this bounded
        if store_from([c for c in current if c.is_primitive]) is None:
            return None
        if not added or len(current) > 200:
            break
    return frozenset(current)


def simplify_ruleset(rs: RuleSet) -> RuleSet:
    """Order rules most-general-lhs first, simplify every rhs against the
    primitive solver and the already-kept rules, and drop rules whose rhs
    becomes empty or whose lhs is inconsistent with the kept rules."""
    ordered = sorted(rs.rules, key=Rule.sort_key)
    kept: list[Rule] = []
    out = RuleSet(stats=dict(rs.stats))
    for rule in ordered:
        closure = _closure(rule.lhs, kept)
        if closure is None:
            continue  # lhs unsatisfiable given kept rules: rule is vacuous
        if rule.kind == "failure":
            out.add(rule)
            kept.append(rule)
            continue
        if rule.kind == "splitting":
            if any(d in closure for d in rule.rhs):
                continue
            ctx = store_from([c for c in closure if c.is_primitive])
            if ctx is not None and any(
                d.is_primitive and solver.entails(ctx, d) for d in rule.rhs
            ):
                continue
            out.add(rule)
            kept.append(rule)
            continue
        rhs = _simplify_rhs(rule, closure)
        if not rhs:
            continue
        new_rule = Rule(rule.kind, rule.lhs, rhs, rule.provenance)
        if out.add(new_rule):
            kept.append(new_rule)
    return out


def _simplify_rhs(rule: Rule, closure: frozenset) -> tuple[Constraint, ...]:
    ctx_prims = [c for c in closure if c.is_primitive]
    remaining = sorted(set(rule.rhs), key=constraint_key)
    kept: list[Constraint] = []
    for i, c in enumerate(remaining):
        others = kept + remaining[i + 1 :]
        if not c.is_primitive:
            if c in closure:
                continue
            kept.append(c)
            continue
        base = store_from(ctx_prims + [x for x in others if x.is_primitive])
        if base is not None and solver.entails(base, c):
            continue
        kept.append(c)
    # Restore the original rhs order for the survivors.
    order = {constraint_key(c): i for i, c in enumerate(rule.rhs)}
    kept.sort(key=lambda c: order.get(constraint_key(c), len(order)))
    return tuple(kept)
