"""Minimal necessary and minimal sufficient cause-set search.

Subsets are enumerated bottom-up: ascending cardinality, lexicographic by
cause index within a cardinality.  A candidate that contains an already
found set is skipped, which is sound exactly when the achievement oracle
is monotone (adding causes never destroys achievement).  Monotonicity is
checked rather than assumed: any answer contradicting it is recorded and
disables pruning for the remainder of the run.

A removal set N is necessary when judging universe minus N fails; for a
monotone oracle the minimal necessary sets are precisely the minimal
transversals (hitting sets) of the minimal sufficient family, which
analyze() cross-checks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Iterable, Sequence

from .oracle import CachedAchievementJudge, Oracle
from .store import Cause, Goal, TheoryStore

Judge = Callable[[frozenset[str]], bool]

BRUTE_FORCE_LIMIT = 20


class UniverseTooLarge(ValueError):
    """Exhaustive enumeration refused beyond 2**20 subsets."""


@dataclass(frozen=True)
class CauseSetFamily:
    """A family of subsets over an ordered universe of cause ids.

    Sets are stored as sorted index tuples in canonical order (by
    cardinality, then lexicographically), duplicate-free.  Families
    produced by the minimal-set searches are antichains.
    """

    universe: tuple[str, ...]
    sets: tuple[tuple[int, ...], ...]

    @classmethod
    def build(
        cls, universe: Sequence[str], sets: Iterable[Iterable[int]]
    ) -> "CauseSetFamily":
        canonical = sorted({tuple(sorted(set(s))) for s in sets}, key=lambda t: (len(t), t))
        return cls(tuple(universe), tuple(canonical))

    @classmethod
    def from_id_sets(
        cls, universe: Sequence[str], sets: Iterable[Iterable[str]]
    ) -> "CauseSetFamily":
        index = {cause_id: i for i, cause_id in enumerate(universe)}
        return cls.build(universe, ([index[c] for c in s] for s in sets))

    def id_sets(self) -> tuple[frozenset[str], ...]:
        return tuple(frozenset(self.universe[i] for i in s) for s in self.sets)

    def is_antichain(self) -> bool:
        as_sets = [set(s) for s in self.sets]
        return not any(
            a < b or b < a for i, a in enumerate(as_sets) for b in as_sets[i + 1 :]
        )

    def to_json(self) -> list[list[str]]:
        return [[self.universe[i] for i in s] for s in self.sets]


@dataclass(frozen=True)
class MonotonicityViolation:
    kind: str
    witness_small: tuple[str, ...]
    witness_large: tuple[str, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "witness_small": list(self.witness_small),
            "witness_large": list(self.witness_large),
        }


class MonotoneMonitor:
    """Cross-checks every observed answer against sets found so far.

    A failing answer on a superset of a known sufficient set, or an
    achieving answer on a set disjoint from a known necessary removal
    set, contradicts monotonicity.  Either observation disables superset
    pruning for the rest of the run.
    """

    def __init__(self, universe: Sequence[str]):
        self.universe = frozenset(universe)
        self.sufficient: list[frozenset[str]] = []
        self.necessary: list[frozenset[str]] = []
        self.violations: list[MonotonicityViolation] = []

    @property
    def pruning_enabled(self) -> bool:
        return not self.violations

    def observe(self, subset: frozenset[str], achieves: bool) -> None:
        if achieves:
            for removal in self.necessary:
                if not (subset & removal):  # subset survives the breaking removal
                    self.violations.append(
                        MonotonicityViolation(
                            "achieving-subset-of-failing-set",
                            tuple(sorted(subset)),
                            tuple(sorted(self.universe - removal)),
                        )
                    )
        else:
            for sufficient in self.sufficient:
                if sufficient <= subset:
                    self.violations.append(
                        MonotonicityViolation(
                            "failing-superset-of-sufficient-set",
                            tuple(sorted(sufficient)),
                            tuple(sorted(subset)),
                        )
                    )


@dataclass
class SearchOutcome:
    family: CauseSetFamily
    violations: tuple[MonotonicityViolation, ...] = ()


def _subsets_ascending(n: int) -> Iterable[tuple[int, ...]]:
    for size in range(n + 1):
        yield from combinations(range(n), size)


def minimal_sufficient_search(
    universe: Sequence[str], judge: Judge, monitor: MonotoneMonitor | None = None
) -> SearchOutcome:
    """All minimal sufficient cause sets, smallest first.

    The empty set is tested first; if it achieves, the family is {{}} and
    every other candidate is pruned as its superset.
    """
    if not universe:
        raise ValueError("universe must be nonempty")
    universe = tuple(universe)
    monitor = monitor if monitor is not None else MonotoneMonitor(universe)
    found: list[set[int]] = []
    for combo in _subsets_ascending(len(universe)):
        candidate = set(combo)
        if monitor.pruning_enabled and any(f <= candidate for f in found):
            continue
        ids = frozenset(universe[i] for i in combo)
        achieves = judge(ids)
        monitor.observe(ids, achieves)
        if achieves and not any(f <= candidate for f in found):
            found.append(candidate)
            monitor.sufficient.append(ids)
    return SearchOutcome(
        CauseSetFamily.build(universe, found), tuple(monitor.violations)
    )


def minimal_necessary_search(
    universe: Sequence[str], judge: Judge, monitor: MonotoneMonitor | None = None
) -> SearchOutcome:
    """All minimal necessary removal sets, smallest first.

    N is necessary when judging universe minus N fails.  The empty removal
    is tested first: when the full set already fails the effect is
    unachievable and the family collapses to {{}}.
    """
    if not universe:
        raise ValueError("universe must be nonempty")
    universe = tuple(universe)
    monitor = monitor if monitor is not None else MonotoneMonitor(universe)
    found: list[set[int]] = []
    for combo in _subsets_ascending(len(universe)):
        removal = set(combo)
        if monitor.pruning_enabled and any(f <= removal for f in found):
            continue
        removal_ids = frozenset(universe[i] for i in combo)
        remaining = frozenset(universe) - removal_ids
        achieves = judge(remaining)
        monitor.observe(remaining, achieves)
        if not achieves and not any(f <= removal for f in found):
            found.append(removal)
            monitor.necessary.append(removal_ids)
    return SearchOutcome(
        CauseSetFamily.build(universe, found), tuple(monitor.violations)
    )


def find_minimal_sufficient_sets(universe: Sequence[str], judge: Judge) -> CauseSetFamily:
    return minimal_sufficient_search(universe, judge).family


def find_minimal_necessary_sets(universe: Sequence[str], judge: Judge) -> CauseSetFamily:
    return minimal_necessary_search(universe, judge).family


def brute_force_families(
    universe: Sequence[str], judge: Judge
) -> tuple[CauseSetFamily, CauseSetFamily]:
    """Reference search: evaluate every subset once, derive both antichains
    by definition, no pruning.  Returns (minimal_sufficient, minimal_necessary)."""
    universe = tuple(universe)
    if not universe:
        raise ValueError("universe must be nonempty")
    if len(universe) > BRUTE_FORCE_LIMIT:
        raise UniverseTooLarge(f"|universe| = {len(universe)} exceeds {BRUTE_FORCE_LIMIT}")
    answers: dict[tuple[int, ...], bool] = {}
    for combo in _subsets_ascending(len(universe)):
        answers[combo] = judge(frozenset(universe[i] for i in combo))

    sufficient: list[set[int]] = []
    for combo, achieves in answers.items():  # insertion order is ascending
        candidate = set(combo)
        if achieves and not any(f <= candidate for f in sufficient):
            sufficient.append(candidate)
    full = tuple(range(len(universe)))
    necessary: list[set[int]] = []
    for combo in _subsets_ascending(len(universe)):
        removal = set(combo)
        if any(f <= removal for f in necessary):
            continue
        remaining = tuple(i for i in full if i not in removal)
        if not answers[remaining]:
            necessary.append(removal)
    return (
        CauseSetFamily.build(universe, sufficient),
        CauseSetFamily.build(universe, necessary),
    )


def minimal_transversals(family: CauseSetFamily) -> CauseSetFamily:
    """All inclusion-minimal subsets of the universe hitting every member.

    For the empty family the empty set hits every member vacuously, so the
    result is {{}}; for a family containing the empty set no transversal
    exists and the result is empty.
    """
    members = [set(s) for s in family.sets]
    found: list[set[int]] = []
    for combo in _subsets_ascending(len(family.universe)):
        candidate = set(combo)
        if any(f <= candidate for f in found):
            continue
        if all(candidate & member for member in members):
            found.append(candidate)
    return CauseSetFamily.build(family.universe, found)


@dataclass(frozen=True)
class CauseNecessity:
    cause_id: str
    necessary: bool
    rationale: str

    def to_json(self) -> dict[str, Any]:
        return {
            "cause_id": self.cause_id,
            "necessary": self.necessary,
            "rationale": self.rationale,
        }


def evaluate_individual_necessity(
    causes: Sequence[Cause],
    goal: Goal,
    principles: Sequence[Any],
    oracle: Oracle,
) -> tuple[CauseNecessity, ...]:
    """One necessity judgment per consolidated cause, in universe order."""
    results = []
    for cause in causes:
        verdict = oracle.judge_individual_necessity(cause, goal, principles)
        results.append(CauseNecessity(cause.id, verdict.necessary, verdict.rationale))
    return tuple(results)


@dataclass(frozen=True)
class AnalysisReport:
    goal_id: str
    cause_ids: tuple[str, ...]
    individual_necessity: tuple[CauseNecessity, ...]
    minimal_necessary: CauseSetFamily
    minimal_sufficient: CauseSetFamily
    necessary_and_sufficient: tuple[tuple[str, ...], ...]
    structurally_necessary: tuple[str, ...]
    query_count: int
    monotonicity_violations: tuple[MonotonicityViolation, ...]
    duality_ok: bool
    effect_unachievable: bool
    search_method: str
    id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.id:
            digest = hashlib.sha256(
                json.dumps(self._payload(), sort_keys=True).encode("utf-8")
            ).hexdigest()
            object.__setattr__(self, "id", "arep" + digest[:12])

    def _payload(self) -> dict[str, Any]:
        return {
            "kind": "analysis",
            "goal_id": self.goal_id,
            "cause_ids": list(self.cause_ids),
            "individual_necessity": [v.to_json() for v in self.individual_necessity],
            "minimal_necessary": self.minimal_necessary.to_json(),
            "minimal_sufficient": self.minimal_sufficient.to_json(),
            "necessary_and_sufficient": [list(s) for s in self.necessary_and_sufficient],
            "structurally_necessary": list(self.structurally_necessary),
            "query_count": self.query_count,
            "monotonicity_violations": [v.to_json() for v in self.monotonicity_violations],
            "duality_ok": self.duality_ok,
            "effect_unachievable": self.effect_unachievable,
            "search_method": self.search_method,
        }

    def to_json_dict(self) -> dict[str, Any]:
        return {"id": self.id, **self._payload()}


def analyze(
    goal: Goal,
    store: TheoryStore,
    oracle: Oracle,
    *,
    brute_force: bool = False,
) -> AnalysisReport:
    """Full cause-set analysis for one synthesized goal.

    Runs individual necessity, the minimal necessary and minimal
    sufficient searches over a shared cache, the transversal duality
    cross-check, and assembles the necessary-and-sufficient disjunction.
    """
    causes = store.causes_for_goal(goal.id)
    if not causes:
        raise ValueError(f"goal {goal.id!r} has no consolidated causes; synthesize first")
    universe = tuple(c.id for c in causes)
    judge = CachedAchievementJudge(oracle, goal, causes, store.principles)

    individual = evaluate_individual_necessity(causes, goal, store.principles, oracle)
    monitor = MonotoneMonitor(universe)
    if brute_force:
        sufficient_family, necessary_family = brute_force_families(universe, judge)
        violations: tuple[MonotonicityViolation, ...] = ()
    else:
        necessary_outcome = minimal_necessary_search(universe, judge, monitor)
        sufficient_outcome = minimal_sufficient_search(universe, judge, monitor)
        necessary_family = necessary_outcome.family
        sufficient_family = sufficient_outcome.family
        violations = tuple(monitor.violations)

    duality_ok = minimal_transversals(sufficient_family) == necessary_family
    effect_unachievable = not sufficient_family.sets
    reported_necessary = (
        CauseSetFamily.build(universe, []) if effect_unachievable else necessary_family
    )
    sufficient_ids = sufficient_family.id_sets()
    structurally_necessary: tuple[str, ...] = ()
    if sufficient_ids:
        common = frozenset.intersection(*sufficient_ids)
        structurally_necessary = tuple(c for c in universe if c in common)

    return AnalysisReport(
        goal_id=goal.id,
        cause_ids=universe,
        individual_necessity=individual,
        minimal_necessary=reported_necessary,
        minimal_sufficient=sufficient_family,
        necessary_and_sufficient=tuple(
            tuple(family_set) for family_set in sufficient_family.to_json()
        ),
        structurally_necessary=structurally_necessary,
        query_count=judge.query_count,
        monotonicity_violations=violations,
        duality_ok=duality_ok,
        effect_unachievable=effect_unachievable,
        search_method="brute-force" if brute_force else "pruned",
    )
