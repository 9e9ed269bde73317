"""Staged rule verification: schema, consistency, redundancy, invariants.

Stages run in a fixed order with fail-fast verdicts:

1. schema      -> Malformed     (ontology violations)
2. consistency -> Inconsistent  (grounded theory + candidate is UNSAT;
                                 a minimal conflict core is extracted by
                                 deletion-based shrinking)
3. redundancy  -> Redundant     (theory entails every candidate clause)
4. invariants  -> Unsafe        (some safety invariant is no longer
                                 entailed; a countermodel is reported)
5. (all pass)  -> Accepted

The quantification semantics is finite-model: rules are grounded over the
configured constant domain, so every verdict is relative to the grounding
config recorded in the report.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import sat
from .fol import Ontology, Rule, render_rule, validate_schema
from .grounding import (
    ClauseDB,
    GroundingConfig,
    append_comparison_axioms,
    ground,
    instantiate_rule,
    rule_substitutions,
)
from .store import Invariant, TheoryStore

VERDICTS = ("Accepted", "Malformed", "Inconsistent", "Redundant", "Unsafe")


def _solve_db(db: ClauseDB) -> dict[int, bool] | None:
    return sat.solve(db.clauses, num_vars=len(db.atom_names))


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    core: tuple[str, ...] = ()  # theory rule ids; empty core means the
    # candidate is self-contradictory under the grounding


def check_consistency(
    theory: Sequence[Rule], candidate: Rule, config: GroundingConfig, onto: Ontology
) -> ConsistencyResult:
    """SAT check of theory plus candidate; on UNSAT, shrink the theory to a
    minimal subset that still conflicts with the candidate."""
    if _solve_db(ground([*theory, candidate], config, onto)) is not None:
        return ConsistencyResult(True)
    kept = list(theory)
    for rule in list(kept):
        trial = [r for r in kept if r is not rule]
        if _solve_db(ground([*trial, candidate], config, onto)) is None:
            kept = trial
    return ConsistencyResult(False, tuple(r.id for r in kept))


def check_entailment(
    theory: Sequence[Rule], candidate: Rule, config: GroundingConfig, onto: Ontology
) -> bool:
    """True when every grounding clause of the candidate is refuted by the
    theory (clause-by-clause negation + SAT), i.e. the candidate is redundant.
    Precondition: theory plus candidate is consistent."""
    db = ground(theory, config, onto)
    candidate_clauses = []
    for substitution in rule_substitutions(candidate, config, onto):
        candidate_clauses.extend(instantiate_rule(candidate, substitution, db))
    if config.comparison_mode == "interval-axioms":
        append_comparison_axioms(db, onto)
    for clause in candidate_clauses:
        negation = [frozenset([-lit]) for lit in clause]
        if sat.solve(db.clauses + negation, num_vars=len(db.atom_names)) is not None:
            return False
    return True


@dataclass(frozen=True)
class InvariantResult:
    preserved: bool
    violated_id: str | None = None
    countermodel: tuple[str, ...] = ()


def check_invariants(
    theory: Sequence[Rule],
    candidate: Rule | None,
    invariants: Sequence[Invariant],
    config: GroundingConfig,
    onto: Ontology,
) -> InvariantResult:
    """Check that the theory (plus candidate, if given) entails each invariant.

    Invariant I is violated when some model of the grounded theory
    satisfies I's body while falsifying one of its head literals, for some
    substitution.  Conjunctive heads are negated one literal per SAT
    attempt.  The first violation (store order, then substitution order,
    then head-literal order) is reported with its countermodel.
    """
    rules = [*theory] if candidate is None else [*theory, candidate]
    for invariant in invariants:
        for substitution in rule_substitutions(invariant.rule, config, onto):
            assumptions = [(lit, substitution) for lit in invariant.rule.body]
            for head_lit in invariant.rule.head:
                negated = [*assumptions, (head_lit.complement(), substitution)]
                db = ground(rules, config, onto, assumptions=negated)
                model = _solve_db(db)
                if model is not None:
                    return InvariantResult(False, invariant.id, db.render_model(model))
    return InvariantResult(True)


@dataclass(frozen=True)
class VerificationReport:
    rule_id: str
    rule_text: str
    verdict: str
    stages_executed: tuple[str, ...]
    schema_violations: tuple[str, ...]
    consistency: ConsistencyResult | None
    redundancy: str | None  # "novel" | "entailed"
    invariants: InvariantResult | None
    grounding: dict[str, Any]
    id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.id:
            digest = hashlib.sha256(
                json.dumps(self._payload(), sort_keys=True).encode("utf-8")
            ).hexdigest()
            object.__setattr__(self, "id", "vrep" + digest[:12])

    def _payload(self) -> dict[str, Any]:
        return {
            "kind": "verification",
            "rule_id": self.rule_id,
            "rule_text": self.rule_text,
            "verdict": self.verdict,
            "stages_executed": list(self.stages_executed),
            "schema_violations": list(self.schema_violations),
            "consistency": None
            if self.consistency is None
            else {"consistent": self.consistency.consistent, "core": list(self.consistency.core)},
            "redundancy": self.redundancy,
            "invariants": None
            if self.invariants is None
            else {
                "preserved": self.invariants.preserved,
                "violated_id": self.invariants.violated_id,
                "countermodel": list(self.invariants.countermodel),
            },
            "grounding": self.grounding,
        }

    def to_json_dict(self) -> dict[str, Any]:
        return {"id": self.id, **self._payload()}


def verify(
    candidate: Rule, store: TheoryStore, config: GroundingConfig, onto: Ontology
) -> VerificationReport:
    """Run the staged pipeline for one candidate against the store's theory."""
    stages = ["schema"]
    violations = validate_schema(candidate, onto)
    grounding_used = config.to_json()
    if violations:
        return VerificationReport(
            candidate.id, render_rule(candidate), "Malformed", tuple(stages),
            tuple(v.message for v in violations), None, None, None, grounding_used,
        )
    theory = store.theory_rules()
    stages.append("consistency")
    consistency = check_consistency(theory, candidate, config, onto)
    if not consistency.consistent:
        return VerificationReport(
            candidate.id, render_rule(candidate), "Inconsistent", tuple(stages),
            (), consistency, None, None, grounding_used,
        )
    stages.append("redundancy")
    if check_entailment(theory, candidate, config, onto):
        return VerificationReport(
            candidate.id, render_rule(candidate), "Redundant", tuple(stages),
            (), consistency, "entailed", None, grounding_used,
        )
    stages.append("invariants")
    invariant_result = check_invariants(theory, candidate, store.invariants, config, onto)
    if not invariant_result.preserved:
        return VerificationReport(
            candidate.id, render_rule(candidate), "Unsafe", tuple(stages),
            (), consistency, "novel", invariant_result, grounding_used,
        )
    return VerificationReport(
        candidate.id, render_rule(candidate), "Accepted", tuple(stages),
        (), consistency, "novel", invariant_result, grounding_used,
    )


def theory_soundness(
    store: TheoryStore, config: GroundingConfig, onto: Ontology
) -> tuple[bool, str]:
    """Promotion soundness: the committed theory is satisfiable and every
    declared invariant is entailed by it."""
    theory = store.theory_rules()
    if _solve_db(ground(theory, config, onto)) is None:
        return False, "verified theory is unsatisfiable"
    result = check_invariants(theory, None, store.invariants, config, onto)
    if not result.preserved:
        return False, f"invariant {result.violated_id} not entailed by the theory"
    return True, "ok"
