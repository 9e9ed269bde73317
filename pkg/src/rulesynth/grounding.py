"""Finite-domain grounding of quantified rules into propositional clauses.

Each rule h1 and ... and hm <- b1 and ... and bk is instantiated for every
substitution of its quantified variables by same-sort constants; each
instantiation contributes m clauses (not b1 or ... or not bk or hi).
Ground atoms are interned into a propositional variable table in first
occurrence order, so clause databases are fully deterministic.

Comparisons are opaque atoms by default.  In interval-axioms mode the
declared finite value domain of each numeric attribute is used to forbid
sign patterns no domain value can realize, e.g. speed(a) > 50 implies
speed(a) > 30 and excludes speed(a) < 30.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Iterable, Mapping, Sequence

from .fol import (
    Atom,
    Comparison,
    Literal,
    Ontology,
    Rule,
    Term,
    const,
    render_literal,
    variable_sorts,
)

COMPARISON_MODES = ("opaque", "interval-axioms")


class GroundingError(ValueError):
    """A quantified variable's sort has no constants, or bad config."""


@dataclass(frozen=True)
class GroundingConfig:
    domain_constants: Mapping[str, tuple[str, ...]]
    comparison_mode: str = "opaque"

    def __post_init__(self) -> None:
        if self.comparison_mode not in COMPARISON_MODES:
            raise GroundingError(f"bad comparison mode {self.comparison_mode!r}")
        for sort, constants in self.domain_constants.items():
            if not constants:
                raise GroundingError(f"sort {sort!r} declares no constants")

    @classmethod
    def default(cls, onto: Ontology, domain_size: int = 3,
                comparison_mode: str = "opaque") -> "GroundingConfig":
        """Per sort, domain_size fresh constants named <sort>1..<sort>N."""
        if domain_size < 1:
            raise GroundingError("domain size must be positive")
        domains = {
            sort: tuple(f"{sort}{i}" for i in range(1, domain_size + 1))
            for sort in onto.sorts()
        }
        if not domains:
            raise GroundingError("ontology declares no sorts to ground over")
        return cls(domains, comparison_mode)

    def to_json(self) -> dict[str, Any]:
        return {
            "domain_constants": {s: list(c) for s, c in sorted(self.domain_constants.items())},
            "comparison_mode": self.comparison_mode,
        }


@dataclass
class ClauseDB:
    """Interned ground atoms plus deduplicated clauses with provenance."""

    atoms: dict[str, int] = field(default_factory=dict)
    atom_names: list[str] = field(default_factory=list)
    clauses: list[frozenset[int]] = field(default_factory=list)
    provenance: list[tuple[str, dict[str, str]]] = field(default_factory=list)
    comparisons: dict[str, Comparison] = field(default_factory=dict)
    _seen: set[frozenset[int]] = field(default_factory=set)

    def intern(self, ground: Atom | Comparison) -> int:
        name = render_literal(Literal(False, ground))
        index = self.atoms.get(name)
        if index is None:
            index = len(self.atom_names) + 1
            self.atoms[name] = index
            self.atom_names.append(name)
            if isinstance(ground, Comparison):
                self.comparisons[name] = ground
        return index

    def add_clause(
        self, literals: Iterable[int], origin: str, substitution: Mapping[str, str]
    ) -> bool:
        clause = frozenset(literals)
        if clause in self._seen:
            return False
        self._seen.add(clause)
        self.clauses.append(clause)
        self.provenance.append((origin, dict(substitution)))
        return True

    def atom_name(self, index: int) -> str:
        return self.atom_names[index - 1]

    def render_model(self, model: Mapping[int, bool]) -> tuple[str, ...]:
        """Model as signed ground atoms, sorted by atom name."""
        signed = []
        for name in sorted(self.atoms):
            value = model.get(self.atoms[name], True)
            signed.append(name if value else f"not {name}")
        return tuple(signed)


def substitute(term: Term, substitution: Mapping[str, str]) -> Term:
    if term.kind == "variable":
        return const(substitution[term.name])
    return term


def ground_inner(
    lit: Literal, substitution: Mapping[str, str]
) -> Atom | Comparison:
    if isinstance(lit.inner, Atom):
        args = tuple(substitute(t, substitution) for t in lit.inner.args)
        return Atom(lit.inner.predicate, args)
    cmp = lit.inner
    return Comparison(cmp.attribute, substitute(cmp.subject, substitution), cmp.op, cmp.value)


def rule_substitutions(
    rule: Rule, config: GroundingConfig, onto: Ontology
) -> list[dict[str, str]]:
    """Every assignment of same-sort constants to the rule's variables, in
    declaration order (variables outermost, constants in declared order)."""
    sorts = variable_sorts(rule, onto)
    names = [t.name for t in rule.quantified_vars]
    pools = []
    for name in names:
        sort = sorts[name]
        constants = config.domain_constants.get(sort)
        if not constants:
            raise GroundingError(f"no constants declared for sort {sort!r} (variable {name})")
        pools.append(constants)
    return [dict(zip(names, choice)) for choice in product(*pools)]


def instantiate_rule(
    rule: Rule, substitution: Mapping[str, str], db: ClauseDB
) -> list[frozenset[int]]:
    """Clauses of one ground instance: one clause per head literal."""
    body_part = []
    for lit in rule.body:
        index = db.intern(ground_inner(lit, substitution))
        body_part.append(-index if not lit.negated else index)  # complement
    clauses = []
    for head_lit in rule.head:
        index = db.intern(ground_inner(head_lit, substitution))
        signed_head = -index if head_lit.negated else index
        clauses.append(frozenset(body_part + [signed_head]))
    return clauses


def _evaluate(cmp: Comparison, value: Any) -> bool:
    ops = {
        "<": value < cmp.value,
        "<=": value <= cmp.value,
        "=": value == cmp.value,
        ">=": value >= cmp.value,
        ">": value > cmp.value,
        "!=": value != cmp.value,
    }
    return ops[cmp.op]


def append_comparison_axioms(db: ClauseDB, onto: Ontology) -> None:
    """Interval axioms: for comparisons over one attribute and subject,
    forbid every sign pattern that no declared domain value realizes."""
    groups: dict[tuple[str, str], list[str]] = {}
    for name, cmp in db.comparisons.items():
        groups.setdefault((cmp.attribute, cmp.subject.name), []).append(name)
    for (attribute, _subject), names in sorted(groups.items()):
        domain = onto.numeric_attributes[attribute].domain
        names.sort()
        for name in names:
            truths = {_evaluate(db.comparisons[name], v) for v in domain}
            if truths == {True}:
                db.add_clause([db.atoms[name]], "interval-axiom", {})
            elif truths == {False}:
                db.add_clause([-db.atoms[name]], "interval-axiom", {})
        for i, first in enumerate(names):
            for second in names[i + 1 :]:
                patterns = {
                    (_evaluate(db.comparisons[first], v), _evaluate(db.comparisons[second], v))
                    for v in domain
                }
                for a_sign in (True, False):
                    for b_sign in (True, False):
                        if (a_sign, b_sign) not in patterns:
                            clause = [
                                -db.atoms[first] if a_sign else db.atoms[first],
                                -db.atoms[second] if b_sign else db.atoms[second],
                            ]
                            db.add_clause(clause, "interval-axiom", {})


def ground(
    rules: Sequence[Rule],
    config: GroundingConfig,
    onto: Ontology,
    assumptions: Sequence[tuple[Literal, Mapping[str, str]]] = (),
) -> ClauseDB:
    """Ground a rule set (plus optional assumed unit literals) to a ClauseDB.

    Assumptions are ground literals asserted as unit clauses; they share
    the atom table, and interval axioms (when enabled) cover their
    comparison atoms too.
    """
    db = ClauseDB()
    for rule in rules:
        for substitution in rule_substitutions(rule, config, onto):
            for clause in instantiate_rule(rule, substitution, db):
                db.add_clause(clause, rule.id, substitution)
    for lit, substitution in assumptions:
        index = db.intern(ground_inner(lit, substitution))
        db.add_clause([-index if lit.negated else index], "assumption", substitution)
    if config.comparison_mode == "interval-axioms":
        append_comparison_axioms(db, onto)
    return db
