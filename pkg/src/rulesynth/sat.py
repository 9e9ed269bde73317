"""Complete DPLL satisfiability solver over integer-encoded CNF.

Clauses are frozensets of nonzero ints: +v asserts variable v, -v its
negation (DIMACS convention, variables numbered from 1).  The solver is
deterministic: unit propagation to fixpoint, then pure-literal
elimination, then branching on the lowest unassigned variable index with
True tried first.  A SAT answer comes with a total assignment.
"""

from __future__ import annotations

from typing import Iterable, Sequence

Clause = frozenset[int]


def solve(
    clauses: Sequence[Iterable[int]], num_vars: int | None = None
) -> dict[int, bool] | None:
    """Return a total satisfying assignment, or None when unsatisfiable."""
    normalized = [frozenset(c) for c in clauses]
    seen = max((abs(l) for c in normalized for l in c), default=0)
    total = max(num_vars or 0, seen)
    assignment: dict[int, bool] = {}
    result = _dpll(normalized, assignment)
    if result is None:
        return None
    for variable in range(1, total + 1):
        result.setdefault(variable, True)
    return result


def _assign(clauses: list[Clause], literal: int) -> list[Clause] | None:
    """Simplify under literal := true; None signals an empty clause."""
    out: list[Clause] = []
    for clause in clauses:
        if literal in clause:
            continue
        if -literal in clause:
            clause = clause - {-literal}
            if not clause:
                return None
        out.append(clause)
    return out


def _dpll(clauses: list[Clause], assignment: dict[int, bool]) -> dict[int, bool] | None:
    if any(not clause for clause in clauses):
        return None
    # unit propagation to fixpoint
    while True:
        unit = None
        for clause in clauses:
            if len(clause) == 1:
                unit = next(iter(clause))
                break
        if unit is None:
            break
        assignment[abs(unit)] = unit > 0
        simplified = _assign(clauses, unit)
        if simplified is None:
            return None
        clauses = simplified

    # pure-literal elimination (ascending variable order)
    while True:
        positive: set[int] = set()
        negative: set[int] = set()
        for clause in clauses:
            for literal in clause:
                (positive if literal > 0 else negative).add(abs(literal))
        pure = sorted((positive - negative) | (negative - positive))
        if not pure:
            break
        for variable in pure:
            literal = variable if variable in positive else -variable
            assignment[abs(literal)] = literal > 0
            simplified = _assign(clauses, literal)
            if simplified is None:  # unreachable for a pure literal
                return None
            clauses = simplified

    if not clauses:
        return assignment

    variable = min(abs(l) for clause in clauses for l in clause)
    for literal in (variable, -variable):
        simplified = _assign(clauses, literal)
        if simplified is None:
            continue
        branched = dict(assignment)
        branched[variable] = literal > 0
        result = _dpll(simplified, branched)
        if result is not None:
            return result
    return None
