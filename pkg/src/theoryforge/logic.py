"""Propositional antecedent/consequent trees over ``variable=token`` atoms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Union


@dataclass(frozen=True)
class Atom:
    variable: str
    token: str

    def __str__(self) -> str:
        return f"{self.variable}={self.token}"


@dataclass(frozen=True)
class And:
    operands: tuple["Expr", ...]

    def __str__(self) -> str:
        return "(" + " AND ".join(map(str, self.operands)) + ")"


@dataclass(frozen=True)
class Or:
    operands: tuple["Expr", ...]

    def __str__(self) -> str:
        return "(" + " OR ".join(map(str, self.operands)) + ")"


Expr = Union[Atom, And, Or]


@dataclass(frozen=True)
class Implication:
    antecedent: Expr
    consequent: Expr

    def __str__(self) -> str:
        return f"IF {self.antecedent} THEN {self.consequent}"

    def to_dict(self) -> dict:
        return {"antecedent": to_dict(self.antecedent), "consequent": to_dict(self.consequent)}


def to_dict(e: Expr) -> dict:
    if isinstance(e, Atom):
        return {"atom": {"variable": e.variable, "value": e.token}}
    key = "and" if isinstance(e, And) else "or"
    return {key: [to_dict(o) for o in e.operands]}


def atoms(e: Expr) -> list[Atom]:
    """Distinct atoms in first-appearance order."""
    if isinstance(e, Atom):
        return [e]
    seen: list[Atom] = []
    for o in e.operands:
        for a in atoms(o):
            if a not in seen:
                seen.append(a)
    return seen


def evaluate(e: Expr, truth: Mapping[Atom, bool]) -> bool:
    if isinstance(e, Atom):
        return truth[e]
    if isinstance(e, And):
        return all(evaluate(o, truth) for o in e.operands)
    return any(evaluate(o, truth) for o in e.operands)


def disjuncts(e: Expr) -> list[Expr]:
    """Top-level disjuncts, flattening nested ORs by associativity.

    Anything that is not an OR is a single disjunct; ORs nested under an AND
    stay where they are.
    """
    if not isinstance(e, Or):
        return [e]
    out: list[Expr] = []
    for o in e.operands:
        out.extend(disjuncts(o))
    return out


def equivalent(a: Expr, b: Expr) -> bool:
    """Truth-table equivalence over the union of both expressions' atoms."""
    names = atoms(a) + [x for x in atoms(b) if x not in atoms(a)]
    for values in itertools.product((False, True), repeat=len(names)):
        truth = dict(zip(names, values))
        if evaluate(a, truth) != evaluate(b, truth):
            return False
    return True
