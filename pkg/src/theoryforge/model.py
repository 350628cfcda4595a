"""Domain types for an operationalized theory, plus validation and JSON I/O.

Every value here is a frozen dataclass. Source spans are carried for
diagnostics but excluded from equality, so a theory parsed from text and the
same theory loaded from JSON compare equal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator

KINDS = ("categoric", "sequential", "determinant")


class ResolutionError(LookupError):
    """A variable reference names a construct or variable that does not exist."""

    def __init__(self, name: str, message: str | None = None):
        self.name = name
        super().__init__(message or f"unresolved reference '{name}'")


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    path: str
    message: str
    span: SourceSpan | None = None

    @property
    def location(self) -> str:
        return str(self.span) if self.span else self.path

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def __str__(self) -> str:
        return f"{self.location}: {self.severity.value}: {self.message}"


@dataclass(frozen=True)
class IndicatorDomain:
    values: tuple[str, ...]
    ordering: tuple[str, ...] | None = None
    absence: str | None = None

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, token: object) -> bool:
        return token in self.values

    def adjacent_pairs(self) -> list[tuple[str, str]]:
        """Consecutive (lower, higher) pairs of the ascending ordering."""
        if not self.ordering:
            return []
        return list(zip(self.ordering, self.ordering[1:]))


@dataclass(frozen=True)
class Variable:
    name: str
    domain: IndicatorDomain
    label: str = ""
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def display(self) -> str:
        return self.label or self.name.replace("_", " ")


@dataclass(frozen=True)
class Construct:
    name: str
    definition: str = ""
    variables: tuple[Variable, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def variable(self, name: str) -> Variable | None:
        for v in self.variables:
            if v.name == name:
                return v
        return None


WILDCARD = "*"


@dataclass(frozen=True)
class VariableRef:
    construct: str
    variable: str  # a variable name or WILDCARD

    @property
    def is_wildcard(self) -> bool:
        return self.variable == WILDCARD

    def __str__(self) -> str:
        return f"{self.construct}.{self.variable}"


@dataclass(frozen=True)
class Quotation:
    source: str
    excerpt: str


@dataclass(frozen=True)
class Proposition:
    id: str
    kind: str
    left: VariableRef
    right: VariableRef
    text: str = ""
    strategic: bool = True
    quotes: tuple[Quotation, ...] = ()
    template: str | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def ordinal(self) -> str:
        """Numeric part of ids like ``P28``; used to number cells and hypotheses."""
        digits = self.id.lstrip("Pp")
        return digits if digits.isdigit() else self.id


@dataclass(frozen=True)
class Archetype:
    name: str
    # ((construct, variable), token) pairs in declaration order
    assignments: tuple[tuple[tuple[str, str], str], ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def as_dict(self) -> dict[tuple[str, str], str]:
        return dict(self.assignments)


@dataclass(frozen=True)
class Theory:
    name: str
    constructs: tuple[Construct, ...] = ()
    propositions: tuple[Proposition, ...] = ()
    archetypes: tuple[Archetype, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def construct(self, name: str) -> Construct | None:
        for c in self.constructs:
            if c.name == name:
                return c
        return None

    def proposition(self, pid: str) -> Proposition:
        for p in self.propositions:
            if p.id == pid:
                return p
        raise KeyError(f"unknown proposition '{pid}'")

    def archetype(self, name: str) -> Archetype:
        for a in self.archetypes:
            if a.name == name:
                return a
        raise KeyError(f"unknown archetype '{name}'")

    def variables(self) -> Iterator[tuple[Construct, Variable]]:
        for c in self.constructs:
            for v in c.variables:
                yield c, v

    def lookup(self, construct: str, variable: str) -> Variable:
        return resolve(self, VariableRef(construct, variable))[0][1]


def resolve(theory: Theory, ref: VariableRef) -> list[tuple[Construct, Variable]]:
    """Resolve a reference to ``(construct, variable)`` pairs.

    A wildcard yields every variable of the construct in declaration order,
    which is empty for taxonomy-only constructs.
    """
    construct = theory.construct(ref.construct)
    if construct is None:
        raise ResolutionError(str(ref), f"unknown construct '{ref.construct}' in '{ref}'")
    if ref.is_wildcard:
        return [(construct, v) for v in construct.variables]
    variable = construct.variable(ref.variable)
    if variable is None:
        raise ResolutionError(str(ref), f"unknown variable '{ref}'")
    return [(construct, variable)]


def _duplicates(names: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dups = []
    for n in names:
        if n in seen and n not in dups:
            dups.append(n)
        seen.add(n)
    return dups


def validate(theory: Theory) -> list[Diagnostic]:
    """Check every structural invariant; returns diagnostics, never raises."""
    out: list[Diagnostic] = []

    def err(path, msg, span=None):
        out.append(Diagnostic(Severity.ERROR, path, msg, span))

    def warn(path, msg, span=None):
        out.append(Diagnostic(Severity.WARNING, path, msg, span))

    for name in _duplicates(c.name for c in theory.constructs):
        err(f"construct {name}", f"duplicate construct name '{name}'")
    for pid in _duplicates(p.id for p in theory.propositions):
        err(f"proposition {pid}", f"duplicate proposition id '{pid}'")
    for name in _duplicates(a.name for a in theory.archetypes):
        err(f"archetype {name}", f"duplicate archetype name '{name}'")

    for c in theory.constructs:
        cpath = f"construct {c.name}"
        if not c.variables:
            warn(cpath, f"construct '{c.name}' declares no variables (taxonomy-only)", c.span)
        for name in _duplicates(v.name for v in c.variables):
            err(cpath, f"duplicate variable '{name}' in construct '{c.name}'", c.span)
        for v in c.variables:
            vpath = f"{c.name}.{v.name}"
            d = v.domain
            if not d.values:
                err(vpath, f"variable '{vpath}' has an empty indicator domain", v.span)
            for tok in _duplicates(d.values):
                err(vpath, f"duplicate indicator '{tok}' in '{vpath}'", v.span)
            if d.ordering is not None and sorted(d.ordering) != sorted(d.values):
                err(vpath, f"ordering of '{vpath}' is not a permutation of its values", v.span)
            if d.absence is not None and d.absence not in d.values:
                err(vpath, f"absence value '{d.absence}' is not a value of '{vpath}'", v.span)

    for p in theory.propositions:
        ppath = f"proposition {p.id}"
        if p.kind not in KINDS:
            err(ppath, f"unknown interaction kind '{p.kind}'", p.span)
        for side, ref in (("left", p.left), ("right", p.right)):
            try:
                resolve(theory, ref)
            except ResolutionError as exc:
                err(ppath, f"{side} side of {p.id}: {exc}", p.span)
        if p.left.is_wildcard and p.strategic:
            err(
                ppath,
                f"left side of strategic proposition {p.id} must name a single variable; "
                "write one proposition per left variable",
                p.span,
            )
        if not p.quotes:
            warn(ppath, f"proposition {p.id} has no grounding quotations", p.span)
        for q in p.quotes:
            if not q.excerpt.strip():
                err(ppath, f"empty quotation excerpt in {p.id}", p.span)

    for a in theory.archetypes:
        apath = f"archetype {a.name}"
        for key in _duplicates(k for k, _ in a.assignments):
            err(apath, f"variable {key[0]}.{key[1]} assigned twice in '{a.name}'", a.span)
        for (cname, vname), tok in a.assignments:
            try:
                (_, var), = resolve(theory, VariableRef(cname, vname))
            except ResolutionError as exc:
                err(apath, f"archetype {a.name}: {exc}", a.span)
                continue
            if tok not in var.domain:
                err(apath, f"'{tok}' is not an indicator of {cname}.{vname}", a.span)
    return out


def errors(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diagnostics if d.is_error]


# -- JSON -------------------------------------------------------------------


def to_dict(theory: Theory) -> dict[str, Any]:
    return {
        "name": theory.name,
        "constructs": [
            {
                "name": c.name,
                "definition": c.definition,
                "variables": [
                    {
                        "name": v.name,
                        "label": v.label,
                        "values": list(v.domain.values),
                        "ordering": list(v.domain.ordering) if v.domain.ordering else None,
                        "absence": v.domain.absence,
                    }
                    for v in c.variables
                ],
            }
            for c in theory.constructs
        ],
        "propositions": [
            {
                "id": p.id,
                "kind": p.kind,
                "strategic": p.strategic,
                "left": {"construct": p.left.construct, "variable": p.left.variable},
                "right": {"construct": p.right.construct, "variable": p.right.variable},
                "text": p.text,
                "quotes": [{"source": q.source, "excerpt": q.excerpt} for q in p.quotes],
                "template": p.template,
            }
            for p in theory.propositions
        ],
        "archetypes": [
            {
                "name": a.name,
                "assignments": [
                    {"construct": c, "variable": v, "value": tok}
                    for (c, v), tok in a.assignments
                ],
            }
            for a in theory.archetypes
        ],
    }


def from_dict(data: dict[str, Any]) -> Theory:
    def ref(d):
        return VariableRef(d["construct"], d["variable"])

    return Theory(
        name=data["name"],
        constructs=tuple(
            Construct(
                name=c["name"],
                definition=c.get("definition", ""),
                variables=tuple(
                    Variable(
                        name=v["name"],
                        label=v.get("label", ""),
                        domain=IndicatorDomain(
                            values=tuple(v["values"]),
                            ordering=tuple(v["ordering"]) if v.get("ordering") else None,
                            absence=v.get("absence"),
                        ),
                    )
                    for v in c.get("variables", [])
                ),
            )
            for c in data.get("constructs", [])
        ),
        propositions=tuple(
            Proposition(
                id=p["id"],
                kind=p["kind"],
                strategic=p.get("strategic", True),
                left=ref(p["left"]),
                right=ref(p["right"]),
                text=p.get("text", ""),
                quotes=tuple(Quotation(q["source"], q["excerpt"]) for q in p.get("quotes", [])),
                template=p.get("template"),
            )
            for p in data.get("propositions", [])
        ),
        archetypes=tuple(
            Archetype(
                name=a["name"],
                assignments=tuple(
                    ((x["construct"], x["variable"]), x["value"]) for x in a.get("assignments", [])
                ),
            )
            for a in data.get("archetypes", [])
        ),
    )


def dumps(theory: Theory) -> str:
    return json.dumps(to_dict(theory), indent=2, ensure_ascii=False) + "\n"


def loads(text: str) -> Theory:
    return from_dict(json.loads(text))
