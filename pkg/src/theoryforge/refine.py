"""Reduce hypothesis grids to a small set of testable statements.

Steps, in pipeline order: taxonomic propositions are set aside, cells whose
left indicator is the declared absence value are pruned, adjacent cells along
an ordered right variable are merged into transition hypotheses, OR
antecedents are split, and finally the human review rules are applied.
Every record keeps its status and the reason it got there.
"""

from __future__ import annotations

import re
import shlex
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

from .grid import Binding, HypothesisCell, HypothesisGrid, enumerate_all
from .logic import And, Atom, Implication, Or, disjuncts
from .model import Proposition, Theory


class RefinementError(ValueError):
    pass


class TemplateError(RefinementError):
    pass


class ReviewError(RefinementError):
    pass


class Status(str, Enum):
    RETAINED = "retained"
    PRUNED_ABSENCE = "pruned_absence"
    PRUNED_ABDUCTIVE = "pruned_abductive"
    MERGED_AWAY = "merged_away"
    DECOMPOSED_AWAY = "decomposed_away"


@dataclass(frozen=True)
class Transition:
    """A move of one right variable between two adjacent ordered values."""

    left: Binding
    construct: str
    variable: str
    lo: str
    hi: str


@dataclass(frozen=True)
class RefinedHypothesis:
    id: str
    proposition: str
    kind: str
    statement: str
    cells: tuple[HypothesisCell, ...]
    expression: Implication
    status: Status = Status.RETAINED
    rationale: str = ""
    refuted: bool = False
    notes: tuple[str, ...] = ()
    parent: str | None = None  # set on the pieces of a split hypothesis

    @property
    def constituent_cells(self) -> list[str]:
        return [c.id for c in self.cells]

    @property
    def retained(self) -> bool:
        return self.status is Status.RETAINED

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "proposition": self.proposition,
            "kind": self.kind,
            "statement": self.statement,
            "constituent_cells": self.constituent_cells,
            "status": self.status.value,
            "rationale": self.rationale,
            "refuted": self.refuted,
            "notes": list(self.notes),
            "expression": self.expression.to_dict(),
            "parent": self.parent,
        }


def id_key(ident: str) -> tuple:
    """Sort key that puts H1.2 before H1.10."""
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", ident))


# -- statements -------------------------------------------------------------

DEFAULT_TEMPLATES = {
    "categoric": "The presence of {left_var}={left_ind} is associated with {right_var}={right_ind}.",
    "sequential": "Where {left_var} is {left_ind}, {right_var}={right_ind} tends to follow.",
    "determinant": "The {right_var} is proportional to the level of {left_var}.",
}
TRANSITION_TEMPLATE = "With {left_var}={left_ind}, {right_var} tends to shift from {right_lo} to {right_hi}."


def template_fields(template: str) -> set[str]:
    try:
        return {name for _, name, _, _ in string.Formatter().parse(template) if name is not None}
    except ValueError as exc:
        raise TemplateError(f"malformed template {template!r}: {exc}") from None


def is_transition_template(template: str) -> bool:
    return bool(template_fields(template) & {"right_lo", "right_hi"})


def statement_for(
    theory: Theory,
    subject: HypothesisCell | Transition,
    kind: str,
    template: str | None = None,
) -> str:
    """Fill a statement template for a single cell or a merged transition."""
    if isinstance(subject, Transition):
        left = subject.left
        values = {
            "left_var": theory.lookup(left.construct, left.variable).display,
            "left_ind": left.token,
            "right_var": theory.lookup(subject.construct, subject.variable).display,
            "right_lo": subject.lo,
            "right_hi": subject.hi,
        }
        template = template or TRANSITION_TEMPLATE
    else:
        values = {
            "left_var": theory.lookup(subject.left.construct, subject.left.variable).display,
            "left_ind": subject.left.token,
            "right_var": theory.lookup(subject.right.construct, subject.right.variable).display,
            "right_ind": subject.right.token,
        }
        if template is None:
            if kind not in DEFAULT_TEMPLATES:
                raise TemplateError(f"no default template for kind '{kind}'")
            template = DEFAULT_TEMPLATES[kind]
    missing = template_fields(template) - set(values)
    if missing:
        raise TemplateError(
            f"template uses unavailable placeholder(s) {', '.join('{' + m + '}' for m in sorted(missing))}"
        )
    return template.format_map(values)


def _qualified(b: Binding) -> str:
    return f"{b.construct}.{b.variable}"


def _cell_record(theory: Theory, prop: Proposition, cell: HypothesisCell) -> RefinedHypothesis:
    override = prop.template if prop.template and not is_transition_template(prop.template) else None
    return RefinedHypothesis(
        id=cell.id,
        proposition=prop.id,
        kind=prop.kind,
        statement=statement_for(theory, cell, prop.kind, override),
        cells=(cell,),
        expression=Implication(
            Atom(_qualified(cell.left), cell.left.token),
            Atom(_qualified(cell.right), cell.right.token),
        ),
    )


# -- pipeline steps ---------------------------------------------------------


def select_strategic(theory: Theory) -> tuple[list[Proposition], list[tuple[Proposition, str]]]:
    strategic = [p for p in theory.propositions if p.strategic]
    excluded = [(p, "taxonomic") for p in theory.propositions if not p.strategic]
    return strategic, excluded


def prune_absence(grid: HypothesisGrid, theory: Theory) -> list[RefinedHypothesis]:
    """One record per cell; cells binding the left variable's absence value are pruned.

    Only existence-style relations (categoric, sequential) are pruned this way.
    """
    prop = theory.proposition(grid.proposition)
    records = [_cell_record(theory, prop, c) for c in grid.cells]
    lc, lv = grid.left_variable
    absence = theory.lookup(lc, lv).domain.absence
    if prop.kind == "determinant":
        note = "determinant relation: no reduction rule applies; all cells kept"
        return [replace(r, notes=r.notes + (note,)) for r in records]
    if absence is None:
        return records
    reason = (
        f"{lc}.{lv} declares '{absence}' as its absence value; "
        f"a {prop.kind} relation requires the left variable to be present"
    )
    return [
        replace(r, status=Status.PRUNED_ABSENCE, rationale=reason) if r.cells[0].left.token == absence else r
        for r in records
    ]


def merge_gradient(
    candidates: Sequence[RefinedHypothesis], grid: HypothesisGrid, theory: Theory
) -> list[RefinedHypothesis]:
    """Merge cells at adjacent ordering positions into transition hypotheses.

    Returns the input records (merged cells re-labelled ``merged_away``)
    followed by the new transition hypotheses.
    """
    prop = theory.proposition(grid.proposition)
    if prop.kind == "determinant":
        return list(candidates)
    live = {r.id: r for r in candidates if r.retained and len(r.cells) == 1}
    by_position = {(c.column, c.right.key, c.right.token): c for c in grid.cells}
    right_vars = list(dict.fromkeys(key for key, _ in grid.rows))
    override = prop.template if prop.template and is_transition_template(prop.template) else None

    merged: list[RefinedHypothesis] = []
    merged_into: dict[str, list[str]] = {}
    for rc, rv in right_vars:
        domain = theory.lookup(rc, rv).domain
        if not domain.ordering:
            if prop.kind == "sequential":
                raise RefinementError(
                    f"{prop.id}: right variable {rc}.{rv} has no ordering; "
                    "a sequential relation needs one"
                )
            continue
        for col, ltok in enumerate(grid.columns):
            for lo, hi in domain.adjacent_pairs():
                a = by_position[(col, (rc, rv), lo)]
                b = by_position[(col, (rc, rv), hi)]
                if a.id not in live or b.id not in live:
                    continue
                hid = f"H{prop.ordinal}.{len(merged) + 1}"
                cells = tuple(sorted((a, b), key=lambda c: (c.row, c.column)))
                transition = Transition(a.left, rc, rv, lo, hi)
                merged.append(
                    RefinedHypothesis(
                        id=hid,
                        proposition=prop.id,
                        kind=prop.kind,
                        statement=statement_for(theory, transition, prop.kind, override),
                        cells=cells,
                        expression=Implication(
                            And((Atom(_qualified(a.left), ltok), Atom(f"{rc}.{rv}", lo))),
                            Atom(f"{rc}.{rv}", hi),
                        ),
                    )
                )
                for c in cells:
                    merged_into.setdefault(c.id, []).append(hid)

    out = []
    for r in candidates:
        if r.id in merged_into and r.retained:
            r = replace(r, status=Status.MERGED_AWAY, rationale="merged into " + ", ".join(merged_into[r.id]))
        out.append(r)
    return out + merged


def _suffix(i: int) -> str:
    return chr(ord("a") + i) if i < 26 else f"_{i + 1}"


def decompose_compound(hypothesis: RefinedHypothesis) -> list[RefinedHypothesis]:
    """Split ``IF (A OR B) THEN C`` into ``IF A THEN C`` and ``IF B THEN C``.

    Nested ORs are flattened first. AND antecedents are left alone since the
    consequent may need every conjunct at once. The original comes back first,
    marked ``decomposed_away``, followed by one record per disjunct.
    """
    expr = hypothesis.expression
    if not isinstance(expr.antecedent, Or):
        return [hypothesis]
    parts = disjuncts(expr.antecedent)
    children = [
        replace(
            hypothesis,
            id=f"{hypothesis.id}{_suffix(i)}",
            expression=Implication(d, expr.consequent),
            statement=str(Implication(d, expr.consequent)),
            parent=hypothesis.id,
        )
        for i, d in enumerate(parts)
    ]
    original = replace(
        hypothesis,
        status=Status.DECOMPOSED_AWAY,
        rationale="split into " + ", ".join(c.id for c in children),
    )
    return [original] + children


# -- review rules -----------------------------------------------------------


@dataclass(frozen=True)
class ReviewRule:
    action: str  # prune | refute | retain
    target: str  # "cell", "hypothesis" or "where"
    ident: str  # cell id, hypothesis id, or proposition id for predicates
    atoms: tuple[tuple[str, str], ...] = ()
    reason: str = ""
    line: int = 0

    def __str__(self) -> str:
        if self.target == "where":
            preds = " ".join(f"{v}={t}" for v, t in self.atoms)
            return f"{self.action} where {self.ident} {preds}"
        if self.target == "cell":
            return f"{self.action} cell {self.ident}"
        return f"{self.action} {self.ident}"


ACTIONS = ("prune", "refute", "retain")


def parse_rules(text: str, filename: str = "<rules>") -> list[ReviewRule]:
    """Read the line-oriented review-rule format (``#`` comments)."""
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        try:
            words = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise ReviewError(f"{filename}:{lineno}: {exc}") from None
        if not words:
            continue

        def bad(msg):
            return ReviewError(f"{filename}:{lineno}: {msg}")

        action, rest = words[0], words[1:]
        if action not in ACTIONS:
            raise bad(f"expected one of {', '.join(ACTIONS)}, found '{action}'")
        if len(rest) < 3 or rest[-2] != "reason":
            raise bad("rule must end with: reason \"<text>\"")
        reason = rest[-1].strip()
        if not reason:
            raise bad("reason text is required")
        body = rest[:-2]
        if body[0] == "cell" and len(body) == 2:
            rule = ReviewRule(action, "cell", body[1], (), reason, lineno)
        elif body[0] == "where" and len(body) >= 3:
            atoms = []
            for word in body[2:]:
                var, eq, tok = word.partition("=")
                if not eq or not var or not tok.strip():
                    raise bad(f"expected variable=value, found '{word}'")
                atoms.append((var, tok.strip()))
            rule = ReviewRule(action, "where", body[1], tuple(atoms), reason, lineno)
        elif len(body) == 1 and body[0] not in ("cell", "where"):
            rule = ReviewRule(action, "hypothesis", body[0], (), reason, lineno)
        else:
            raise bad("expected 'cell <id>', 'where <proposition> <var=value>...' or a hypothesis id")
        rules.append(rule)
    return rules


@dataclass
class ReviewOutcome:
    hypotheses: list[RefinedHypothesis]
    audit: list[tuple[ReviewRule, list[str]]]


def _atom_matches(atom: tuple[str, str], binding: Binding) -> bool:
    var, tok = atom
    return var in (binding.variable, f"{binding.construct}.{binding.variable}") and binding.token == tok


def abductive_review(hypotheses: Sequence[RefinedHypothesis], rules: Sequence[ReviewRule]) -> ReviewOutcome:
    """Apply review rules; the first rule (file order) matching a hypothesis decides it."""
    all_ids = {h.id for h in hypotheses}
    all_cells = {c.id for h in hypotheses for c in h.cells}
    bound: dict[str, dict[str, set[str]]] = {}
    for h in hypotheses:
        for c in h.cells:
            for b in c.bindings:
                for name in (b.variable, f"{b.construct}.{b.variable}"):
                    bound.setdefault(h.proposition, {}).setdefault(name, set()).add(b.token)

    for rule in rules:
        where = f"rule at line {rule.line}" if rule.line else f"rule '{rule}'"
        if rule.target == "hypothesis" and rule.ident not in all_ids:
            raise ReviewError(f"{where}: unknown hypothesis '{rule.ident}'")
        if rule.target == "cell" and rule.ident not in all_cells:
            raise ReviewError(f"{where}: unknown cell '{rule.ident}'")
        if rule.target == "where":
            if rule.ident not in bound:
                raise ReviewError(f"{where}: unknown or unenumerated proposition '{rule.ident}'")
            for var, tok in rule.atoms:
                tokens = bound[rule.ident].get(var)
                if tokens is None:
                    raise ReviewError(f"{where}: '{var}' is not a variable of {rule.ident}")
                if tok not in tokens:
                    raise ReviewError(f"{where}: '{tok}' is not an indicator of '{var}'")

    def matches(rule: ReviewRule, h: RefinedHypothesis) -> bool:
        if rule.target == "hypothesis":
            return h.id == rule.ident
        if rule.target == "cell":
            return rule.ident in h.constituent_cells
        return h.proposition == rule.ident and any(
            all(any(_atom_matches(a, b) for b in c.bindings) for a in rule.atoms) for c in h.cells
        )

    decided: dict[str, ReviewRule] = {}
    audit = []
    for rule in rules:
        hits = [h.id for h in hypotheses if h.retained and h.id not in decided and matches(rule, h)]
        for hid in hits:
            decided[hid] = rule
        audit.append((rule, hits))

    out = []
    for h in hypotheses:
        rule = decided.get(h.id)
        if rule is None:
            out.append(h)
        elif rule.action == "prune":
            out.append(replace(h, status=Status.PRUNED_ABDUCTIVE, rationale=rule.reason))
        elif rule.action == "refute":
            out.append(replace(h, refuted=True, notes=h.notes + (f"refuted by evidence: {rule.reason}",)))
        else:
            out.append(replace(h, notes=h.notes + (f"retained on review: {rule.reason}",)))
    return ReviewOutcome(out, audit)


# -- whole pipeline ---------------------------------------------------------


@dataclass
class Refinement:
    theory: Theory
    grids: list[HypothesisGrid]
    hypotheses: list[RefinedHypothesis]
    excluded: list[tuple[Proposition, str]]
    audit: list[tuple[ReviewRule, list[str]]] = field(default_factory=list)

    def retained(self) -> list[RefinedHypothesis]:
        return [h for h in self.hypotheses if h.retained]

    def hypothesis(self, hid: str) -> RefinedHypothesis:
        for h in self.hypotheses:
            if h.id == hid:
                return h
        raise KeyError(f"unknown hypothesis '{hid}'")

    def grid(self, pid: str) -> HypothesisGrid:
        for g in self.grids:
            if g.proposition == pid:
                return g
        raise KeyError(f"no grid for proposition '{pid}'")

    def status_counts(self) -> dict[str, int]:
        counts = {s.value: 0 for s in Status}
        for h in self.hypotheses:
            counts[h.status.value] += 1
        return counts

    @property
    def cell_count(self) -> int:
        return sum(len(g) for g in self.grids)


def refine_grid(grid: HypothesisGrid, theory: Theory) -> list[RefinedHypothesis]:
    records = merge_gradient(prune_absence(grid, theory), grid, theory)
    out = []
    for r in records:
        out.extend(decompose_compound(r) if r.retained else [r])
    return out


def refine(theory: Theory, rules: Iterable[ReviewRule] = (), workers: int | None = None) -> Refinement:
    """Run every step on every strategic proposition of ``theory``."""
    summary = enumerate_all(theory)
    if summary.failed:
        raise RefinementError("; ".join(f"{pid}: {msg}" for pid, msg in summary.failed))
    _, excluded = select_strategic(theory)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_grid = list(pool.map(lambda g: refine_grid(g, theory), summary.grids))
    else:
        per_grid = [refine_grid(g, theory) for g in summary.grids]
    hypotheses = [h for batch in per_grid for h in batch]
    outcome = abductive_review(hypotheses, list(rules))
    return Refinement(theory, summary.grids, outcome.hypotheses, excluded, outcome.audit)
