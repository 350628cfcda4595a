"""Archetype checks and archetype-consistent hypothesis selection."""

from __future__ import annotations

from typing import Iterable, Sequence

from .grid import HypothesisCell
from .model import Archetype, Diagnostic, ResolutionError, Severity, Theory, VariableRef, resolve
from .refine import RefinedHypothesis, id_key


def check_archetype(theory: Theory, name: str) -> list[Diagnostic]:
    """Errors for out-of-domain assignments, warnings for gaps.

    Raises KeyError for an unknown archetype name.
    """
    archetype = theory.archetype(name)
    path = f"archetype {name}"
    out: list[Diagnostic] = []
    if not archetype.assignments:
        return [Diagnostic(Severity.WARNING, path, f"archetype '{name}' has no assignments", archetype.span)]
    touched: list[str] = []
    for (cname, vname), tok in archetype.assignments:
        try:
            (_, var), = resolve(theory, VariableRef(cname, vname))
        except ResolutionError as exc:
            out.append(Diagnostic(Severity.ERROR, path, str(exc), archetype.span))
            continue
        if tok not in var.domain:
            out.append(
                Diagnostic(
                    Severity.ERROR,
                    path,
                    f"'{tok}' is not in the domain of {cname}.{vname} "
                    f"({{{', '.join(var.domain.values)}}})",
                    archetype.span,
                )
            )
        if cname not in touched:
            touched.append(cname)
    assigned = archetype.as_dict()
    for cname in touched:
        construct = theory.construct(cname)
        missing = [v.name for v in construct.variables if (cname, v.name) not in assigned]
        if missing:
            out.append(
                Diagnostic(
                    Severity.WARNING,
                    path,
                    f"unassigned variables of {cname}: {', '.join(missing)}",
                    archetype.span,
                )
            )
    return out


def is_consistent(cell: HypothesisCell, archetype: Archetype) -> bool:
    """Every bound variable is either unassigned or assigned the bound token."""
    assigned = archetype.as_dict()
    return all(assigned.get(b.key, b.token) == b.token for b in cell.bindings)


def consistent_cells(cells: Iterable[HypothesisCell], archetype: Archetype) -> list[HypothesisCell]:
    return [c for c in cells if is_consistent(c, archetype)]


def select_for_archetype(
    hypotheses: Sequence[RefinedHypothesis], archetype: Archetype
) -> list[tuple[RefinedHypothesis, list[str]]]:
    """Retained hypotheses with at least one archetype-consistent cell, sorted by id."""
    selected = []
    for h in hypotheses:
        if not h.retained:
            continue
        matched = [c.id for c in consistent_cells(h.cells, archetype)]
        if matched:
            selected.append((h, matched))
    return sorted(selected, key=lambda pair: id_key(pair[0].id))
