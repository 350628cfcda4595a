"""Hypothesis grids: one cell per distinct pairing of indicator values.

Columns are the left variable's indicators; rows are (right variable,
indicator) pairs stacked block by block. Cells are numbered row-major, so the
first row reads ``h1.1 h1.2 h1.3`` and the second starts at ``h1.4``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .model import Proposition, Theory, resolve


class EnumerationError(ValueError):
    pass


class TaxonomicProposition(EnumerationError):
    """The proposition is flagged taxonomic and gets no grid."""


@dataclass(frozen=True)
class Binding:
    construct: str
    variable: str
    token: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.construct, self.variable)

    def __str__(self) -> str:
        return f"{self.construct}.{self.variable}={self.token}"


@dataclass(frozen=True)
class HypothesisCell:
    id: str
    proposition: str
    left: Binding
    right: Binding
    row: int
    column: int

    @property
    def bindings(self) -> tuple[Binding, Binding]:
        return (self.left, self.right)


@dataclass(frozen=True)
class HypothesisGrid:
    proposition: str
    left_variable: tuple[str, str]
    columns: tuple[str, ...]
    rows: tuple[tuple[tuple[str, str], str], ...]
    cells: tuple[HypothesisCell, ...]
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._index.update((c.id, c) for c in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def cell(self, cell_id: str) -> HypothesisCell:
        return self._index[cell_id]

    def at(self, row: int, column: int) -> HypothesisCell:
        return self.cells[row * len(self.columns) + column]

    def to_dict(self) -> dict:
        return {
            "proposition": self.proposition,
            "left": f"{self.left_variable[0]}.{self.left_variable[1]}",
            "columns": list(self.columns),
            "rows": [{"variable": f"{c}.{v}", "value": tok} for (c, v), tok in self.rows],
            "cells": [
                {
                    "id": c.id,
                    "row": c.row,
                    "column": c.column,
                    "left": {"variable": f"{c.left.construct}.{c.left.variable}", "value": c.left.token},
                    "right": {"variable": f"{c.right.construct}.{c.right.variable}", "value": c.right.token},
                }
                for c in self.cells
            ],
        }


def _build(theory: Theory, prop: Proposition) -> HypothesisGrid:
    if prop.left.is_wildcard:
        raise EnumerationError(
            f"{prop.id}: left side '{prop.left}' is a wildcard; write one proposition per left variable"
        )
    (lc, lv), = resolve(theory, prop.left)
    columns = lv.domain.values
    rows = [
        ((rc.name, rv.name), tok)
        for rc, rv in resolve(theory, prop.right)
        for tok in rv.domain.values
    ]
    cells = []
    for r, ((rc, rv), rtok) in enumerate(rows):
        for c, ltok in enumerate(columns):
            k = r * len(columns) + c + 1
            cells.append(
                HypothesisCell(
                    id=f"h{prop.ordinal}.{k}",
                    proposition=prop.id,
                    left=Binding(lc.name, lv.name, ltok),
                    right=Binding(rc, rv, rtok),
                    row=r,
                    column=c,
                )
            )
    return HypothesisGrid(prop.id, (lc.name, lv.name), tuple(columns), tuple(rows), tuple(cells))


def enumerate_grid(theory: Theory, proposition_id: str) -> HypothesisGrid:
    try:
        prop = theory.proposition(proposition_id)
    except KeyError as exc:
        raise EnumerationError(str(exc.args[0])) from None
    if not prop.strategic:
        raise TaxonomicProposition(f"{prop.id} is taxonomic; no hypotheses are derived from it")
    return _build(theory, prop)


@dataclass
class EnumerationSummary:
    grids: list[HypothesisGrid]
    skipped: list[tuple[str, str]]  # (proposition id, reason)
    failed: list[tuple[str, str]]

    @property
    def cell_count(self) -> int:
        return sum(len(g) for g in self.grids)


def enumerate_all(theory: Theory, workers: int | None = None) -> EnumerationSummary:
    """Grid every strategic proposition, keeping declaration order."""
    strategic = [p for p in theory.propositions if p.strategic]
    skipped = [(p.id, "taxonomic") for p in theory.propositions if not p.strategic]

    def attempt(p):
        try:
            return _build(theory, p), None
        except (EnumerationError, LookupError) as exc:
            return None, str(exc)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(attempt, strategic))
    else:
        results = [attempt(p) for p in strategic]
    grids = [g for g, _ in results if g is not None]
    failed = [(p.id, e) for p, (_, e) in zip(strategic, results) if e is not None]
    return EnumerationSummary(grids, skipped, failed)


def render_table(grid: HypothesisGrid, theory: Theory, highlight: set[str] = frozenset()) -> str:
    """Plain-text rendering laid out like a printed hypothesis table.

    Cells in ``highlight`` are marked with ``*``.
    """
    prop = theory.proposition(grid.proposition)
    lc, lv = grid.left_variable
    left_label = theory.lookup(lc, lv).display
    head = [[f"{prop.id} - {prop.kind}", "", ""], ["", "", ""], ["", "", ""]]
    body = []
    prev_c = prev_v = None
    for r, ((rc, rv), tok) in enumerate(grid.rows):
        label = theory.lookup(rc, rv).display
        body.append(
            [rc if rc != prev_c else "", label if (rc, rv) != prev_v else "", tok]
            + [
                ("*" if grid.at(r, c).id in highlight else "") + grid.at(r, c).id
                for c in range(len(grid.columns))
            ]
        )
        prev_c, prev_v = rc, (rc, rv)
    ncols = len(grid.columns)
    top = [[lc] + [""] * (ncols - 1), [left_label] + [""] * (ncols - 1), list(grid.columns)]
    rows = [h + t for h, t in zip(head, top)] + body
    widths = [max(len(row[i]) for row in rows) for i in range(3 + ncols)]
    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    out = [sep]
    for i, row in enumerate(rows):
        out.append("| " + " | ".join(cell.ljust(w) for cell, w in zip(row, widths)) + " |")
        if i == 2 or i == len(rows) - 1:
            out.append(sep)
    if not grid.rows:
        out.append(f"(no rows: {prop.right} has no variables)")
    return "\n".join(out) + "\n"
