from __future__ import annotations

import pytest
from hypothesis import strategies as st

from theoryforge.corpus import load_corpus
from theoryforge.model import (
    KINDS,
    Archetype,
    Construct,
    IndicatorDomain,
    Proposition,
    Quotation,
    Theory,
    Variable,
    VariableRef,
)
from theoryforge.refine import refine

# -- fixtures ----------------------------------------------------------------


@pytest.fixture(scope="session")
def t3():
    return load_corpus("t3")


@pytest.fixture(scope="session")
def t3_refined(t3):
    return refine(t3)


# -- random theories ---------------------------------------------------------

_ALPHA = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_"
idents = st.builds(
    str.__add__, st.sampled_from(_ALPHA), st.text(alphabet=_ALPHA + "0123456789", max_size=6)
)
# printable text with quotes, backslashes, spaces and non-ASCII
free_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc"), blacklist_characters="\n\r")
    | st.sampled_from(['"', "\\", " ", "\t", "{", "}", "#"]),
    max_size=20,
)
tokens = free_text.map(str.strip).filter(bool)
# cheaper alphabet for properties where text content does not matter
plain_tokens = st.builds(str.__add__, st.sampled_from("abcdxyz"), st.text(alphabet="abcdxyz -", max_size=5)).map(str.strip)


@st.composite
def domains(draw, full_order=False, token=tokens):
    values = draw(st.lists(token, min_size=1, max_size=5, unique=True))
    ordering = None
    if full_order or draw(st.booleans()):
        ordering = tuple(draw(st.permutations(values)))
    absence = draw(st.none() | st.sampled_from(values))
    return IndicatorDomain(tuple(values), ordering, absence)


@st.composite
def theories(draw, templates=True, full_order=None, plain=False):
    """Valid theories within the enumerator's size bounds.

    ``plain`` swaps free text for empty strings and a small token alphabet.
    """
    text = st.just("") if plain else free_text
    token = plain_tokens if plain else tokens
    if full_order is None:
        full_order = draw(st.booleans())
    cnames = draw(st.lists(idents, max_size=5, unique=True))
    constructs = []
    for cname in cnames:
        vnames = draw(st.lists(idents, max_size=4, unique=True))
        constructs.append(
            Construct(
                cname,
                draw(text),
                tuple(
                    Variable(v, draw(domains(full_order, token)), draw(st.sampled_from(["", "a label", "x/y z"])))
                    for v in vnames
                ),
            )
        )
    singles = [VariableRef(c.name, v.name) for c in constructs for v in c.variables]
    refs = singles + [VariableRef(c.name, "*") for c in constructs]

    props = []
    for pid in draw(st.lists(st.integers(1, 99), max_size=4, unique=True)):
        strategic = bool(singles) and draw(st.booleans())
        left = draw(st.sampled_from(singles)) if strategic else draw(st.sampled_from(refs)) if refs else None
        if left is None:
            continue
        template = None
        if templates and draw(st.booleans()):
            template = draw(text)
        props.append(
            Proposition(
                id=f"P{pid}",
                kind=draw(st.sampled_from(KINDS)),
                left=left,
                right=draw(st.sampled_from(refs)),
                text=draw(text),
                strategic=strategic,
                quotes=tuple(
                    Quotation(s, e)
                    for s, e in draw(st.lists(st.tuples(text, token), max_size=2))
                ),
                template=template,
            )
        )

    archetypes = []
    for name in draw(st.lists(idents, max_size=2, unique=True)):
        chosen = draw(st.lists(st.sampled_from(singles), unique=True, max_size=4)) if singles else []
        assignments = []
        for ref in chosen:
            c = next(c for c in constructs if c.name == ref.construct)
            var = c.variable(ref.variable)
            assignments.append(((ref.construct, ref.variable), draw(st.sampled_from(var.domain.values))))
        archetypes.append(Archetype(name, tuple(assignments)))

    return Theory(draw(text), tuple(constructs), tuple(props), tuple(archetypes))


# -- acceptance summary -------------------------------------------------------

_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_ac"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _criteria[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        terminalreporter.write_line(f"{_criteria[name]}  {name}")


# -- pipeline oracles ---------------------------------------------------------


def conservation_violations(refinement) -> list[str]:
    """Check that every enumerated cell ends in exactly one terminal bucket.

    Each cell has exactly one per-cell record. Retained and pruned cells count
    once. A merged_away cell is carried by at least one merged hypothesis, and
    only merged_away cells are carried by merged hypotheses.
    """
    problems = []
    per_cell = {}
    for h in refinement.hypotheses:
        if h.parent is None and len(h.cells) == 1 and h.id == h.cells[0].id:
            if h.id in per_cell:
                problems.append(f"{h.id}: two per-cell records")
            per_cell[h.id] = h
    merged_carriers: dict[str, list[str]] = {}
    for h in refinement.hypotheses:
        if len(h.cells) > 1:
            for c in h.cells:
                merged_carriers.setdefault(c.id, []).append(h.id)
    total = 0
    for g in refinement.grids:
        for c in g.cells:
            rec = per_cell.get(c.id)
            if rec is None:
                problems.append(f"{c.id}: no record")
                continue
            total += 1
            merged = rec.status.value == "merged_away"
            if merged != (c.id in merged_carriers):
                problems.append(f"{c.id}: status {rec.status.value} but carriers {merged_carriers.get(c.id)}")
    if total != refinement.cell_count or len(per_cell) != refinement.cell_count:
        problems.append(f"bucket total {total}/{len(per_cell)} != grid size {refinement.cell_count}")
    return problems
