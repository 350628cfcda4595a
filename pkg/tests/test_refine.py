import pytest
from hypothesis import given, settings, strategies as st

from theoryforge.corpus import corpus_rules
from theoryforge.dsl import parse
from theoryforge.grid import enumerate_grid
from theoryforge.model import Construct, IndicatorDomain, Proposition, Theory, Variable, VariableRef
from theoryforge.refine import (
    RefinementError,
    ReviewError,
    ReviewRule,
    Status,
    TemplateError,
    abductive_review,
    merge_gradient,
    parse_rules,
    prune_absence,
    refine,
    statement_for,
)

from conftest import conservation_violations, theories

H11 = (
    "A team culture based on the full sharing of responsibilities makes it possible to move "
    "from eventual collaboration between team members to daily collaboration."
)


def _xy(kind, ordered=True, absent=None, template=None):
    values = ("lo", "mid", "hi")
    return Theory(
        "xy",
        (
            Construct("A", variables=(Variable("X", IndicatorDomain(("a", "b", "none"), absence=absent)),)),
            Construct("B", variables=(Variable("Y", IndicatorDomain(values, values if ordered else None)),)),
        ),
        (Proposition("P1", kind, VariableRef("A", "X"), VariableRef("B", "Y"), template=template),),
    )


def test_p1_absence_pruning(t3):
    recs = prune_absence(enumerate_grid(t3, "P1"), t3)
    pruned = {r.id for r in recs if r.status is Status.PRUNED_ABSENCE}
    assert pruned == {"h1.3", "h1.6", "h1.9", "h1.12"}
    assert sum(r.retained for r in recs) == 8
    assert all("minimal or null sharing" in r.rationale for r in recs if not r.retained)


def test_p1_merge(t3):
    g = enumerate_grid(t3, "P1")
    out = merge_gradient(prune_absence(g, t3), g, t3)
    merged = {h.id: h for h in out if h.id.startswith("H")}
    assert {k: v.constituent_cells for k, v in merged.items()} == {
        "H1.1": ["h1.1", "h1.4"],
        "H1.2": ["h1.2", "h1.5"],
        "H1.3": ["h1.7", "h1.10"],
        "H1.4": ["h1.8", "h1.11"],
    }
    assert merged["H1.1"].statement == H11
    assert merged["H1.3"].statement.endswith("from low collaboration between team members to high collaboration.")
    assert all(h.status is Status.MERGED_AWAY for h in out if h.id.startswith("h") and h.id in
               {"h1.1", "h1.2", "h1.4", "h1.5", "h1.7", "h1.8", "h1.10", "h1.11"})


def test_corpus_refinement(t3_refined):
    r = t3_refined
    assert [h.id for h in r.retained()] == ["H1.1", "H1.2", "H1.3", "H1.4"]
    assert [p.id for p, _ in r.excluded] == ["P26", "P27"]
    assert r.status_counts() == {
        "retained": 4, "pruned_absence": 4, "pruned_abductive": 0, "merged_away": 8, "decomposed_away": 0,
    }
    assert conservation_violations(r) == []


def test_determinant_keeps_everything_with_note():
    t = _xy("determinant", absent="none")
    g = enumerate_grid(t, "P1")
    recs = merge_gradient(prune_absence(g, t), g, t)
    assert len(recs) == 9 and all(r.retained for r in recs)
    assert all("determinant" in r.notes[0] for r in recs)
    assert recs[0].statement == "The Y is proportional to the level of X."


def test_categoric_default_statement(t3):
    cell = enumerate_grid(t3, "P1").cell("h1.7")
    assert statement_for(t3, cell, "categoric") == (
        "The presence of responsibility/ownership sharing=full sharing is associated with quality=high."
    )


def test_sequential_needs_ordering():
    t = _xy("sequential", ordered=False)
    g = enumerate_grid(t, "P1")
    with pytest.raises(RefinementError, match="ordering"):
        merge_gradient(prune_absence(g, t), g, t)


def test_unordered_categoric_is_not_merged():
    t = _xy("categoric", ordered=False)
    r = refine(t)
    assert len(r.retained()) == 9


def test_three_value_ordering_shares_middle_cell():
    r = refine(_xy("categoric", absent="none"))
    merged = [h for h in r.hypotheses if len(h.cells) > 1]
    # two adjacent pairs per surviving column
    assert [h.id for h in merged] == ["H1.1", "H1.2", "H1.3", "H1.4"]
    assert merged[0].constituent_cells == ["h1.1", "h1.4"]
    assert merged[1].constituent_cells == ["h1.4", "h1.7"]
    assert conservation_violations(r) == []


def test_bad_template_placeholder():
    t = _xy("categoric", template="From {right_lo} to {nonsense}")
    with pytest.raises(TemplateError, match="nonsense"):
        refine(t)


def test_cell_template_override():
    t = _xy("categoric", ordered=False, template="{left_ind} goes with {right_ind}")
    assert refine(t).hypothesis("h1.1").statement == "a goes with lo"


# -- review rules -----------------------------------------------------------


def test_parse_rules():
    rules = parse_rules(
        '# comment\n'
        'prune cell h1.10 reason "implausible"\n'
        'refute H1.2 reason "contrary interview"  # trailing\n'
        'retain where P1 frequency=daily Team.responsibility_sharing="full sharing" reason "core"\n'
    )
    assert [(r.action, r.target, r.ident, r.line) for r in rules] == [
        ("prune", "cell", "h1.10", 2), ("refute", "hypothesis", "H1.2", 3), ("retain", "where", "P1", 4),
    ]
    assert rules[2].atoms == (("frequency", "daily"), ("Team.responsibility_sharing", "full sharing"))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ('drop H1.1 reason "x"', "expected one of"),
        ("prune H1.1", "reason"),
        ('prune H1.1 reason ""', "required"),
        ('prune where P1 frequency reason "x"', "variable=value"),
        ('prune "unclosed', "<rules>:1: No closing quotation"),
    ],
)
def test_rule_errors(text, fragment):
    with pytest.raises(ReviewError, match=fragment):
        parse_rules(text)


def test_first_match_wins(t3):
    rules = parse_rules(
        'retain H1.1 reason "keep"\n'
        'prune cell h1.1 reason "would prune H1.1"\n'
        'prune where P1 quality=low reason "low quality is uninteresting"\n'
        'refute H1.2 reason "counter-example"\n'
    )
    r = refine(t3, rules)
    assert r.hypothesis("H1.1").retained
    assert "retained on review: keep" in r.hypothesis("H1.1").notes
    assert r.hypothesis("H1.3").status is Status.PRUNED_ABDUCTIVE
    assert r.hypothesis("H1.4").status is Status.PRUNED_ABDUCTIVE
    assert r.hypothesis("H1.2").refuted and r.hypothesis("H1.2").retained
    assert [hits for _, hits in r.audit] == [["H1.1"], [], ["H1.3", "H1.4"], ["H1.2"]]
    assert conservation_violations(r) == []


@pytest.mark.parametrize(
    "text, fragment",
    [
        ('prune H9.9 reason "x"', "unknown hypothesis"),
        ('prune cell h1.99 reason "x"', "unknown cell"),
        ('prune where P7 frequency=daily reason "x"', "unknown"),
        ('prune where P1 colour=red reason "x"', "not a variable"),
        ('prune where P1 frequency=hourly reason "x"', "not an indicator"),
    ],
)
def test_review_rejects_unknown_targets(t3, text, fragment):
    with pytest.raises(ReviewError, match=fragment):
        refine(t3, parse_rules(text))


def test_review_ignores_non_live(t3):
    r = refine(t3, [ReviewRule("prune", "cell", "h1.3", (), "already gone")])
    assert r.hypothesis("h1.3").status is Status.PRUNED_ABSENCE
    assert r.hypothesis("h1.3").rationale.startswith("Team.responsibility_sharing")


def test_corpus_rules_parse(t3):
    rules = parse_rules(corpus_rules("t3"))
    assert [r.ident for r in rules] == ["H1.1"]
    assert len(refine(t3, rules).retained()) == 4


def test_parallel_matches_serial(t3):
    assert refine(t3, workers=4).hypotheses == refine(t3).hypotheses


@settings(max_examples=200, deadline=None)
@given(theories(templates=False, full_order=True), st.data())
def test_conservation_with_random_pruning(theory, data):
    base = refine(theory)
    live = [h.id for h in base.hypotheses if h.retained]
    chosen = data.draw(st.lists(st.sampled_from(live), unique=True, max_size=3)) if live else []
    rules = [ReviewRule("prune", "hypothesis", hid, (), "random", 0) for hid in chosen]
    r = refine(theory, rules)
    assert conservation_violations(r) == []
    assert {h.id for h in r.hypotheses if h.status is Status.PRUNED_ABDUCTIVE} == set(chosen)


def test_corpus_text_refines_identically(t3):
    from theoryforge.dsl import serialize

    assert refine(parse(serialize(t3))).hypotheses == refine(t3).hypotheses
