"""Testing protocol: research questions and closed question stubs per hypothesis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .instantiate import select_for_archetype
from .model import Archetype, Theory
from .refine import RefinedHypothesis, id_key
from .trace import TraceGraph, trace


@dataclass(frozen=True)
class Question:
    variable: str  # qualified Construct.variable
    options: tuple[str, ...]
    prompt: str

    def to_dict(self) -> dict:
        return {"variable": self.variable, "options": list(self.options), "prompt": self.prompt}


@dataclass(frozen=True)
class ProtocolEntry:
    proposition: str
    proposition_text: str
    hypothesis: str
    statement: str
    questions: tuple[Question, ...]
    discussion: str
    trace: str
    refuted: bool = False

    def to_dict(self) -> dict:
        return {
            "proposition": self.proposition,
            "proposition_text": self.proposition_text,
            "hypothesis": self.hypothesis,
            "statement": self.statement,
            "questions": [q.to_dict() for q in self.questions],
            "discussion": self.discussion,
            "trace": self.trace,
            "refuted": self.refuted,
        }


@dataclass
class ProtocolDocument:
    theory: str
    entries: list[ProtocolEntry] = field(default_factory=list)
    archetype: str | None = None

    def to_json(self) -> str:
        doc = {"theory": self.theory, "archetype": self.archetype, "entries": [e.to_dict() for e in self.entries]}
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    def to_markdown(self) -> str:
        lines = [f"# Testing protocol: {self.theory}", ""]
        if self.archetype:
            lines += [f"Scenario: archetype `{self.archetype}`.", ""]
        if not self.entries:
            lines += ["No retained hypotheses; nothing to test.", ""]
            return "\n".join(lines)
        current = None
        for e in self.entries:
            if e.proposition != current:
                current = e.proposition
                lines += [f"## {e.proposition}", "", f"> {e.proposition_text}", ""]
            flag = " (refuted by evidence)" if e.refuted else ""
            lines += [f"### {e.hypothesis}{flag}", "", e.statement, ""]
            for i, q in enumerate(e.questions, 1):
                lines.append(f"{i}. {q.prompt}")
            lines += ["", f"Discussion prompt: {e.discussion}", "", f"Trace: `{e.trace}`", ""]
        return "\n".join(lines)


def question_subject(theory: Theory, construct: str, variable: str) -> str:
    """How a variable is named in a question.

    Single-word labels like ``frequency`` get the construct name in front so
    the question stands on its own.
    """
    label = theory.lookup(construct, variable).display
    if " " in label or "/" in label:
        return label
    return f"{construct.lower()} {label}"


def question_stub(theory: Theory, construct: str, variable: str) -> Question:
    options = theory.lookup(construct, variable).domain.values
    subject = question_subject(theory, construct, variable)
    return Question(
        f"{construct}.{variable}",
        tuple(options),
        f"Which best describes {subject}? ({' / '.join(options)})",
    )


def emit_protocol(
    theory: Theory,
    hypotheses: Sequence[RefinedHypothesis],
    graph: TraceGraph,
    archetype: Archetype | None = None,
) -> ProtocolDocument:
    """One entry per retained hypothesis (or per archetype-selected one)."""
    if archetype is not None:
        chosen = [h for h, _ in select_for_archetype(hypotheses, archetype)]
    else:
        chosen = [h for h in hypotheses if h.retained]
    order = {p.id: i for i, p in enumerate(theory.propositions)}
    chosen.sort(key=lambda h: (order[h.proposition], id_key(h.id)))

    doc = ProtocolDocument(theory.name, archetype=archetype.name if archetype else None)
    for h in chosen:
        prop = theory.proposition(h.proposition)
        measured: list[tuple[str, str]] = []
        for c in h.cells:
            for b in c.bindings:
                if b.key not in measured:
                    measured.append(b.key)
        doc.entries.append(
            ProtocolEntry(
                proposition=prop.id,
                proposition_text=prop.text,
                hypothesis=h.id,
                statement=h.statement,
                questions=tuple(question_stub(theory, c, v) for c, v in measured),
                discussion=f'In your experience, how does this hold: "{prop.text}"?',
                trace=trace(graph, h.id).summary(),
                refuted=h.refuted,
            )
        )
    return doc
