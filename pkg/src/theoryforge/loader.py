"""Read theories and rule files from disk or from the bundled corpus."""

from __future__ import annotations

from pathlib import Path

from . import model
from .corpus import corpus_text
from .dsl import ParseError, parse
from .model import Diagnostic, Severity, Theory


class TheoryLoadError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


def read_theory(
    path: str | Path | None = None,
    corpus: str | None = None,
    input_format: str | None = None,
) -> tuple[Theory, list[Diagnostic]]:
    """Parse and validate; returns the theory with its warnings.

    ``input_format`` is ``theory`` or ``json``; by default a ``.json``
    suffix selects JSON. Raises TheoryLoadError on any error diagnostic.
    """
    if corpus is not None:
        text, name = corpus_text(corpus), f"{corpus}.theory"
    else:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise TheoryLoadError([Diagnostic(Severity.ERROR, str(p), f"cannot read: {exc}")]) from None
        name = str(p)
        if input_format is None:
            input_format = "json" if p.suffix == ".json" else "theory"
    if input_format == "json":
        try:
            theory = model.loads(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise TheoryLoadError([Diagnostic(Severity.ERROR, name, f"invalid theory JSON: {exc}")]) from None
    else:
        try:
            theory = parse(text, filename=name)
        except ParseError as exc:
            raise TheoryLoadError(exc.diagnostics) from None
    diagnostics = model.validate(theory)
    if model.errors(diagnostics):
        raise TheoryLoadError(diagnostics)
    return theory, diagnostics
