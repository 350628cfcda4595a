"""Reader and writer for the ``.theory`` text format.

The grammar, in brief::

    theory      := "theory" STRING "{" item* "}"
    item        := construct | proposition | archetype
    construct   := "construct" IDENT STRING? "{" variable* "}"
    variable    := "variable" IDENT STRING? "{" token ("," token)* "}" varclause*
    varclause   := "ordering" "=" token ("<" token)* | "absent" "=" token
    proposition := "proposition" IDENT kind flag? "relates" ref "->" ref
                   "text" STRING ("quote" STRING STRING)* ("template" STRING)?
    kind        := "categoric" | "sequential" | "determinant"
    flag        := "strategic" | "taxonomic"
    ref         := IDENT "." (IDENT | "*")
    archetype   := "archetype" IDENT "{" (IDENT "." IDENT "=" token)* "}"

``#`` starts a line comment. A token is an IDENT or a double-quoted STRING.
The optional STRING after a variable name is its display label.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import (
    KINDS,
    Archetype,
    Construct,
    Diagnostic,
    IndicatorDomain,
    Proposition,
    Quotation,
    Severity,
    SourceSpan,
    Theory,
    Variable,
    VariableRef,
    WILDCARD,
)

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}
_PUNCT = ("->", "{", "}", ",", "=", "<", ".", "*")


class ParseError(Exception):
    """Raised when text cannot be turned into a Theory; carries every error found."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


class _Abort(Exception):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, STRING, PUNCT, EOF
    value: str
    span: SourceSpan

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "STRING":
            return "string"
        return f"'{self.value}'"


def _tokenize(text: str, filename: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def fail(msg: str, ln: int, cl: int):
        raise ParseError([Diagnostic(Severity.ERROR, "lexer", f"lexical error: {msg}", SourceSpan(filename, ln, cl))])

    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r\f\v":
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = SourceSpan(filename, line, col)
        if ch == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n or text[j] == "\n":
                    fail("unterminated string", start.line, start.column)
                c = text[j]
                if c == '"':
                    break
                if c == "\\":
                    esc = text[j + 1] if j + 1 < n else ""
                    if esc not in _ESCAPES:
                        fail(f"invalid escape '\\{esc}'", line, col + (j - i))
                    buf.append(_ESCAPES[esc])
                    j += 2
                    continue
                buf.append(c)
                j += 1
            tokens.append(Token("STRING", "".join(buf), start))
            col += j + 1 - i
            i = j + 1
            continue
        m = IDENT_RE.match(text, i)
        if m:
            word = m.group()
            # "a->b": the dash belongs to the arrow, not the identifier
            arrow = text.find("->", i, m.end() + 1)
            if arrow != -1:
                word = text[i:arrow]
            if word:
                tokens.append(Token("IDENT", word, start))
                i += len(word)
                col += len(word)
                continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("PUNCT", p, start))
                i += len(p)
                col += len(p)
                break
        else:
            fail(f"unexpected character {ch!r}", line, col)
    if col == 1 and line > 1:
        # keep the end-of-input span on the last real line
        line -= 1
        col = len(text.split("\n")[line - 1]) + 1
    tokens.append(Token("EOF", "", SourceSpan(filename, line, col)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.toks = tokens
        self.pos = 0
        self.filename = filename
        self.errors: list[Diagnostic] = []

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, value: str, kind: str = "IDENT") -> bool:
        return self.tok.kind == kind and self.tok.value == value

    def at_punct(self, value: str) -> bool:
        return self.at(value, "PUNCT")

    def syntax_error(self, expected: list[str]):
        exp = expected[0] if len(expected) == 1 else "one of " + ", ".join(expected)
        self.errors.append(
            Diagnostic(
                Severity.ERROR,
                "parser",
                f"syntax error: expected {exp}, found {self.tok.describe()}",
                self.tok.span,
            )
        )
        raise _Abort

    def duplicate(self, what: str, name: str, span: SourceSpan):
        self.errors.append(Diagnostic(Severity.ERROR, "parser", f"duplicate {what} '{name}'", span))

    def keyword(self, word: str) -> Token:
        if not self.at(word):
            self.syntax_error([f"'{word}'"])
        return self.advance()

    def punct(self, p: str) -> Token:
        if not self.at_punct(p):
            self.syntax_error([f"'{p}'"])
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            self.syntax_error([what])
        return self.advance()

    def string(self, what: str = "string") -> str:
        if self.tok.kind != "STRING":
            self.syntax_error([what])
        return self.advance().value

    def token_value(self) -> str:
        if self.tok.kind not in ("IDENT", "STRING"):
            self.syntax_error(["indicator token"])
        return self.advance().value.strip()

    # -- grammar --

    def theory(self) -> Theory:
        start = self.keyword("theory")
        name = self.string("theory name string")
        self.punct("{")
        constructs, props, archs = [], [], []
        seen: dict[str, set[str]] = {"construct": set(), "proposition": set(), "archetype": set()}
        while not self.at_punct("}"):
            if self.at("construct"):
                item = self.construct()
                bucket, kind, key = constructs, "construct", item.name
            elif self.at("proposition"):
                item = self.proposition()
                bucket, kind, key = props, "proposition", item.id
            elif self.at("archetype"):
                item = self.archetype()
                bucket, kind, key = archs, "archetype", item.name
            else:
                self.syntax_error(["'construct'", "'proposition'", "'archetype'", "'}'"])
            if key in seen[kind]:
                self.duplicate(f"{kind} name" if kind != "proposition" else "proposition id", key, item.span)
            seen[kind].add(key)
            bucket.append(item)
        self.punct("}")
        if self.tok.kind != "EOF":
            self.syntax_error(["end of input"])
        return Theory(name, tuple(constructs), tuple(props), tuple(archs), span=start.span)

    def construct(self) -> Construct:
        self.keyword("construct")
        name = self.ident("construct name")
        definition = self.advance().value if self.tok.kind == "STRING" else ""
        self.punct("{")
        variables: list[Variable] = []
        names: set[str] = set()
        while not self.at_punct("}"):
            if not self.at("variable"):
                self.syntax_error(["'variable'", "'}'"])
            v = self.variable()
            if v.name in names:
                self.duplicate("variable", f"{name.value}.{v.name}", v.span)
            names.add(v.name)
            variables.append(v)
        self.punct("}")
        return Construct(name.value, definition, tuple(variables), span=name.span)

    def variable(self) -> Variable:
        self.keyword("variable")
        name = self.ident("variable name")
        label = self.advance().value if self.tok.kind == "STRING" else ""
        self.punct("{")
        values = [self.token_value()]
        while self.at_punct(","):
            self.advance()
            values.append(self.token_value())
        self.punct("}")
        seen: set[str] = set()
        for v in values:
            if v in seen:
                self.duplicate("indicator", f"{name.value}={v}", name.span)
            seen.add(v)
        ordering = absence = None
        while self.at("ordering") or self.at("absent"):
            clause = self.advance()
            self.punct("=")
            if clause.value == "ordering":
                if ordering is not None:
                    self.duplicate("clause", "ordering", clause.span)
                ordering = [self.token_value()]
                while self.at_punct("<"):
                    self.advance()
                    ordering.append(self.token_value())
                ordering = tuple(ordering)
            else:
                if absence is not None:
                    self.duplicate("clause", "absent", clause.span)
                absence = self.token_value()
        return Variable(name.value, IndicatorDomain(tuple(values), ordering, absence), label, span=name.span)

    def ref(self) -> VariableRef:
        construct = self.ident("construct name")
        self.punct(".")
        if self.at_punct("*"):
            self.advance()
            return VariableRef(construct.value, WILDCARD)
        if self.tok.kind != "IDENT":
            self.syntax_error(["variable name", "'*'"])
        return VariableRef(construct.value, self.advance().value)

    def proposition(self) -> Proposition:
        self.keyword("proposition")
        pid = self.ident("proposition id")
        if not (self.tok.kind == "IDENT" and self.tok.value in KINDS):
            self.syntax_error([f"'{k}'" for k in KINDS])
        kind = self.advance().value
        strategic = True
        if self.at("strategic") or self.at("taxonomic"):
            strategic = self.advance().value == "strategic"
        self.keyword("relates")
        left = self.ref()
        self.punct("->")
        right = self.ref()
        self.keyword("text")
        text = self.string("proposition text string")
        quotes = []
        while self.at("quote"):
            self.advance()
            source = self.string("quotation source string")
            quotes.append(Quotation(source, self.string("quotation excerpt string")))
        template = None
        if self.at("template"):
            self.advance()
            template = self.string("template string")
        return Proposition(pid.value, kind, left, right, text, strategic, tuple(quotes), template, span=pid.span)

    def archetype(self) -> Archetype:
        self.keyword("archetype")
        name = self.ident("archetype name")
        self.punct("{")
        assignments = []
        keys: set[tuple[str, str]] = set()
        while not self.at_punct("}"):
            if self.tok.kind != "IDENT":
                self.syntax_error(["construct name", "'}'"])
            c = self.advance()
            self.punct(".")
            v = self.ident("variable name")
            self.punct("=")
            key = (c.value, v.value)
            if key in keys:
                self.duplicate("assignment", f"{c.value}.{v.value}", c.span)
            keys.add(key)
            assignments.append((key, self.token_value()))
        self.punct("}")
        return Archetype(name.value, tuple(assignments), span=name.span)


def parse(source: str, filename: str = "<input>") -> Theory:
    """Parse theory text. Raises :class:`ParseError` listing every problem found."""
    if source.startswith("\ufeff"):
        source = source[1:]
    tokens = _tokenize(source, filename)
    p = _Parser(tokens, filename)
    if tokens[0].kind == "EOF":
        raise ParseError([Diagnostic(Severity.ERROR, "parser", "syntax error: expected 'theory'", tokens[0].span)])
    try:
        theory = p.theory()
    except _Abort:
        raise ParseError(p.errors) from None
    if p.errors:
        raise ParseError(p.errors)
    return theory


# -- writer -----------------------------------------------------------------


def quote(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f'"{out}"'


def _token(tok: str) -> str:
    return tok if IDENT_RE.fullmatch(tok) else quote(tok)


def _ident(name: str) -> str:
    if not IDENT_RE.fullmatch(name):
        raise ValueError(f"'{name}' cannot be written as an identifier")
    return name


def _ref(ref: VariableRef) -> str:
    var = ref.variable if ref.is_wildcard else _ident(ref.variable)
    return f"{_ident(ref.construct)}.{var}"


def serialize(theory: Theory) -> str:
    """Render a theory in canonical layout; ``parse`` reads it back unchanged."""
    lines = [f"theory {quote(theory.name)} {{"]
    for c in theory.constructs:
        head = f"  construct {_ident(c.name)}"
        if c.definition:
            head += f" {quote(c.definition)}"
        lines.append(head + " {")
        for v in c.variables:
            head = f"    variable {_ident(v.name)}"
            if v.label:
                head += f" {quote(v.label)}"
            lines.append(f"{head} {{ {', '.join(_token(t) for t in v.domain.values)} }}")
            if v.domain.ordering:
                lines.append(f"      ordering = {' < '.join(_token(t) for t in v.domain.ordering)}")
            if v.domain.absence is not None:
                lines.append(f"      absent = {_token(v.domain.absence)}")
        lines.append("  }")
    for p in theory.propositions:
        flag = "strategic" if p.strategic else "taxonomic"
        lines.append(
            f"  proposition {_ident(p.id)} {p.kind} {flag} relates {_ref(p.left)} -> {_ref(p.right)}"
        )
        lines.append(f"    text {quote(p.text)}")
        for q in p.quotes:
            lines.append(f"    quote {quote(q.source)} {quote(q.excerpt)}")
        if p.template is not None:
            lines.append(f"    template {quote(p.template)}")
    for a in theory.archetypes:
        lines.append(f"  archetype {_ident(a.name)} {{")
        for (c, v), tok in a.assignments:
            lines.append(f"    {_ident(c)}.{_ident(v)} = {_token(tok)}")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
