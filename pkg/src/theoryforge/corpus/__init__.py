"""Bundled theories. ``load_corpus("t3")`` returns the parsed T3 subset."""

from __future__ import annotations

from importlib import resources

from ..dsl import parse
from ..model import Theory

CORPORA = ("t3",)


class UnknownCorpus(KeyError):
    pass


def corpus_text(name: str, suffix: str = "theory") -> str:
    if name not in CORPORA:
        raise UnknownCorpus(f"unknown corpus '{name}' (available: {', '.join(CORPORA)})")
    return resources.files(__name__).joinpath(f"{name}.{suffix}").read_text(encoding="utf-8")


def load_corpus(name: str) -> Theory:
    return parse(corpus_text(name), filename=f"{name}.theory")


def corpus_rules(name: str) -> str:
    return corpus_text(name, "rules")
