"""Bundled example grammars."""
from __future__ import annotations

from importlib import resources

from .grammar import Grammar, parse_grammar

NAMES = ("tree", "bow", "star", "chain", "pair", "rootless", "caterpillar", "ring", "diamond", "fork")


def text(name: str) -> str:
    if name not in NAMES:
        raise KeyError(f"no bundled grammar {name!r}; choose from {', '.join(NAMES)}")
    return resources.files(__package__).joinpath("corpus").joinpath(f"{name}.grammar").read_text()


def load(name: str) -> Grammar:
    return parse_grammar(text(name))
