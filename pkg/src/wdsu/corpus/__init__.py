"""Bundled example programs.

``equiv/`` holds old/new pairs meant to be behaviorally equivalent and
``classes/`` holds pairs for each update class plus rejected variants.
"""
from __future__ import annotations

from importlib import resources

from ..lang import parse_program


def _root():
    return resources.files(__name__)


def source(rel: str) -> str:
    return (_root() / rel).read_text()


def load(rel: str):
    return parse_program(source(rel))


def path(rel: str) -> str:
    return str(_root() / rel)


def pair_names(group: str) -> list:
    return sorted(f.name[:-len(".old.w")] for f in (_root() / group).iterdir()
                  if f.name.endswith(".old.w"))


def pairs(group: str = "equiv") -> list:
    """(name, old, new) for every complete pair of ``group``."""
    return [(n, load(f"{group}/{n}.old.w"), load(f"{group}/{n}.new.w")) for n in pair_names(group)]
