"""Exact Fourier-Motzkin elimination with symbolic constants."""

from importlib import resources

from .core import (
    Inequality,
    LinearForm,
    MinMax,
    SymbolicSystem,
    dedupe,
    eliminate,
    expand_minmax,
    implied_by,
    prune_redundant,
    run_pipeline,
    same_inequalities,
)
from .parser import parse_inequality, parse_system

FIXTURES = {"appendix-a": "appendix_a.fm", "appendix-b": "appendix_b.fm"}


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return resources.files(__package__).joinpath("fixtures", FIXTURES[name]).read_text()


def load_fixture(name: str) -> SymbolicSystem:
    return parse_system(fixture_text(name), name=name)


__all__ = [
    "FIXTURES", "Inequality", "LinearForm", "MinMax", "SymbolicSystem", "dedupe", "eliminate",
    "expand_minmax", "fixture_text", "implied_by", "load_fixture", "parse_inequality", "parse_system",
    "prune_redundant", "run_pipeline", "same_inequalities",
]
