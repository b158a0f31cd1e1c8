"""Bundled test networks and a hand-built repetition code."""
from __future__ import annotations

from importlib import resources

from ..design import BnecCode, assemble_code
from ..field import make_field
from ..linalg import Matrix
from ..netgraph import NetworkGraph, load_network

FIXTURES = ("three_path", "butterfly", "delta3")


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return resources.files("bnec.fixtures").joinpath(f"{name}.json").read_text(encoding="utf-8")


def load_fixture(name: str) -> NetworkGraph:
    return load_network(fixture_text(name))


def repetition_code(q: int = 7) -> BnecCode:
    """k=1 over the three-path network: every relay forwards its source symbol.

    G = (1,1,1)^T, K has columns e1, e2, e3 for both the source-side and the
    receiver-side edge of each path, and H^T = [[1,-1,0],[0,1,-1]].
    """
    F = make_field(q)
    g = load_fixture("three_path")
    lev = {1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, 1), 4: (1,), 5: (1,), 6: (1,)}
    m1 = F.neg(1)
    H = Matrix(F, [[1, 0], [m1, 1], [0, m1]])
    return assemble_code(g, 1, F, lev, [(1,), (1,), (1,)], parity={"t": H})
