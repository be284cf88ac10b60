from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from pegring.planner import ground_externals, parse_instance


def make_externals(lines):
    return ground_externals(parse_instance("\n".join(f"{l}." for l in lines)))


FIG_EXTERNALS = [
    "reachable(psm1,ring,red)",
    "reachable(psm1,ring,yellow)",
    "reachable(psm1,peg,red)",
    "reachable(psm1,peg,blue)",
    "reachable(psm2,peg,yellow)",
    "reachable(psm2,peg,green)",
    "on(ring,red,peg,grey)",
]


@pytest.fixture
def fig_initial():
    return make_externals(FIG_EXTERNALS)
