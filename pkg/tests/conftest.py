"""Shared scenario builders for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uwalink import Scenario, parse_scenario


def make_link_doc(distance_m: float = 357.0, **overrides) -> dict:
    """Single transmitter at the given range from the sink, same depth."""
    doc = {
        "name": f"link{int(distance_m)}",
        "topology": {
            "positions": {"sink": [0.0, 0.0, -10.0],
                          "n1": [float(distance_m), 0.0, -10.0]},
            "parents": {"n1": "sink"},
            "sink": "sink",
        },
        "policy": "bilevel",
        "seed": 7,
    }
    doc.update(overrides)
    return doc


def make_link(distance_m: float = 357.0, **overrides) -> Scenario:
    return parse_scenario(make_link_doc(distance_m, **overrides))


@pytest.fixture
def link_scenario() -> Scenario:
    return make_link()
