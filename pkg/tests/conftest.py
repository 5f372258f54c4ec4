import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from tilezeta.io import BUNDLED, load_system
from tilezeta.substitution import WeightedSubstitution

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def systems():
    return {name: load_system(name) for name in BUNDLED}


COLORS = "abc"


@st.composite
def rational_partitions(draw, length: int, dyadic: bool = False):
    """``length`` positive rationals summing to one."""
    if dyadic:
        parts = [Fraction(1)]
        while len(parts) < length:
            k = draw(st.integers(0, len(parts) - 1))
            half = parts.pop(k) / 2
            parts[k:k] = [half, half]
        return parts
    raw = draw(st.lists(st.integers(1, 7), min_size=length, max_size=length))
    total = sum(raw)
    return [Fraction(r, total) for r in raw]


@st.composite
def exact_systems(draw, max_colors: int = 3, max_len: int = 3, dyadic: bool = False):
    """Random exact-mode substitutions with every rule of length at least two."""
    n = draw(st.integers(1, max_colors))
    alphabet = tuple(COLORS[:n])
    rules = {}
    for a in alphabet:
        length = draw(st.integers(2, max_len))
        colors = draw(st.lists(st.sampled_from(alphabet), min_size=length, max_size=length))
        weights = draw(rational_partitions(length, dyadic))
        rules[a] = tuple(zip(colors, weights))
    return WeightedSubstitution(alphabet, rules)


# acceptance criteria report: one line per criterion after the run
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        results = ACCEPTANCE[n]
        ok = all(r[1] for r in results)
        failed = [f"{label}: {detail}" for label, good, detail in results if not good]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (" + "; ".join(failed) + ")"
        terminalreporter.write_line(line)
