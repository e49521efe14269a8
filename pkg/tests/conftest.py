import pytest
from hypothesis import HealthCheck, settings

from rmhsbm.hierarchy import Motif, HierarchySpec, RootedTree

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Tree of the colour example: green root; purple and orange below it;
# red and blue under purple; yellow under orange.
GREEN, PURPLE, ORANGE, RED, BLUE, YELLOW = range(6)


@pytest.fixture
def colour_tree():
    return RootedTree((-1, GREEN, GREEN, PURPLE, PURPLE, ORANGE))


def star_spec(k, size=3):
    """Root with k leaf children, each its own metablock and motif."""
    tree = RootedTree(tuple([-1] + [0] * k))
    motifs = tuple(Motif(f"m{i}", 1) for i in range(k))
    return HierarchySpec(tree, 1, motifs, {i + 1: f"m{i}" for i in range(k)}, (size,) * k)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
