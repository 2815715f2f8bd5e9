import numpy as np
import pytest

from stochcut import default_paper_instance
from stochcut.instance import build_instance


@pytest.fixture(scope="session")
def steel():
    return default_paper_instance()


def micro_instance(s_max=3, x_max=2, d_max=2, g=None, h_plus=None, h_minus=None):
    """Two items (lengths 3, 5), two patterns: 3 x item 1 and 2 x item 2."""
    return build_instance(
        item_lengths=[3, 5],
        patterns_by_row=[[3, 0], [0, 2]],
        object_length=10,
        s_max=s_max,
        x_max=x_max,
        p=[0.5, 0.5],
        d_min=0,
        d_max=d_max,
        g=[1.0, 0.5] if g is None else g,
        h_plus=[0.3, 0.5] if h_plus is None else h_plus,
        h_minus=[3.0, 5.0] if h_minus is None else h_minus,
        name="micro",
    )


def state_action_pairs(inst):
    from stochcut import dynamics
    return [(tuple(s), tuple(x)) for s in dynamics.enumerate_states(inst)
            for x in dynamics.enumerate_feasible(inst, s)]


def one_hot_pairs(inst):
    """Tabular features: one indicator per feasible (state, decision) pair."""
    pairs = state_action_pairs(inst)
    index = {p: k for k, p in enumerate(pairs)}

    def feat(s, x):
        phi = np.zeros(len(pairs))
        phi[index[(tuple(int(v) for v in s), tuple(int(v) for v in x))]] = 1.0
        return phi

    return pairs, index, feat


@pytest.fixture
def micro():
    return micro_instance()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
