import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from steersim.channel import Antennas, Drop, LinkBudget, budget_normalized, seeded_drop

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SEED = 424242


def drops(n, gamma_db=5.0, xi=1.0, antennas=None, n_mbs=1, n_pbs=1, seed=SEED, point=0):
    budget = budget_normalized(gamma_db, xi)
    return [seeded_drop(budget, seed, point, k, antennas, n_mbs, n_pbs) for k in range(n)]


def handmade_drop(h0, h10, p0e=1.0, p1e=1.0, sigma2=1.0, precoders=None, powers=None, n_pbs=1):
    """Drop with explicit channels; the MBS beam defaults to e_1."""
    h0 = np.asarray(h0, dtype=complex)
    h10 = np.asarray(h10, dtype=complex)
    n_t1 = h10.shape[1]
    if precoders is None:
        precoders = (np.eye(n_t1, dtype=complex)[:, 0],)
    if powers is None:
        powers = tuple(p1e / len(precoders) for _ in precoders)
    return Drop(h0, np.eye(n_t1, dtype=complex), h10, LinkBudget(p0e, p1e, sigma2),
                tuple(precoders), tuple(powers), n_pbs)


@pytest.fixture
def drop():
    return seeded_drop(budget_normalized(5.0, 1.0), SEED, 0, 0)


@pytest.fixture
def wide_antennas():
    return Antennas(n_t0=4, n_t1=3, n_r0=3)


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
