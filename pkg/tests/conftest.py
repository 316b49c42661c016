import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pairwalk.chain import TwoParticleState

settings.register_profile(
    "pairwalk", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("pairwalk")


def random_state(n_sites: int, seed: int) -> TwoParticleState:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n_sites**2) + 1j * rng.normal(size=n_sites**2)
    return TwoParticleState(v / np.linalg.norm(v), n_sites)


def antisymmetric_state(n_sites: int, seed: int) -> TwoParticleState:
    f = random_state(n_sites, seed).matrix
    f = f - f.T
    return TwoParticleState.from_matrix(f / np.linalg.norm(f))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines.items()):
        terminalreporter.write_line(line)
