import numpy as np
import pytest
from scipy.stats import unitary_group

from lgps import Instrument, Scenario


def random_density(rng, d, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def haar_unitary(rng, d):
    return unitary_group.rvs(d, random_state=rng)


def random_basis(rng, d):
    return haar_unitary(rng, d)


def random_instrument(rng, d, values=None):
    u = random_basis(rng, d)
    return Instrument.projective([u[:, i] for i in range(d)], values)


def random_scenario(rng, d=2, de=2, n_steps=2):
    return Scenario(
        random_density(rng, d),
        random_density(rng, de),
        tuple(haar_unitary(rng, d * de) for _ in range(n_steps)),
    )


def random_plan(rng, d=2, n=3):
    vals = (1.0, -1.0) if d == 2 else None
    return [random_instrument(rng, d, vals) for _ in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
