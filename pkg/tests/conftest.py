import numpy as np
import pytest

from mixchart.distributions import GenericComponentMoments, MixtureShiftSpec


def random_mixture(rng, zeta=None):
    return MixtureShiftSpec(
        zeta=float(rng.uniform(0, 1)) if zeta is None else zeta,
        xi=float(rng.uniform(0.1, 0.9)),
        delta=float(rng.uniform(0.2, 5.0)),
        jump_scale=float(rng.uniform(0.5, 3.0)),
    )


def random_generic(rng):
    return GenericComponentMoments(
        m_x=float(rng.uniform(0, 4)),
        v_x=float(rng.uniform(0, 6)),
        m_y=float(rng.uniform(0, 4)),
        v_y=float(rng.uniform(0, 6)),
        zeta=float(rng.uniform(0, 1)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; call with (ok, detail) before asserting."""

    def record(ok, detail):
        _ACCEPTANCE[request.node.name] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} {request.node.name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
