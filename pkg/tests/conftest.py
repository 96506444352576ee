import numpy as np
import pytest

from gmadlab.gmad import QutritGmadParams, build_qutrit_gmad
from gmadlab.states import Hamiltonian

QUTRIT_H = Hamiltonian((0.0, 0.8, 1.0))

# coherent-ordering state pair and channel couplings used in the Mpemba checks
MPEMBA_RHO = np.array([
    [0.61419885, 0.23993793 - 0.20486506j, 0.14709909 + 0.05359668j],
    [0.23993793 + 0.20486506j, 0.22372136, 0.04471051 + 0.09323805j],
    [0.14709909 - 0.05359668j, 0.04471051 - 0.09323805j, 0.16207979],
])
MPEMBA_SIGMA = np.array([
    [0.61419885, 0.02280222 - 0.30977726j, -0.08634611 + 0.05914107j],
    [0.02280222 + 0.30977726j, 0.22372136, 0.04784115 + 0.00286678j],
    [-0.08634611 - 0.05914107j, 0.04784115 - 0.00286678j, 0.16207979],
])
MPEMBA_COUPLINGS = dict(g10=0.8, g21=0.2, g20=0.1)
MPEMBA_H = Hamiltonian((0.0, 0.5, 1.0))


def qutrit(s1, sbar, alpha0, beta, h=QUTRIT_H, **kw):
    return build_qutrit_gmad(QutritGmadParams(s1, sbar, alpha0, beta, h, **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def capacitance_channel():
    return qutrit(0.5, 0.745, 0.745, 1.0)


# --- acceptance reporting ------------------------------------------------------
# Tests marked @pytest.mark.criterion(n, "title") get one PASS/FAIL line each in
# the terminal summary; details go through the ``criterion_detail`` fixture.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


@pytest.fixture
def criterion_detail(request):
    def record(text):
        request.node.user_properties.append(("detail", text))
        print(text)
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, title = mark.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    _CRITERIA[n] = (title, rep.passed, detail, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail, dur = _CRITERIA[n]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title} ({dur:.1f}s)"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
