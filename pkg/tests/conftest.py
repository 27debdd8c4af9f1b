import numpy as np
import pytest

from leanci import sandwich

_ACCEPTANCE = {}
_IDENTITY = {"fits": 0, "max_err": 0.0}


@pytest.fixture(autouse=True, scope="session")
def _check_sandwich_identity():
    # every sandwich fit in the suite also checks the outer-product identity
    original = sandwich.identity_error

    def tracked(fit, cov):
        err = original(fit, cov)
        _IDENTITY["fits"] += 1
        _IDENTITY["max_err"] = max(_IDENTITY["max_err"], err)
        return err

    sandwich.VERIFY_IDENTITY = True
    sandwich.identity_error = tracked
    yield
    sandwich.VERIFY_IDENTITY = False
    sandwich.identity_error = original


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        tr.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
    tr.write_line(f"sandwich identity checked on {_IDENTITY['fits']} fits this session, "
                  f"max relative error {_IDENTITY['max_err']:.2e}")


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def random_pd(gen, d, cond=10.0):
    q, _ = np.linalg.qr(gen.standard_normal((d, d)))
    lam = np.geomspace(1.0, cond, d)
    return (q * lam) @ q.T
