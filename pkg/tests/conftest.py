import pytest

from odes.bank import QuestionBank
from odes.storage import Database


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible pass/fail line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {verdict}: {item.name}", flush=True)


@pytest.fixture
def db():
    database = Database(":memory:")
    yield database
    database.close()


@pytest.fixture
def bank(db):
    return QuestionBank(db)
