import pytest

from despot.bounds import make_default_policy
from despot.domains import make_domain


@pytest.fixture(scope="session")
def bridge():
    return make_domain("bridge")


@pytest.fixture(scope="session")
def adv2():
    return make_domain("adventurer-2")


@pytest.fixture(scope="session")
def adv50():
    return make_domain("adventurer-50")


@pytest.fixture(scope="session")
def tag():
    return make_domain("tag")


@pytest.fixture(scope="session")
def rs78():
    return make_domain("rocksample-7-8")


def default_for(model):
    return make_default_policy("domain", model)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def _report(tag: str, ok: bool | None, detail: str) -> None:
        status = "NOT RUN" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{tag} {status}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
