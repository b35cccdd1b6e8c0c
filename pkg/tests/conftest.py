import pytest

from hetpath import ModelConfig, Scenario, kbps, mbps, ms

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((name, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def two_link():
    return Scenario.build([mbps(1), mbps(2)], [ms(10), ms(20)])


@pytest.fixture
def small_config():
    return ModelConfig(transfer_bytes=50_000)


@pytest.fixture
def slow_links():
    return Scenario.build([kbps(100)] * 3, [ms(5), ms(25), ms(45)], ModelConfig(transfer_bytes=30_000))
