import pytest

from uepbcc.construction import build
from uepbcc.degrees import DegreeDistribution, concentrated_check, protection_classes
from uepbcc.experiment import small_code, spec_from_dict


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the hours-long reference-curve regression")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: hours-long Monte Carlo regression")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def code4096():
    return spec_from_dict({"preset": "paper_4096", "seed": 1}).build_code()


@pytest.fixture(scope="session")
def code16():
    return small_code()


@pytest.fixture(scope="session")
def regular36():
    nu = DegreeDistribution({3: 1})
    prof = protection_classes(nu, 16, 0.5, 3)
    return build(nu, concentrated_check(nu, 0.5), prof, seed=1)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(name: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = list(config.stash.get(_ACCEPTANCE_KEY, []))
    for rep in terminalreporter.stats.get("skipped", []):
        if "test_acceptance" in rep.nodeid:
            lines.append(f"SKIP  {rep.nodeid.split('::')[-1]}: slow suite, not run (pass --runslow)")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
