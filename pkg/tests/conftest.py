import pytest

from delta_moments.sigma_delta import DeltaEvaluator, build_sigma_table

BIG_N = 1 << 22     # room for windows [T, 2T] with T up to 2^21


@pytest.fixture(scope="session")
def big_tables():
    """Sieves to 2^22, built lazily once per a for the whole session."""
    cache = {}

    def get(a):
        if a not in cache:
            cache[a] = build_sigma_table(a, BIG_N)
        return cache[a]
    return get


@pytest.fixture(scope="session")
def small_table():
    cache = {}

    def get(a, n=1 << 15):
        if (a, n) not in cache:
            cache[(a, n)] = build_sigma_table(a, n)
        return cache[(a, n)]
    return get


@pytest.fixture(scope="session")
def evaluator(small_table):
    return lambda a, n=1 << 15: DeltaEvaluator(small_table(a, n))


CRITERIA_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    """Record one PASS/FAIL line; the lines are echoed again in the terminal summary."""
    def emit(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        CRITERIA_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
