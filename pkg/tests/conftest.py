import pytest

from prodspace import metrics as mx
from prodspace.trade_data import ExportMatrix, TradeRecord

TOY1_VALUES = [[10, 0, 0], [10, 10, 0], [0, 10, 80]]


def toy1_matrix(year=2005):
    return ExportMatrix(year, ("A", "B", "C"), ("p", "q", "r"), TOY1_VALUES)


def toy1_records(year=2005):
    # exporter totals split over importers so aggregation has work to do
    return [
        TradeRecord(year, "A", "B", "p", 4.0),
        TradeRecord(year, "A", "C", "p", 6.0),
        TradeRecord(year, "B", "A", "p", 10.0),
        TradeRecord(year, "B", "C", "q", 7.5),
        TradeRecord(year, "B", "A", "q", 2.5),
        TradeRecord(year, "C", "A", "q", 10.0),
        TradeRecord(year, "C", "A", "r", 30.0),
        TradeRecord(year, "C", "B", "r", 50.0),
        TradeRecord(year, "C", "C", "r", 999.0),  # intra-country, dropped
    ]


@pytest.fixture
def toy1():
    return toy1_matrix()


@pytest.fixture
def toy1_rca(toy1):
    return mx.rca(toy1)


@pytest.fixture
def toy1_m(toy1_rca):
    return mx.binarize(toy1_rca, 1.0)


@pytest.fixture
def toy1_phi(toy1_m):
    return mx.proximity(toy1_m)


def random_exports(rng, max_c=12, max_p=15, zero_frac=0.6):
    nc = int(rng.integers(2, max_c + 1))
    npr = int(rng.integers(2, max_p + 1))
    x = rng.lognormal(0, 2, size=(nc, npr))
    x[rng.random((nc, npr)) < zero_frac] = 0.0
    x[0, 0] += 1.0  # never all-zero
    countries = tuple(f"C{i:02d}" for i in range(nc))
    products = tuple(f"{100000 + 37 * j:06d}" for j in range(npr))
    return ExportMatrix(2005, countries, products, x)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
