import pytest

from gpricing.core import LatticeModel, TimeGrid
from gpricing.drivers import (
    make_abs_z,
    make_black_scholes,
    make_borrowing,
    make_discount,
    make_gmu,
    make_short_premium,
    make_zero,
)


@pytest.fixture
def bs_driver():
    return make_black_scholes(0.05, 0.05, 0.2)


@pytest.fixture
def unit_lattice():
    def build(n=10, d=1, T=1.0, **kw):
        return LatticeModel.create(TimeGrid(0.0, T, n), d=d, **kw)

    return build


def builtin_drivers(dim_z=1):
    """The model drivers (constant/test fixtures excluded)."""
    out = [
        make_gmu(2.0, dim_z),
        make_abs_z(1.5, dim_z),
        make_discount(0.05, dim_z),
        make_zero(dim_z),
    ]
    if dim_z == 1:
        out += [
            make_black_scholes(0.05, 0.08, 0.2),
            make_borrowing(0.03, 0.08, 0.06, 0.25),
            make_short_premium(0.02, 0.05, 0.3, 0.5),
        ]
    return out


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one verdict line per acceptance criterion for the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
