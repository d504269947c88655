import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from realizer.compile import compile_term  # noqa: E402
from realizer.core import NAT, Strategy  # noqa: E402
from realizer.corpus import full_corpus  # noqa: E402
from realizer.machine import ALPHA0, FuelExhausted, MachineStuck, MConfig, run  # noqa: E402
from realizer.realizability import normalize  # noqa: E402

_REPORT: dict[int, str] = {}


def report(number: int, passed: bool, detail: str) -> None:
    _REPORT[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_REPORT):
        terminalreporter.write_line(_REPORT[number])


@functools.lru_cache(maxsize=None)
def corpus():
    return tuple(full_corpus())


@functools.lru_cache(maxsize=None)
def machine_runs(strategy: Strategy):
    """One entry per corpus program: a Trace, or the exception the machine raised."""
    out = []
    for p in corpus():
        try:
            out.append(run(MConfig(compile_term(p.term, strategy), ALPHA0)))
        except (MachineStuck, FuelExhausted) as exc:
            out.append(exc)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def realized(strategy: Strategy, pole: str):
    """Realizability results per corpus program (None where the pole does not apply)."""
    out = []
    for p in corpus():
        if pole == "nat" and p.ty != NAT:
            out.append(None)
            continue
        try:
            out.append(normalize(p.term, strategy, pole))
        except Exception as exc:  # recorded, asserted on by the tests
            out.append(exc)
    return tuple(out)


@pytest.fixture(scope="session")
def programs():
    return corpus()
