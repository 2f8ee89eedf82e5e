import os

import numpy as np
import pytest


def _extended_enabled(config) -> bool:
    if os.environ.get("CIRCULAW_EXTENDED", "") not in ("", "0"):
        return True
    markexpr = config.getoption("-m") or ""
    return "extended" in markexpr and "not extended" not in markexpr


def pytest_collection_modifyitems(config, items):
    if _extended_enabled(config):
        return
    skip = pytest.mark.skip(reason="extended tier: set CIRCULAW_EXTENDED=1 or run with -m extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance report: one line per criterion at the end of the session
# ---------------------------------------------------------------------------

ACCEPTANCE_CRITERIA = 13
_acceptance = {}


def record_criterion(number: int, part: str, ok: bool, detail: str) -> None:
    """Store one measured part of an acceptance criterion and echo it."""
    _acceptance.setdefault(number, []).append((part, bool(ok), detail))
    print(f"criterion {number} [{part}]: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not any(item for item in _acceptance.values()):
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in range(1, ACCEPTANCE_CRITERIA + 1):
        parts = _acceptance.get(k)
        if not parts:
            tr.write_line(f"criterion {k:2d}: NOT RUN (extended tier or deselected)")
            continue
        failed = [p for p, ok, _ in parts if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = "; ".join(f"{p}: {d}" for p, _, d in parts)
        tr.write_line(f"criterion {k:2d}: {status}  {detail}")
