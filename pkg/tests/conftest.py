import os
from pathlib import Path

import pytest

_RESULTS: dict[str, tuple[str, str]] = {}


class Criterion:
    """Records one acceptance line; the summary prints them in order."""

    def __init__(self, key: str, title: str):
        self.key = key
        self.title = title

    def passed(self, detail: str) -> None:
        _RESULTS[self.key] = ("PASS", f"{self.title}: {detail}")

    def failed(self, detail: str) -> None:
        _RESULTS[self.key] = ("FAIL", f"{self.title}: {detail}")

    def skipped(self, detail: str) -> None:
        _RESULTS[self.key] = ("SKIP", f"{self.title}: {detail}")

    def check(self, ok: bool, detail: str) -> None:
        (self.passed if ok else self.failed)(detail)
        assert ok, f"{self.title}: {detail}"


@pytest.fixture
def criterion(request):
    def make(key: str, title: str) -> Criterion:
        c = Criterion(key, title)
        c.failed("did not complete")
        return c
    return make


@pytest.fixture(scope="session")
def data_dir() -> Path | None:
    raw = os.environ.get("LGLP_DATA_DIR")
    return Path(raw) if raw else None


def _sort_key(key: str):
    # "5-8a" style keys (replacements for a range) sort after the range
    nums = [int("".join(ch for ch in part if ch.isdigit()) or 99) for part in key.split("-")]
    return (nums[-1] + (0.5 if len(nums) > 1 else 0), key)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=_sort_key):
        status, line = _RESULTS[key]
        terminalreporter.write_line(f"[{status}] {key} {line}")
