import collections

import pytest

_CRITERIA = collections.defaultdict(list)


class _Recorder:
    def __call__(self, number: int, label: str, ok: bool, detail: str = "") -> bool:
        _CRITERIA[number].append((label, bool(ok), detail))
        return bool(ok)


@pytest.fixture(scope="session")
def criterion():
    """Record the outcome of an acceptance criterion (or one of its parts)."""
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        parts = _CRITERIA[k]
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}")
        for label, good, detail in parts:
            tr.write_line(f"    [{'ok' if good else 'FAILED'}] {label}" + (f": {detail}" if detail else ""))
