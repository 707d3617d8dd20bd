import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture()
def criterion(request):
    """Record the outcome of one acceptance check: ``criterion(n, title, ok, detail)``."""
    results = request.config.stash[_RESULTS]

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        results.setdefault(number, (title, []))[1].append((bool(ok), detail))
        print(f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, parts = results[number]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number} ({title}): {detail}")
