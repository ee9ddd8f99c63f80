import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


class _Check:
    def __init__(self, default: str):
        self.label = default
        self.detail = ""

    def __call__(self, label: str) -> "_Check":
        self.label = label
        return self


@pytest.fixture
def criterion(request):
    """Name an acceptance check; its outcome is printed at session end.

    Call ``criterion("label")`` first so a failing assertion is still
    reported under its label, and assign ``criterion.detail`` with the
    measured values.
    """
    check = _Check(request.node.name)
    yield check
    rep = getattr(request.node, "rep_call", None)
    _ACCEPTANCE.append((check.label, rep is not None and rep.passed, check.detail))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {label}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
