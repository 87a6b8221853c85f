import os

import pytest

# (criterion number, title) -> list of outcomes, filled by the acceptance tests
_CRITERIA: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "details": []})
    if call.excinfo is not None:
        entry["passed"] = False
        entry["details"].append(f"{item.name}: {call.excinfo.value}".splitlines()[0])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["passed"] else "FAIL"
        line = f"{status}  criterion {number}: {entry['title']}"
        if entry["details"]:
            line += "  [" + "; ".join(entry["details"]) + "]"
        terminalreporter.write_line(line)


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("BBS_SEED", raising=False)
    return tmp_path


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    if "BBS_SEED" in os.environ:
        monkeypatch.delenv("BBS_SEED")
