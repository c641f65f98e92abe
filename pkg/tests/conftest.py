from collections import defaultdict

import pytest

ACCEPTANCE = []   # (criterion, passed, detail)


@pytest.fixture(scope="session")
def acceptance_log():
    def record(criterion: int, passed: bool, detail: str):
        ACCEPTANCE.append((criterion, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    by = defaultdict(list)
    for crit, ok, detail in ACCEPTANCE:
        by[crit].append((ok, detail))
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(by):
        subs = by[crit]
        n_ok = sum(ok for ok, _ in subs)
        tag = "PASS" if n_ok == len(subs) else "FAIL"
        tr.write_line(f"{tag} criterion {crit} ({n_ok}/{len(subs)} sub-checks)")
        for ok, detail in subs:
            tr.write_line(f"    {'ok  ' if ok else 'MISS'} {detail}")
