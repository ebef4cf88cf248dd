"""Every answer set the solver or the oracle yields during the session is re-checked."""

from __future__ import annotations

import amcs.asp as asp_package
import amcs.asp.solver as solver_module

AUDIT = {"checked": 0, "failed": []}

_original_search = solver_module._search
_original_oracle = solver_module.oracle_answer_sets


def _audit(gp, answer) -> None:
    AUDIT["checked"] += 1
    if not solver_module.check_stable(gp, answer.atoms):
        AUDIT["failed"].append((str(gp), answer.render()))
        raise AssertionError("non-stable model produced:\n" + answer.render())


def _audited_search(gp):
    for answer in _original_search(gp):
        _audit(gp, answer)
        yield answer


def _audited_oracle(gp, *args, **kwargs):
    found = _original_oracle(gp, *args, **kwargs)
    for answer in found:
        _audit(gp, answer)
    return found


solver_module._search = _audited_search
solver_module.oracle_answer_sets = _audited_oracle
asp_package.oracle_answer_sets = _audited_oracle


# acceptance report: tests/test_acceptance.py files one line per criterion here

ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
    terminalreporter.write_line(
        f"stability audit (whole session): {AUDIT['checked']} answer sets checked, "
        f"{len(AUDIT['failed'])} failed"
    )
