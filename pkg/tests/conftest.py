from __future__ import annotations

import sys


def pytest_terminal_summary(terminalreporter):
    # lines recorded by test_acceptance, one per criterion
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
