import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if not lines:
        for name, m in sys.modules.items():
            if name.endswith("test_acceptance") and getattr(m, "RESULTS", None):
                lines = m.RESULTS
                break
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
