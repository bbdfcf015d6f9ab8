import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    """Echo one line per acceptance criterion at the end of the run."""
    from helpers import CRITERION_NOTES

    if CRITERION_NOTES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_NOTES:
            terminalreporter.write_line(line)
