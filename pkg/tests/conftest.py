import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def cache_dir() -> str:
    """Shared result cache, so reproduction tests reuse earlier solves."""
    return os.environ.get("TRIDIST_CACHE_DIR", str(REPO / ".cache" / "tridist"))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Context-manager factory that prints one PASS/FAIL line per acceptance criterion."""
    import contextlib

    @contextlib.contextmanager
    def check(number: int, title: str):
        detail: dict = {}
        try:
            yield detail
        except BaseException as exc:
            line = f"CRITERION {number} FAIL  {title}  {detail.get('info', '')}  [{type(exc).__name__}: {str(exc)[:300]}]"
            raise
        else:
            line = f"CRITERION {number} PASS  {title}  {detail.get('info', '')}"
        finally:
            ACCEPTANCE_LINES.append(line.rstrip())
            with capsys.disabled():
                print("\n" + line.rstrip())

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
