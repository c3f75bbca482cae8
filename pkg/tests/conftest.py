import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
DEMO_CONFIG = ROOT / "configs" / "demo.json"
SPIKY_CONFIG = ROOT / "configs" / "spiky.json"
GOLDEN = Path(__file__).parent / "golden"

_criteria: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _criteria[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, detail = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def demo_aec(tmp_path_factory):
    """Two independent demo ``aec`` runs: (exit code, output dir, seconds)."""
    import time

    from loadagg.cli import main

    runs = []
    for i in range(2):
        out = tmp_path_factory.mktemp(f"aec_run{i}")
        t0 = time.perf_counter()
        code = main(["aec", "--config", str(DEMO_CONFIG), "--out", str(out), "--quiet"])
        runs.append((code, out, time.perf_counter() - t0))
    return runs


@pytest.fixture(scope="session")
def demo_corpus():
    from loadagg.config import RunConfig
    from loadagg.synth import generate

    cfg = RunConfig.load(DEMO_CONFIG)
    return cfg, generate(cfg.synth_spec()).meters
