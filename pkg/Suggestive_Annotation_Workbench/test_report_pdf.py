"""PDF run records."""

from datetime import datetime, timezone

from active_loop import SimulationConfig, run_simulation
from conftest import FAST_TRAIN
from report_pdf import build_pdf, write_pdf

STAMP = datetime(2024, 6, 11, 9, 30, tzinfo=timezone.utc)


def test_record_of_a_short_run(small_benchmark, tmp_path):
    log = run_simulation(small_benchmark, SimulationConfig(budget=2, train_cfg=FAST_TRAIN), tmp_path)
    raw = build_pdf(log, STAMP)
    assert raw.startswith(b"%PDF")
    assert raw.rstrip().endswith(b"%%EOF")

    path = write_pdf(log, tmp_path / "run_record.pdf", STAMP)
    assert path.read_bytes().startswith(b"%PDF")


def test_record_without_queries(small_benchmark):
    log = run_simulation(small_benchmark, SimulationConfig(budget=0, train_cfg=FAST_TRAIN))
    assert build_pdf(log, STAMP).startswith(b"%PDF")


def test_unstamped_record_is_byte_reproducible(small_benchmark, tmp_path):
    log = run_simulation(small_benchmark, SimulationConfig(budget=1, train_cfg=FAST_TRAIN))
    first = write_pdf(log, tmp_path / "a.pdf").read_bytes()
    assert build_pdf(log) == first
    assert build_pdf(log, STAMP) != first
