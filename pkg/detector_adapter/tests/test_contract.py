"""Cross-package contract: adapter output feeds the mining pipeline cleanly.

These tests exercise the published interfaces of the primary package (the
detection-stream schema, the frame layout and the CLI); they are the only
place the two packages meet.
"""

import json

import pytest

from detector_adapter.adapter import AdapterConfig, run_detector
from detector_adapter.cli import main as adapter_main
from detector_adapter.fixture import render_face_fixture

from flickermine.cli import main as flickermine_main
from flickermine.ingest import parse_detection_stream
from flickermine.reports import read_mining_report


@pytest.fixture(scope="module")
def fixture(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    frames = root / "frames"
    render_face_fixture(frames, n_frames=10)
    stream_path = root / "detections.jsonl"
    run_detector(frames, AdapterConfig(), stream_path)
    return frames, stream_path


class TestStreamContract:
    def test_output_parses_with_zero_errors(self, fixture):
        _, stream_path = fixture
        stream = parse_detection_stream(stream_path.read_text())
        n_lines = len(stream_path.read_text().splitlines())
        assert len(stream) == n_lines > 0
        assert stream.videos() == ("studio",)
        assert stream.categories() == ("face",)

    def test_mine_hn_completes_end_to_end(self, fixture, tmp_path):
        frames, stream_path = fixture
        report = tmp_path / "report.jsonl"
        code = flickermine_main([
            "mine-hn",
            "--detections", str(stream_path),
            "--frames", str(frames),
            "--out", str(report),
            "--workers", "1",
        ])
        assert code == 0
        rows = read_mining_report(report)
        # every confident face detection is temporally consistent here
        confident = [r for r in rows if r.detection.score >= 0.8]
        assert confident
        assert all(r.label.verdict.value == "pseudo_positive" for r in confident)
        manifest = json.loads((tmp_path / "report.jsonl.manifest.json").read_text())
        assert manifest["command"] == "mine-hn"

    def test_cli_round_trip(self, tmp_path):
        frames = tmp_path / "frames"
        assert adapter_main(["fixture", "--frames", str(frames), "--n-frames", "3"]) == 0
        out = tmp_path / "out.jsonl"
        assert adapter_main(["run", "--frames", str(frames), "--out", str(out)]) == 0
        stream = parse_detection_stream(out.read_text())
        assert len(stream) > 0
