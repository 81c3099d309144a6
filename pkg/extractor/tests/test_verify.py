import struct

import numpy as np

from scvad_extractor.stream import HEADER, MAGIC, write_stream
from scvad_extractor.verify import verify_stream


def test_valid_stream_is_ok(tmp_path):
    path = tmp_path / "ok.scvf"
    write_stream(np.ones((4, 3), dtype=np.float32), 2, path, {"source": "t", "fps": None})
    report = verify_stream(path)
    assert report.ok
    assert (report.frames, report.dim, report.spatial_dim) == (4, 3, 2)
    assert report.stats["mean"] == 1.0
    assert "OK" in report.summary()


def test_three_violation_fixtures_three_distinct_findings(tmp_path):
    # 1: bad magic
    good = tmp_path / "good.scvf"
    write_stream(np.ones((2, 2), dtype=np.float32), 1, good)
    raw = good.read_bytes()
    bad_magic = tmp_path / "magic.scvf"
    bad_magic.write_bytes(b"NOPE" + raw[4:])

    # 2: header promises more payload than the file holds
    short = tmp_path / "short.scvf"
    short.write_bytes(raw[:-4])

    # 3: non-finite values smuggled past the writer
    naneed = tmp_path / "nan.scvf"
    payload = np.array([[np.inf, 0.0]], dtype="<f4")
    naneed.write_bytes(HEADER.pack(MAGIC, 1, 1, 2, 1) + payload.tobytes())

    findings = []
    for path in (bad_magic, short, naneed):
        report = verify_stream(path)
        assert not report.ok
        findings.extend(report.findings)
    assert len(findings) == 3
    assert len(set(findings)) == 3  # distinct problems, distinct messages
    assert any("magic" in f for f in findings)
    assert any("payload" in f for f in findings)
    assert any("non-finite" in f for f in findings)


def test_label_count_mismatch_is_reported(tmp_path):
    path = tmp_path / "labels.scvf"
    write_stream(np.ones((3, 2), dtype=np.float32), 1, path, {"labels": [0, 1]})
    report = verify_stream(path)
    assert any("labels" in f for f in report.findings)


def test_missing_file_reports_instead_of_raising(tmp_path):
    report = verify_stream(tmp_path / "absent.scvf")
    assert not report.ok
    assert "unreadable" in report.findings[0]
