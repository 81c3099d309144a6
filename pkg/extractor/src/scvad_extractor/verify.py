"""Stream verification: findings, not exceptions."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stream import HEADER, MAGIC, VERSION, sidecar_path


@dataclass
class VerifyReport:
    path: str
    findings: list = field(default_factory=list)
    frames: int = 0
    dim: int = 0
    spatial_dim: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.findings

    def summary(self):
        lines = [f"{self.path}: {'OK' if self.ok else 'INVALID'}"]
        if self.frames:
            lines.append(
                f"  frames={self.frames} dim={self.dim} spatial_dim={self.spatial_dim}"
            )
        if self.stats:
            lines.append(
                "  values: min={min:.4g} max={max:.4g} mean={mean:.4g}".format(**self.stats)
            )
        for finding in self.findings:
            lines.append(f"  finding: {finding}")
        return "\n".join(lines)


def verify_stream(path):
    """Check format, dimensions, and finiteness. Collects every problem
    it can still reach after earlier ones; never raises on bad content."""
    path = Path(path)
    report = VerifyReport(path=str(path))
    try:
        raw = path.read_bytes()
    except OSError as exc:
        report.findings.append(f"unreadable file: {exc}")
        return report
    if len(raw) < HEADER.size:
        report.findings.append(f"truncated header ({len(raw)} bytes)")
        return report
    magic, version, frames, dim, spatial_dim = HEADER.unpack_from(raw)
    if magic != MAGIC:
        report.findings.append(f"bad magic {magic!r}")
        return report
    if version != VERSION:
        report.findings.append(f"unsupported version {version}")
    report.frames, report.dim, report.spatial_dim = frames, dim, spatial_dim
    if dim < 1:
        report.findings.append("dim must be positive")
    if not 0 <= spatial_dim <= dim:
        report.findings.append(f"spatial_dim {spatial_dim} outside [0, {dim}]")
    expected = HEADER.size + 4 * frames * dim
    if len(raw) != expected:
        report.findings.append(
            f"payload is {len(raw) - HEADER.size} bytes, header promises {expected - HEADER.size}"
        )
        return report
    if frames and dim:
        values = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(frames, dim)
        bad = int((~np.isfinite(values)).sum())
        if bad:
            report.findings.append(f"{bad} non-finite values")
        finite = values[np.isfinite(values)]
        if finite.size:
            report.stats = {
                "min": float(finite.min()),
                "max": float(finite.max()),
                "mean": float(finite.mean()),
            }
    side = sidecar_path(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            report.findings.append(f"sidecar is invalid JSON: {exc}")
        else:
            labels = meta.get("labels")
            if labels is not None and len(labels) != frames:
                report.findings.append(
                    f"sidecar has {len(labels)} labels for {frames} frames"
                )
    return report
