"""Structured run logging with byte-exact replay in mind.

Telemetry is a JSON-lines file of records

    {"c": channel, "s": seq, "t": sim_time, "d": {...}}

written with sorted keys and no whitespace, so identical runs produce
identical bytes.  Nothing derived from the wall clock ever enters the log
body; the manifest carries everything needed to re-execute the run
(scenario, config, seed, mode) plus content hashes for tamper checks.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .config import sha256_of

LOG_NAME = "telemetry.jsonl"
MANIFEST_NAME = "manifest.json"
FRAMES_NAME = "frames.bin"


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)!r}")


def encode_record(channel: str, seq: int, t: float, data: dict) -> str:
    return json.dumps({"c": channel, "s": seq, "t": round(t, 9), "d": data},
                      sort_keys=True, separators=(",", ":"), default=_jsonify)


@dataclass
class RunManifest:
    scenario_name: str
    scenario: dict
    config: dict
    seed: int
    mode: str
    duration_s: float
    version: str = __version__
    record_count: int = 0
    channel_counts: dict = field(default_factory=dict)
    log_sha256: str = ""

    def to_dict(self) -> dict:
        return {
            "scenario_name": self.scenario_name,
            "scenario": self.scenario,
            "scenario_hash": sha256_of(self.scenario),
            "config": self.config,
            "config_hash": sha256_of(self.config),
            "seed": self.seed,
            "mode": self.mode,
            "duration_s": self.duration_s,
            "version": self.version,
            "record_count": self.record_count,
            "channel_counts": self.channel_counts,
            "log_sha256": self.log_sha256,
        }


class LogWriter:
    """Appends telemetry records; in-memory unless given a directory."""

    def __init__(self, log_dir: Optional[str] = None, save_frames: bool = False):
        self.log_dir = log_dir
        self.lines: list = []
        self.seq = 0
        self.channel_counts: dict = {}
        self._fh = None
        self._frames_fh = None
        if log_dir is not None:
            os.makedirs(log_dir, exist_ok=True)
            self._fh = open(os.path.join(log_dir, LOG_NAME), "w")
            if save_frames:
                self._frames_fh = open(os.path.join(log_dir, FRAMES_NAME), "wb")

    def write(self, channel: str, t: float, data: dict) -> None:
        line = encode_record(channel, self.seq, t, data)
        self.seq += 1
        self.channel_counts[channel] = self.channel_counts.get(channel, 0) + 1
        self.lines.append(line)
        if self._fh is not None:
            self._fh.write(line + "\n")

    def write_frame(self, values: np.ndarray, t: float) -> None:
        if self._frames_fh is not None:
            from . import frames
            frames.write_frame(self._frames_fh, values, t)

    def finalize(self, manifest: RunManifest) -> RunManifest:
        import hashlib
        blob = ("\n".join(self.lines) + "\n").encode() if self.lines else b""
        manifest.record_count = self.seq
        manifest.channel_counts = dict(sorted(self.channel_counts.items()))
        manifest.log_sha256 = hashlib.sha256(blob).hexdigest()
        if self._fh is not None:
            self._fh.close()
            self._fh = None
            with open(os.path.join(self.log_dir, MANIFEST_NAME), "w") as fh:
                json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        if self._frames_fh is not None:
            self._frames_fh.close()
            self._frames_fh = None
        return manifest


class LogReader:
    def __init__(self, log_dir: str):
        self.log_dir = log_dir
        with open(os.path.join(log_dir, LOG_NAME), "r") as fh:
            self.lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        manifest_path = os.path.join(log_dir, MANIFEST_NAME)
        self.manifest: Optional[dict] = None
        if os.path.exists(manifest_path):
            with open(manifest_path, "r") as fh:
                self.manifest = json.load(fh)

    @classmethod
    def from_lines(cls, lines: list, manifest: Optional[dict] = None
                   ) -> "LogReader":
        """Read an in-memory run without touching disk."""
        reader = cls.__new__(cls)
        reader.log_dir = None
        reader.lines = list(lines)
        reader.manifest = manifest
        return reader

    def records(self, channel: Optional[str] = None):
        for line in self.lines:
            rec = json.loads(line)
            if channel is None or rec["c"] == channel:
                yield rec
