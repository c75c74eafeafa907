"""Run manifests and flat key=value config files.

A manifest is line-delimited JSON: one header record, then one record per
output file (with its sha256), counter, and note.  ``verify`` recomputes
every listed hash.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional

from . import __version__


class ManifestError(ValueError):
    pass


class ConfigError(ValueError):
    pass


CONFIG_KEYS = {
    "seed", "kind", "granularity", "n_alt", "min_len", "count_punct",
    "ngram_order", "ngram_discount", "ngram_unk_threshold",
    "bootstrap_b", "tagger_epochs", "max_tokens", "threads",
    "train_sentences", "test_sentences",
}

CONFIG_DEFAULTS = {
    "seed": 0,
    "kind": "original",
    "granularity": "coarse",
    "n_alt": 5,
    "min_len": 10,
    "count_punct": 1,
    "ngram_order": 3,
    "ngram_discount": 0.75,
    "ngram_unk_threshold": 2,
    "bootstrap_b": 1000,
    "tagger_epochs": 5,
    "max_tokens": 512,
    "threads": 1,
    "train_sentences": 100000,
    "test_sentences": 20000,
}


def load_config(path) -> dict:
    """Parse a flat key=value file; unknown keys are rejected."""
    config = dict(CONFIG_DEFAULTS)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep:
                raise ConfigError(f"line {lineno}: expected key=value")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
            default = CONFIG_DEFAULTS[key]
            try:
                config[key] = type(default)(value) if not isinstance(default, str) else value
            except ValueError:
                raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return config


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict = field(default_factory=dict)
    seed: int = 0
    files: list = field(default_factory=list)       # {"path","sha256","role"}
    counters: list = field(default_factory=list)    # {"stage","name","value"}
    started: float = field(default_factory=time.time)

    def add_file(self, path, role: str = "output", base_dir=None) -> None:
        rel = os.path.relpath(path, base_dir) if base_dir else str(path)
        self.files.append({"path": rel, "sha256": sha256_file(path), "role": role})

    def add_counter(self, stage: str, name: str, value) -> None:
        self.counters.append({"stage": stage, "name": name, "value": value})

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({
                "record": "header", "tool": "perturbkit",
                "version": __version__, "command": self.command,
                "seed": self.seed, "config": self.config,
                "started": self.started,
            }, ensure_ascii=False) + "\n")
            for f in self.files:
                fh.write(json.dumps({"record": "file", **f}) + "\n")
            for c in self.counters:
                fh.write(json.dumps({"record": "counter", **c}) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        header = None
        files, counters = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                kind = rec.get("record")
                if kind == "header":
                    header = rec
                elif kind == "file":
                    if "sha256" not in rec or "path" not in rec:
                        raise ManifestError(f"line {lineno}: file record missing hash")
                    files.append(rec)
                elif kind == "counter":
                    counters.append(rec)
                else:
                    raise ManifestError(f"line {lineno}: unknown record {kind!r}")
        if header is None:
            raise ManifestError("manifest has no header record")
        m = cls(command=header.get("command", ""), config=header.get("config", {}),
                seed=header.get("seed", 0), started=header.get("started", 0.0))
        m.files = files
        m.counters = counters
        return m


def verify(manifest_path, base_dir=None) -> list[str]:
    """Recompute every hash in the manifest; return mismatch descriptions."""
    m = RunManifest.read(manifest_path)
    if not m.files:
        raise ManifestError("manifest lists no files to verify")
    base = base_dir or os.path.dirname(os.path.abspath(manifest_path))
    problems = []
    for rec in m.files:
        path = rec["path"]
        full = path if os.path.isabs(path) else os.path.join(base, path)
        if not os.path.exists(full):
            problems.append(f"missing file: {path}")
            continue
        actual = sha256_file(full)
        if actual != rec["sha256"]:
            problems.append(f"hash mismatch: {path}")
    return problems
