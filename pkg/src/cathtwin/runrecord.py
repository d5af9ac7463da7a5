"""Run-record persistence: one directory per run, hash-stable layout.

Layout: config.snapshot, manifest.json, trajectories/*.jsonl, metrics.csv,
maps/*.json, curves.csv, plus weight documents. Nothing time- or
machine-dependent is written, so identical configs and seeds reproduce
byte-identical records.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path


def write_run_record(out_dir: str | Path, config_snapshot: str,
                     artifacts: dict[str, str | bytes]) -> str:
    """Write artifacts plus manifest; returns the record hash."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}
    all_items = {"config.snapshot": config_snapshot, **artifacts}
    for rel, data in sorted(all_items.items()):
        p = out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        blob = data.encode() if isinstance(data, str) else data
        p.write_bytes(blob)
        files[rel] = hashlib.sha256(blob).hexdigest()
    record = hashlib.sha256(
        json.dumps(files, sort_keys=True).encode()
    ).hexdigest()
    manifest = {
        "schema": "cathtwin-run",
        "version": 1,
        "files": files,
        "record_hash": record,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return record


def record_hash(run_dir: str | Path) -> str:
    """Recompute the record hash from the files on disk (manifest excluded)."""
    out = Path(run_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    files = {}
    for rel in manifest["files"]:
        files[rel] = hashlib.sha256((out / rel).read_bytes()).hexdigest()
    return hashlib.sha256(json.dumps(files, sort_keys=True).encode()).hexdigest()


def verify_run_record(run_dir: str | Path) -> bool:
    out = Path(run_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    return record_hash(out) == manifest["record_hash"]
