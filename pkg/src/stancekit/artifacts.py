"""Artifact writing with metadata headers and a per-directory manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

from .errors import MissingArtifactError

MANIFEST = "manifest.json"


def fmt(value) -> str:
    """CSV cell text; floats use repr so they round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


class ArtifactWriter:
    def __init__(self, out_dir, meta: dict):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.meta = meta
        self.written: list[str] = []

    def _header(self) -> str:
        return json.dumps(self.meta, sort_keys=True)

    def _record(self, name: str, data: bytes):
        (self.out / name).write_bytes(data)
        if name not in self.written:
            self.written.append(name)

    def write_csv(self, name: str, header, rows):
        buf = io.StringIO()
        buf.write("# " + self._header() + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        self._record(name, buf.getvalue().encode("utf-8"))

    def write_json(self, name: str, payload: dict):
        doc = {"meta": self.meta, **payload}
        self._record(name, (json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n").encode("utf-8"))

    def write_jsonl(self, name: str, records):
        lines = [json.dumps({"meta": self.meta}, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in records]
        self._record(name, ("\n".join(lines) + "\n").encode("utf-8"))

    def update_manifest(self, stage: str, extra: dict):
        path = self.out / MANIFEST
        manifest = json.loads(path.read_text("utf-8")) if path.exists() else {}
        manifest.update(extra)
        manifest["meta"] = self.meta
        stages = manifest.setdefault("stages", {})
        stages[stage] = sorted(self.written)
        hashes = manifest.setdefault("artifacts", {})
        for name in self.written:
            hashes[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
        manifest["stages"] = dict(sorted(stages.items()))
        manifest["artifacts"] = dict(sorted(hashes.items()))
        path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        self.written = []


def require(out_dir, name: str, stage: str) -> Path:
    path = Path(out_dir) / name
    if not path.exists():
        raise MissingArtifactError(stage, path)
    return path


def read_csv(path) -> list[dict]:
    """Read an artifact CSV, skipping the ``#`` metadata line."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("# ")]
    return list(csv.DictReader(lines))


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
