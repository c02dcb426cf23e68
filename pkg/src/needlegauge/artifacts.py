"""Deterministic artifact writing shared by all CLI commands.

Every JSON artifact carries a `meta` block (tool, version, config hash,
seed, infusion fingerprint); CSV artifacts carry the same fields in a
leading `#` comment line. Writes are atomic (temp file + rename), and the
serialization is canonical so reruns with equal inputs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from . import __version__

TOOL_NAME = "needlegauge"


def config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def build_meta(cfg_hash: str, seed: int, fingerprint: str = "") -> dict:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "config_hash": cfg_hash,
        "seed": seed,
        "infusion_fingerprint": fingerprint,
    }


def meta_comment(meta: dict) -> str:
    fields = " ".join(f"{key}={meta[key]}" for key in sorted(meta))
    return f"# {fields}\n"


def write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | Path, payload: dict) -> None:
    write_text(path, json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
