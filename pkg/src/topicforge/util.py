"""Small deterministic I/O helpers shared across modules.

Everything written through these helpers is byte-reproducible: compact JSON
with a fixed key order, floats serialized via ``repr`` (shortest round-trip
form), and no timestamps anywhere.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable


def json_compact(obj: Any) -> str:
    """Serialize to compact JSON with stable key order."""
    return json.dumps(obj, separators=(",", ":"), sort_keys=False, ensure_ascii=False)


def write_text(path: Path | str, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def sha256_file(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(out_dir: Path | str, artifacts: Iterable[Path | str]) -> Path:
    """Write ``manifest.json`` mapping artifact names to sha256 hashes.

    Paths are recorded relative to ``out_dir``; keys are sorted so the
    manifest itself is reproducible.
    """
    out_dir = Path(out_dir)
    entries = {}
    for art in artifacts:
        art = Path(art)
        key = art.relative_to(out_dir).as_posix() if art.is_relative_to(out_dir) else art.name
        entries[key] = sha256_file(art)
    text = json.dumps(entries, separators=(",", ":"), sort_keys=True) + "\n"
    return write_text(out_dir / "manifest.json", text)


def fmt_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))
