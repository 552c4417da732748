"""CSV/JSON artifact writing: atomic, deterministic, full double precision.

CSV files are RFC-4180 with '.' decimal separator, UTF-8, LF line endings;
floats are written with up to 17 significant digits so values round-trip
exactly.  Every run directory gets a manifest with the config hash, so a run
is reproducible from its config and code version alone.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile


def format_value(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _atomic_write(path, data: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def manifest(config: dict, seed, extra=None) -> dict:
    from . import __version__
    out = {
        "config": config,
        "config_sha256": config_hash(config),
        "seed": seed,
        "code_version": __version__,
    }
    if extra:
        out.update(extra)
    return out
