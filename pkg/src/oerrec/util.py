"""Seed forking, stable hashing and atomic file writes shared by all stages."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np


def fork_seed(seed: int, label: str) -> int:
    """Derive a stage-specific 64-bit seed from a master seed and a label.

    The derivation is a stable hash, so every stage of a pipeline run is
    reproducible from the single master seed alone.
    """
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(fork_seed(seed, label))


def stable_hash(obj: Any) -> str:
    """Short hex digest of a JSON-serializable object, key order ignored."""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text so that a failed run never leaves a partial file behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(path: str | Path, obj: Any, meta: dict | None = None) -> None:
    """Serialize obj to JSON; meta (config hash, seed, stage) goes under "_meta"."""
    if meta is not None:
        obj = {"_meta": meta, **obj}
    atomic_write_text(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
