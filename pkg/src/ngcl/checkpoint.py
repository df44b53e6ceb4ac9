"""Versioned named-tensor checkpoint files shared by the encoder and the classifier.

Format: a ``.npz`` archive with one array per named tensor plus a
``__meta__`` JSON string carrying the format version, the model kind, and
its constructor arguments. Float64 arrays round-trip bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MissingArtifactError, ParseError

FORMAT_NAME = "ngcl-checkpoint"
FORMAT_VERSION = 1


def save_tensors(path, kind: str, meta: dict, tensors: dict) -> None:
    """Write named float64 tensors plus metadata to `path`."""
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta,
    }
    arrays = {name: np.ascontiguousarray(arr) for name, arr in tensors.items()}
    np.savez(path, __meta__=np.array(json.dumps(header)), **arrays)


def load_tensors(path, expect_kind: str = None):
    """Read a checkpoint; returns ``(meta_dict, {name: array})``.

    Raises
    ------
    MissingArtifactError
        `path` does not exist.
    ParseError
        Not a checkpoint file, wrong version, or wrong kind.
    """
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            if "__meta__" not in data:
                raise ParseError(f"{path}: not a checkpoint file (missing metadata)")
            header = json.loads(str(data["__meta__"]))
            tensors = {k: data[k] for k in data.files if k != "__meta__"}
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: unreadable checkpoint: {exc}") from exc
    if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported checkpoint format {header.get('format')!r}")
    if expect_kind is not None and header.get("kind") != expect_kind:
        raise ParseError(
            f"{path}: checkpoint holds a {header.get('kind')!r} model, expected {expect_kind!r}"
        )
    return header["meta"], tensors
