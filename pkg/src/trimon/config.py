"""Experiment config files: TOML with dotted keys, or JSON with the same nesting."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import tomli

from .errors import ValidationError

_MISSING = object()


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomli.loads(text)
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def get_path(cfg, dotted, default=_MISSING):
    """Look up ``a.b.c`` in a nested mapping; flat dotted keys at any level also work."""
    node = cfg
    parts = dotted.split(".")
    i = 0
    while i < len(parts):
        if not isinstance(node, dict):
            break
        for j in range(len(parts), i, -1):
            key = ".".join(parts[i:j])
            if key in node:
                node = node[key]
                i = j
                break
        else:
            break
    else:
        return node
    if default is _MISSING:
        raise ValidationError(f"missing config key {dotted!r}")
    return default


def bundled(name) -> Path:
    """Path to one of the example configs shipped in ``trimon/data``."""
    return Path(resources.files("trimon") / "data" / name)


def bundled_configs():
    root = Path(resources.files("trimon") / "data")
    return sorted(p for p in root.iterdir() if p.suffix in (".toml", ".json"))
