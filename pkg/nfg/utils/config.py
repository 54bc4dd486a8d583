"""
Central config loader for config/config.yaml.

Values may use `${VAR:-default}` placeholders, expanded from the environment at load time.
`NFG_CONFIG` overrides the config path.
"""
from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Any

import yaml

CONFIG_PATH = Path("config/config.yaml")

_PLACEHOLDER = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")


def _expand(value: Any) -> Any:
    if isinstance(value, str):
        return _PLACEHOLDER.sub(lambda m: os.environ.get(m.group(1), m.group(2) or ""), value)
    if isinstance(value, dict):
        return {k: _expand(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_expand(v) for v in value]
    return value


def load_cfg(path: str | Path | None = None) -> dict:
    path = Path(path or os.environ.get("NFG_CONFIG", CONFIG_PATH))
    if not path.exists():
        return {}
    with open(path, "r") as f:
        return _expand(yaml.safe_load(f) or {})


def cfg_get(cfg: dict, dotted: str, default: Any = None) -> Any:
    """cfg_get(cfg, "solver.rtol", 1e-10) -> cfg["solver"]["rtol"] if present."""
    node: Any = cfg
    for key in dotted.split("."):
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return default if node is None else node
