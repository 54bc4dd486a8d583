"""
Reading and writing game specs, solutions, reports and run manifests.

Game spec JSON (see docs/game_spec_format.md):

    {"players": 2,
     "h": [{"kind": "linear", "kappa": 1.0}, {"kind": "linear", "kappa": 2.0}],
     "k": [{"kind": "linear", "kappa": 0.0, "offset": 1.0}, ...],
     "C": 2.0, "L": 5.0}

Floats are written with 17 significant digits so every file round-trips exactly.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from nfg import __version__
from nfg.errors import SpecFormatError
from nfg.game_model import UNIT_WEIGHT, GameSpec, Linear, SmoothPerturbed, Tabulated
from nfg.game_simulator import Trajectory, running_costs
from nfg.hj_system import JumpRecord
from nfg.solution import AdmissibilityReport, PiecewiseSolution

log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

_COST_FIELDS: dict[str, tuple[type, tuple[str, ...], tuple[str, ...]]] = {
    # kind -> (class, required, optional)
    "linear": (Linear, ("kappa",), ("offset",)),
    "smooth_perturbed": (SmoothPerturbed, ("kappa", "amplitude", "shape"), ("length_scale", "offset")),
    "tabulated": (Tabulated, ("x", "values"), ()),
}
_SPEC_FIELDS = ("players", "h", "k", "C", "L")


# ---------- game specs ----------


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFormatError(f"{path}: expected a number, got {type(value).__name__}")
    return float(value)


def _numbers(value: Any, path: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise SpecFormatError(f"{path}: expected a list of numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _check_fields(obj: dict, required, optional, path: str) -> None:
    missing = [f for f in required if f not in obj]
    if missing:
        raise SpecFormatError(f"{path}: missing field(s) {', '.join(missing)}")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise SpecFormatError(f"{path}: unknown field(s) {', '.join(unknown)}")


def cost_from_dict(obj: Any, path: str):
    if not isinstance(obj, dict):
        raise SpecFormatError(f"{path}: expected an object")
    kind = obj.get("kind")
    if kind not in _COST_FIELDS:
        raise SpecFormatError(f"{path}.kind: expected one of {sorted(_COST_FIELDS)}, got {kind!r}")
    cls, required, optional = _COST_FIELDS[kind]
    body = {k: v for k, v in obj.items() if k != "kind"}
    _check_fields(body, required, optional, path)

    kwargs: dict[str, Any] = {}
    for name, value in body.items():
        if name == "shape":
            if not isinstance(value, str):
                raise SpecFormatError(f"{path}.shape: expected a string")
            kwargs[name] = value
        elif kind == "tabulated":
            kwargs[name] = _numbers(value, f"{path}.{name}")
        else:
            kwargs[name] = _number(value, f"{path}.{name}")
    try:
        return cls(**kwargs)
    except ValueError as e:
        raise SpecFormatError(f"{path}: {e}") from e


def cost_to_dict(cost) -> dict:
    out: dict[str, Any] = {"kind": cost.kind}
    for f in dataclasses.fields(cost):
        if f.init:
            value = getattr(cost, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def game_spec_from_dict(obj: Any) -> GameSpec:
    if not isinstance(obj, dict):
        raise SpecFormatError("spec: expected a JSON object at top level")
    _check_fields(obj, ("players", "h", "C", "L"), ("k",), "spec")
    players = obj["players"]
    if isinstance(players, bool) or not isinstance(players, int) or players < 2:
        raise SpecFormatError(f"players: expected an integer >= 2, got {players!r}")
    for name in ("h", "k"):
        if name in obj and (not isinstance(obj[name], list) or len(obj[name]) != players):
            raise SpecFormatError(f"{name}: expected a list of {players} cost functions")

    costs = tuple(cost_from_dict(c, f"h[{i}]") for i, c in enumerate(obj["h"]))
    weights = (
        tuple(cost_from_dict(c, f"k[{i}]") for i, c in enumerate(obj["k"]))
        if "k" in obj
        else (UNIT_WEIGHT,) * players
    )
    C, L = _number(obj["C"], "C"), _number(obj["L"], "L")
    try:
        return GameSpec(costs=costs, weights=weights, C=C, L=L)
    except ValueError as e:
        raise SpecFormatError(f"spec: {e}") from e


def game_spec_to_dict(spec: GameSpec) -> dict:
    return {
        "players": spec.m,
        "h": [cost_to_dict(c) for c in spec.costs],
        "k": [cost_to_dict(k) for k in spec.weights],
        "C": spec.C,
        "L": spec.L,
    }


def load_game_spec(path: str | Path) -> GameSpec:
    path = Path(path)
    if not path.exists():
        raise SpecFormatError(f"spec file not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SpecFormatError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return game_spec_from_dict(obj)


def dump_game_spec(spec: GameSpec, path: str | Path) -> Path:
    return _write_json(game_spec_to_dict(spec), path)


def spec_hash(spec: GameSpec) -> str:
    """SHA-256 of the canonical (sorted-key, compact) spec JSON."""
    canonical = json.dumps(game_spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------- solutions ----------


def _plain(value: Any) -> Any:
    """numpy scalars/arrays and tuples to JSON-native values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def _write_json(obj: Any, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(obj), indent=2) + "\n")
    return path


def solution_to_dict(solution: PiecewiseSolution) -> dict:
    return {
        "grid": solution.grid,
        "p": solution.p,
        "u": solution.u,
        "jumps": [dataclasses.asdict(j) for j in solution.jumps],
        "meta": solution.meta,
        "audit": None if solution.audit is None else dataclasses.asdict(solution.audit),
    }


def solution_from_dict(obj: Any) -> PiecewiseSolution:
    if not isinstance(obj, dict):
        raise SpecFormatError("solution: expected a JSON object")
    _check_fields(obj, ("grid", "p", "u"), ("jumps", "meta", "audit"), "solution")
    try:
        jumps = tuple(
            JumpRecord(
                y=float(j["y"]),
                p_minus=j["p_minus"],
                p_plus=j["p_plus"],
                admissible=j.get("admissible"),
                identities_residual=j.get("identities_residual"),
                violated=tuple(j.get("violated", ())),
            )
            for j in obj.get("jumps") or ()
        )
        audit = obj.get("audit")
        if audit is not None:
            audit = AdmissibilityReport(
                **{**audit, "jumps_admissible": tuple(audit["jumps_admissible"])}
            )
        return PiecewiseSolution(
            grid=np.asarray(obj["grid"], dtype=float),
            p=np.asarray(obj["p"], dtype=float),
            u=np.asarray(obj["u"], dtype=float),
            jumps=jumps,
            meta=dict(obj.get("meta") or {}),
            audit=audit,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SpecFormatError(f"solution: {type(e).__name__}: {e}") from e


def save_solution(solution: PiecewiseSolution, path: str | Path) -> Path:
    return _write_json(solution_to_dict(solution), path)


def load_solution(path: str | Path) -> PiecewiseSolution:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise SpecFormatError(f"solution file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise SpecFormatError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return solution_from_dict(obj)


# ---------- CSV ----------


def _write_csv(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def _player_columns(prefix: str, values: np.ndarray) -> dict[str, np.ndarray]:
    return {f"{prefix}{i + 1}": values[:, i] for i in range(values.shape[1])}


def solution_frame(solution: PiecewiseSolution) -> pd.DataFrame:
    return pd.DataFrame(
        {"x": solution.grid, **_player_columns("p", solution.p), **_player_columns("u", solution.u)}
    )


def orbit_frame(orbit) -> pd.DataFrame:
    return pd.DataFrame({"s": orbit.s, "p1": orbit.p[:, 0], "p2": orbit.p[:, 1], "x": orbit.x})


def portrait_frame(points) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "index": [pt.index for pt in points],
            "p1": [pt.p0[0] for pt in points],
            "p2": [pt.p0[1] for pt in points],
            "termination": [pt.tag for pt in points],
            "value": [np.nan if pt.value is None else pt.value for pt in points],
        }
    )


def trajectory_frame(trajectory: Trajectory, spec: GameSpec) -> pd.DataFrame:
    """Samples t, x, alpha_i and the discounted running cost density cost_i of each player."""
    return pd.DataFrame(
        {
            "t": trajectory.t,
            "x": trajectory.x,
            **_player_columns("alpha", trajectory.controls),
            **_player_columns("cost", running_costs(spec, trajectory)),
        }
    )


def nash_frame(report) -> pd.DataFrame:
    rows = []
    for j, y in enumerate(report.ys):
        for i in range(report.u.shape[1]):
            rows.append(
                {
                    "y": y,
                    "player": i + 1,
                    "u": report.u[j, i],
                    "V": report.V[j, i],
                    "gap": report.gap[j, i],
                    "pass": bool(report.point_pass[j, i]),
                }
            )
    return pd.DataFrame(rows, columns=["y", "player", "u", "V", "gap", "pass"])


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    return _write_csv(frame, path)


def write_json(obj: Any, path: str | Path) -> Path:
    return _write_json(obj, path)


# ---------- reports ----------


def validation_to_dict(report) -> dict:
    return {
        "ok": report.ok,
        "grid_size": report.grid_size,
        "violations": [dataclasses.asdict(v) for v in report.violations],
    }


def nash_to_dict(report) -> dict:
    return {
        "passed": report.passed,
        "tol_dp": report.tol_dp,
        "worst_gap": report.worst_gap,
        "error_estimate": report.error_estimate,
        "below_resolution": report.below_resolution,
        "points": nash_frame(report).to_dict(orient="records"),
    }


# ---------- manifests ----------


@dataclasses.dataclass(frozen=True)
class RunManifest:
    command: str
    spec_hash: str | None
    parameters: dict[str, Any]
    outputs: tuple[str, ...]
    seed: int
    version: str = __version__


def write_manifest(
    out_dir: str | Path,
    command: str,
    parameters: dict[str, Any],
    outputs,
    seed: int = 0,
    spec: GameSpec | None = None,
) -> Path:
    out_dir = Path(out_dir)
    manifest = RunManifest(
        command=command,
        spec_hash=None if spec is None else spec_hash(spec),
        parameters={k: (str(v) if isinstance(v, Path) else v) for k, v in parameters.items()},
        outputs=tuple(sorted(Path(o).name for o in outputs)),
        seed=seed,
    )
    path = _write_json(dataclasses.asdict(manifest), out_dir / "manifest.json")
    log.info("[io] wrote %s (%d outputs)", path, len(manifest.outputs))
    return path
