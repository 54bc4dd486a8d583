"""
Command-line surface.

  nfg validate --spec game.json
  nfg solve --spec game.json --out runs/solve
  nfg portrait --kappa 1 --kappa 2 --out runs/portrait
  nfg orbit --kappa -1 --kappa 2 --p0 -0.5 --p0 0.5 --out runs/orbit
  nfg simulate --spec game.json --y 1.0 --out runs/sim
  nfg verify --spec game.json --out runs/verify
  nfg example2 --kappa 1 --alpha 0.5 --out runs/example2
  nfg counterexamples --out runs/counter

Exit codes: 0 ok, 1 malformed input, 2 assumption violated or report failed, 3 numerical failure.
"""
from __future__ import annotations

import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import typer

from nfg import equilibrium_solver as solver
from nfg import io
from nfg.errors import AssumptionViolation, GameError
from nfg.game_model import GameSpec, classify_regime, linear_example_spec, validate_game
from nfg.game_simulator import evaluate_cost, simulate as run_simulation
from nfg.nash_verifier import check_nash, default_sample_ys
from nfg.phase_plane import OrbitOptions, integrate_orbit, sample_portrait, x_window
from nfg.solution import PiecewiseSolution
from nfg.utils.config import cfg_get, load_cfg
from nfg.utils.glossary import describe

app = typer.Typer(add_completion=False, help="Nash feedback equilibria for 1-D discounted differential games.")
log = logging.getLogger("nfg")

SPEC_OPT = typer.Option(..., "--spec", help="Game spec JSON")
CONFIG_OPT = typer.Option(None, "--config", help="YAML config (default config/config.yaml)")
VERBOSE_OPT = typer.Option(False, "--verbose", "-v", help="DEBUG logging")
OUT_OPT = typer.Option(None, "--out", help="Output directory")


def _setup(config: Optional[Path], verbose: bool) -> dict:
    cfg = load_cfg(config)
    level = "DEBUG" if verbose else str(cfg_get(cfg, "logging.level", "INFO")).upper()
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s", force=True)
    return cfg


def _out_dir(out: Optional[Path], cfg: dict, command: str) -> Path:
    path = out if out is not None else Path(cfg_get(cfg, "paths.out_dir", "runs")) / command
    path.mkdir(parents=True, exist_ok=True)
    return path


@contextmanager
def _guard():
    try:
        yield
    except GameError as e:
        typer.echo(f"[FATAL] {type(e).__name__}: {e}", err=True)
        raise typer.Exit(code=e.exit_code) from e


def _require_valid(spec: GameSpec, cfg: dict) -> None:
    report = validate_game(
        spec,
        points_per_unit=cfg_get(cfg, "grid.points_per_unit", 64),
        half_width_factor=cfg_get(cfg, "grid.check_half_width_factor", 10),
    )
    if not report.ok:
        raise AssumptionViolation("; ".join(v.describe() for v in report.violations))


def _echo_audit(label: str, solution: PiecewiseSolution) -> bool:
    a = solution.audit
    if a is None:
        typer.echo(f"[{label}] no audit attached")
        return False
    verdict = "pass" if a.passed else "FAIL " + ",".join(a.reasons)
    typer.echo(
        f"[{label}] audit {verdict}: residual={a.max_residual:.3e} "
        f"consistency={a.consistency_residual:.3e} growth_slope={a.growth_slope:.4g}"
    )
    for code in a.reasons:
        typer.echo(f"   {code}: {describe(code)}")
    return a.passed


def _solver_options(cfg: dict) -> dict:
    return {
        "tol": cfg_get(cfg, "solver.tol", solver.NU_TOL),
        "nu_max": cfg_get(cfg, "solver.nu_max", solver.NU_MAX),
        "points_per_unit": cfg_get(cfg, "grid.points_per_unit", 64),
        "rtol": cfg_get(cfg, "solver.rtol", solver.RTOL),
        "atol": cfg_get(cfg, "solver.atol", solver.ATOL),
        "region_margin": cfg_get(cfg, "solver.region_margin", solver.REGION_MARGIN),
    }


def _solution_for(spec: GameSpec, solution_path: Optional[Path], cfg: dict) -> PiecewiseSolution:
    if solution_path is not None:
        sol = io.load_solution(solution_path)
        if sol.audit is None:
            sol = sol.with_audit(
                solver.audit(
                    sol,
                    spec,
                    residual_tol=cfg_get(cfg, "tolerances.residual", solver.RESIDUAL_TOL),
                    consistency_tol=cfg_get(cfg, "tolerances.consistency", solver.CONSISTENCY_TOL),
                    growth_tol=cfg_get(cfg, "tolerances.growth", solver.GROWTH_TOL),
                )
            )
        return sol
    return solver.construct_admissible(spec, **_solver_options(cfg))


def _write_solution(out: Path, solution: PiecewiseSolution) -> list[Path]:
    return [
        io.save_solution(solution, out / "solution.json"),
        io.write_csv(io.solution_frame(solution), out / "solution.csv"),
    ]


# ---------- commands ----------


@app.command()
def validate(
    spec_path: Path = SPEC_OPT,
    out: Optional[Path] = typer.Option(None, "--out", help="Also write validation.json here"),
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Check the standing assumptions and report the regime."""
    cfg = _setup(config, verbose)
    with _guard():
        spec = io.load_game_spec(spec_path)
        report = validate_game(
            spec,
            points_per_unit=cfg_get(cfg, "grid.points_per_unit", 64),
            half_width_factor=cfg_get(cfg, "grid.check_half_width_factor", 10),
        )
        regime = classify_regime(spec)
        typer.echo(f"[validate] players={spec.m} C={spec.C:g} L={spec.L:g} regime={regime.describe()}")
        for i, v in enumerate(report.violations, 1):
            typer.echo(f" {i:02d}. {v.describe()}")
        if out is not None:
            payload = {**io.validation_to_dict(report), "regime": regime.tag.value}
            path = io.write_json(payload, out / "validation.json")
            io.write_manifest(out, "validate", {"spec": spec_path}, [path], spec=spec)
    if not report.ok:
        typer.echo("[validate] FAIL: standing assumptions violated")
        raise typer.Exit(code=2)
    typer.echo("[validate] ok")


@app.command()
def solve(
    spec_path: Path = SPEC_OPT,
    out: Optional[Path] = OUT_OPT,
    nu_max: Optional[float] = typer.Option(None, "--nu-max", help="Largest nu in the schedule"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Sup-difference between consecutive nu"),
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Construct the admissible solution by the nu-limit and audit it."""
    cfg = _setup(config, verbose)
    with _guard():
        spec = io.load_game_spec(spec_path)
        _require_valid(spec, cfg)
        options = _solver_options(cfg)
        if nu_max is not None:
            options["nu_max"] = nu_max
        if tol is not None:
            options["tol"] = tol
        nu_max, tol = options["nu_max"], options["tol"]
        solution = solver.construct_admissible(spec, **options)
        out = _out_dir(out, cfg, "solve")
        outputs = _write_solution(out, solution)
        io.write_manifest(out, "solve", {"spec": spec_path, "nu_max": nu_max, "tol": tol}, outputs, spec=spec)
    typer.echo(f"[solve] method={solution.meta.get('method')} wrote {out / 'solution.json'}")
    if not _echo_audit("solve", solution):
        raise typer.Exit(code=2)


def _kappa_pair(kappa: Optional[list[float]], spec_path: Optional[Path]) -> tuple[float, float]:
    if spec_path is not None:
        regime = classify_regime(io.load_game_spec(spec_path))
        if regime.kappa is None:
            raise AssumptionViolation(f"regime {regime.tag.value} has no constant slope pair")
        return regime.kappa
    if not kappa or len(kappa) != 2:
        raise AssumptionViolation("give --spec or exactly two --kappa values")
    return float(kappa[0]), float(kappa[1])


@app.command()
def portrait(
    kappa: Optional[list[float]] = typer.Option(None, "--kappa", help="Slope pair, repeat twice"),
    spec_path: Optional[Path] = typer.Option(None, "--spec", help="Take the slope pair from a spec"),
    box: Optional[float] = typer.Option(None, "--box"),
    n: Optional[int] = typer.Option(None, "--n", help="Starts per axis"),
    direction: str = typer.Option("forward", "--direction"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    out: Optional[Path] = OUT_OPT,
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Termination labels over a grid of starting points of the rescaled flow."""
    cfg = _setup(config, verbose)
    with _guard():
        k = _kappa_pair(kappa, spec_path)
        box = box if box is not None else cfg_get(cfg, "phase_plane.portrait_box", 3.0)
        n = n if n is not None else cfg_get(cfg, "phase_plane.portrait_n", 21)
        seed = seed if seed is not None else cfg_get(cfg, "determinism.seed", 0)
        workers = workers if workers is not None else cfg_get(cfg, "phase_plane.workers", 1)
        points = sample_portrait(k, box=box, n=n, direction=direction, seed=seed, workers=workers)
        out = _out_dir(out, cfg, "portrait")
        path = io.write_csv(io.portrait_frame(points), out / "portrait.csv")
        params = {"kappa": list(k), "box": box, "n": n, "direction": direction, "workers": workers}
        io.write_manifest(out, "portrait", params, [path], seed=seed)
    counts: dict[str, int] = {}
    for pt in points:
        counts[pt.tag] = counts.get(pt.tag, 0) + 1
    summary = ", ".join(f"{tag}={c}" for tag, c in sorted(counts.items()))
    typer.echo(f"[portrait] {len(points)} starts: {summary}")


@app.command()
def orbit(
    kappa: list[float] = typer.Option(..., "--kappa", help="Slope pair, repeat twice"),
    p0: list[float] = typer.Option(..., "--p0", help="Start point, repeat twice"),
    direction: str = typer.Option("both", "--direction"),
    closed: bool = typer.Option(
        False, "--closed", help="Search only for a closed orbit through p0"
    ),
    out: Optional[Path] = OUT_OPT,
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Integrate one orbit of the rescaled flow and report how it ends."""
    cfg = _setup(config, verbose)
    with _guard():
        k = _kappa_pair(kappa, None)
        if len(p0) != 2:
            raise AssumptionViolation("--p0 needs exactly two values")
        options = OrbitOptions(
            s_max=cfg_get(cfg, "phase_plane.s_max", 200.0),
            blowup_threshold=cfg_get(cfg, "phase_plane.blowup_threshold", 1e6),
            converge_tol=cfg_get(cfg, "phase_plane.converge_tol", 1e-12),
            closed_orbit=True if closed else None,
            closure_tol=cfg_get(cfg, "phase_plane.closure_tol", 1e-6),
        )
        result = integrate_orbit(k, p0, direction="forward" if closed else direction, options=options)
        window = x_window(result)
        out = _out_dir(out, cfg, "orbit")
        summary = {
            "kappa": list(k),
            "p0": list(p0),
            "forward": None if result.forward is None else {"tag": result.forward.tag, **vars(result.forward)},
            "backward": None if result.backward is None else {"tag": result.backward.tag, **vars(result.backward)},
            "x_window": vars(window),
        }
        outputs = [
            io.write_csv(io.orbit_frame(result), out / "orbit.csv"),
            io.write_json(summary, out / "orbit.json"),
        ]
        io.write_manifest(out, "orbit", {"kappa": list(k), "p0": list(p0), "direction": direction}, outputs)
    for side in ("forward", "backward"):
        term = getattr(result, side)
        if term is not None:
            typer.echo(f"[orbit] {side}: {term.tag} ({describe(term.tag)})")
    typer.echo(f"[orbit] x-window [{window.x_min:.6g}, {window.x_max:.6g}] {window.lower}/{window.upper}")


@app.command()
def simulate(
    spec_path: Path = SPEC_OPT,
    y: float = typer.Option(..., "--y", help="Initial state"),
    solution_path: Optional[Path] = typer.Option(None, "--solution", help="Solution JSON (else solve)"),
    horizon: Optional[float] = typer.Option(None, "--horizon"),
    on_exit: str = typer.Option("truncate", "--on-exit", help="truncate or raise"),
    out: Optional[Path] = OUT_OPT,
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Closed-loop trajectory from y and each player's discounted cost."""
    cfg = _setup(config, verbose)
    with _guard():
        spec = io.load_game_spec(spec_path)
        solution = _solution_for(spec, solution_path, cfg)
        horizon = horizon if horizon is not None else cfg_get(cfg, "simulator.horizon", 40.0)
        traj = run_simulation(
            solution, spec, y, horizon, on_exit=on_exit, zero_snap=cfg_get(cfg, "simulator.zero_snap", 1e-10)
        )
        costs = evaluate_cost(spec, traj, solution)
        claimed = solution.value_at(y)
        out = _out_dir(out, cfg, "simulate")
        payload = {
            "y": y,
            "t_end": traj.t_end,
            "events": [vars(e) for e in traj.events],
            "costs": [{**vars(c), "claimed_value": float(claimed[c.player - 1])} for c in costs],
        }
        outputs = [
            io.write_csv(io.trajectory_frame(traj, spec), out / "trajectory.csv"),
            io.write_json(payload, out / "costs.json"),
        ]
        io.write_manifest(out, "simulate", {"spec": spec_path, "y": y, "horizon": horizon}, outputs, spec=spec)
    for e in traj.events:
        typer.echo(f"[simulate] t={e.t:.6g} {e.kind} at x={e.x:.6g}")
    for c in costs:
        typer.echo(
            f"[simulate] player {c.player}: cost={c.total:.10g} (tail <= {c.tail:.2e}) "
            f"u(y)={claimed[c.player - 1]:.10g}"
        )


@app.command()
def verify(
    spec_path: Path = SPEC_OPT,
    solution_path: Optional[Path] = typer.Option(None, "--solution", help="Solution JSON (else solve)"),
    tol: Optional[float] = typer.Option(None, "--tol", help="tol_dp"),
    grid_n: Optional[int] = typer.Option(None, "--grid-n"),
    control_n: Optional[int] = typer.Option(None, "--control-n"),
    dt: Optional[float] = typer.Option(None, "--dt"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    out: Optional[Path] = OUT_OPT,
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Dynamic-programming check that no player gains by deviating."""
    cfg = _setup(config, verbose)
    with _guard():
        spec = io.load_game_spec(spec_path)
        solution = _solution_for(spec, solution_path, cfg)
        params = {
            "tol_dp": tol if tol is not None else cfg_get(cfg, "verifier.tol_dp", 1e-2),
            "grid_n": grid_n if grid_n is not None else cfg_get(cfg, "verifier.grid_n", 801),
            "control_n": control_n if control_n is not None else cfg_get(cfg, "verifier.control_n", 81),
            "dt": dt if dt is not None else cfg_get(cfg, "verifier.dt", 0.01),
            "workers": workers if workers is not None else cfg_get(cfg, "verifier.workers", 1),
        }
        ys = default_sample_ys(spec.L, cfg_get(cfg, "verifier.sample_points", 10))
        report = check_nash(spec, solution, ys, **params)
        out = _out_dir(out, cfg, "verify")
        outputs = [
            io.write_json(io.nash_to_dict(report), out / "nash.json"),
            io.write_csv(io.nash_frame(report), out / "nash.csv"),
        ]
        io.write_manifest(out, "verify", {"spec": spec_path, **params}, outputs, spec=spec)
    verdict = "pass" if report.passed else "FAIL"
    typer.echo(
        f"[verify] {verdict}: worst |V - u| = {report.worst_gap:.3e} (tol_dp {report.tol_dp:g}, "
        f"DP error estimate {max(report.error_estimate):.2e})"
    )
    if not report.passed:
        raise typer.Exit(code=2)


@app.command()
def example2(
    kappa: Optional[float] = typer.Option(None, "--kappa"),
    alpha: Optional[float] = typer.Option(None, "--alpha"),
    L: Optional[float] = typer.Option(None, "--L", help="Half-width of the window"),
    out: Optional[Path] = OUT_OPT,
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Periodic admissible solution of h1 = -kappa x, h2 = kappa x through (-alpha, alpha)."""
    cfg = _setup(config, verbose)
    with _guard():
        kappa = kappa if kappa is not None else cfg_get(cfg, "example2.kappa", 1.0)
        alpha = alpha if alpha is not None else cfg_get(cfg, "example2.alpha", 0.5)
        L = L if L is not None else cfg_get(cfg, "example2.L", 20.0)
        C = cfg_get(cfg, "example2.C", None)
        solution = solver.periodic_solution(
            kappa, alpha, L=L, C=C, closure_tol=cfg_get(cfg, "phase_plane.closure_tol", 1e-6)
        )
        spec = linear_example_spec(kappa, C=C, L=L)
        out = _out_dir(out, cfg, "example2")
        outputs = _write_solution(out, solution)
        io.write_manifest(out, "example2", {"kappa": kappa, "alpha": alpha, "L": L}, outputs, spec=spec)
    typer.echo(
        f"[example2] period_x={solution.meta['period_x']:.8g} closure_error={solution.meta['closure_error']:.2e}"
    )
    if not _echo_audit("example2", solution):
        raise typer.Exit(code=2)


@app.command()
def counterexamples(
    L: float = typer.Option(5.0, "--L"),
    out: Optional[Path] = OUT_OPT,
    config: Optional[Path] = CONFIG_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Audit the two inadmissible candidates for h = 0; both must be rejected."""
    cfg = _setup(config, verbose)
    expected = {"kink": ("A3",), "quadratic": ("A2",)}
    with _guard():
        cases = {
            "kink": solver.kink_counterexample(L)[1],
            "quadratic": solver.quadratic_counterexample(L)[1],
        }
        out = _out_dir(out, cfg, "counterexamples")
        payload = {name: io.solution_to_dict(sol)["audit"] for name, sol in cases.items()}
        path = io.write_json(payload, out / "counterexamples.json")
        io.write_manifest(out, "counterexamples", {"L": L}, [path])

    failures: list[str] = []
    for name, sol in cases.items():
        _echo_audit(name, sol)
        if sol.audit.reasons != expected[name]:
            failures.append(f"{name}: expected rejection {expected[name]}, got {sol.audit.reasons}")
    if failures:
        for i, f in enumerate(failures, 1):
            typer.echo(f" {i:02d}. {f}")
        raise typer.Exit(code=2)
    typer.echo("[counterexamples] both candidates rejected as expected")


def main() -> None:
    app()


if __name__ == "__main__":
    main()
