"""Command-line driver for runs, convergence ladders, and parameter studies.

Subcommands:

    run         single run; writes a profile snapshot and per-step diagnostics
    conv-space  halving ladder over the mesh width at fixed dt
    conv-time   halving ladder over the time step at fixed mesh
    study       sweep chi (and optionally deconvolution order / degree),
                writing density profiles at requested times

Configuration is line-oriented ``key = value`` text with ``#`` comments;
every key can also be given as a ``--key value`` flag, and flags override
file values which override the scenario defaults.  All output files are
CSV with one leading comment line echoing the full effective
configuration; floats are printed with 17 significant digits so repeated
runs are bit-identical.

Exit codes: 0 success, 1 if any ladder rung or sweep member failed,
2 on configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .analysis import run_error_inf
from .mesh import Mesh1D, build_mesh, evaluate
from .scenarios import SCENARIOS, Scenario
from .stepping import (
    ModelParams,
    NoConvergenceError,
    TimeGrid,
    Trajectory,
    run_backward_euler,
    run_time_filtered,
)


class ConfigError(ValueError):
    """Base class for configuration problems."""


class UnknownKeyError(ConfigError):
    """Configuration key is not recognized."""


class ConfigTypeError(ConfigError):
    """Configuration value failed to parse as the key's type."""


class MissingScenarioError(ConfigError):
    """No (or no known) scenario was named."""


def _parse_bool_kind(text: str) -> str:
    kind = text.strip().lower()
    if kind not in ("periodic", "dirichlet"):
        raise ValueError(f"expected 'periodic' or 'dirichlet', got {text!r}")
    return kind


def _parse_float_list(text) -> tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    items = [part.strip() for part in str(text).split(",") if part.strip()]
    return tuple(float(v) for v in items)


def _parse_int_list(text) -> tuple[int, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(int(v) for v in text)
    items = [part.strip() for part in str(text).split(",") if part.strip()]
    return tuple(int(v) for v in items)


# key -> converter; order fixes the header echo and flag registration
KEY_PARSERS: dict[str, Callable] = {
    "scenario": str,
    "n_elements": int,
    "degree": int,
    "boundary_kind": _parse_bool_kind,
    "v_f": float,
    "rho_m": float,
    "chi": float,
    "deconv_order": int,
    "gamma": float,
    "delta_coeff": float,
    "delta_exp": float,
    "dt": float,
    "t_final": float,
    "newton_tol": float,
    "newton_max_iter": int,
    "algorithm": int,
    "output_dir": str,
    "space_min_elements": int,
    "space_levels": int,
    "dt_max": float,
    "time_levels": int,
    "chi_list": _parse_float_list,
    "deconv_list": _parse_int_list,
    "degree_list": _parse_int_list,
    "study_times": _parse_float_list,
    "jobs": int,
}

GLOBAL_DEFAULTS = {
    "newton_tol": 1e-10,
    "newton_max_iter": 25,
    "output_dir": "out",
    "space_min_elements": 6,
    "space_levels": 6,
    "dt_max": 0.1,
    "time_levels": 5,
    "chi_list": (0.0, 1.0),
    "deconv_list": (),
    "degree_list": (),
    "study_times": (0.5, 1.0),
    "jobs": 1,
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration for one command invocation."""

    scenario: str
    n_elements: int
    degree: int
    boundary_kind: str
    v_f: float
    rho_m: float
    chi: float
    deconv_order: int
    gamma: float
    delta_coeff: float
    delta_exp: float
    dt: float
    t_final: float
    newton_tol: float
    newton_max_iter: int
    algorithm: int
    output_dir: str
    space_min_elements: int
    space_levels: int
    dt_max: float
    time_levels: int
    chi_list: tuple[float, ...]
    deconv_list: tuple[int, ...]
    degree_list: tuple[int, ...]
    study_times: tuple[float, ...]
    jobs: int

    def __post_init__(self) -> None:
        if self.delta_coeff < 0:
            raise ConfigTypeError("delta_coeff must be nonnegative")
        if not 0.0 <= self.delta_exp <= 1.0:
            raise ConfigTypeError("delta_exp must lie in [0, 1]")
        if self.algorithm not in (1, 2):
            raise ConfigTypeError(f"algorithm must be 1 or 2, got {self.algorithm}")
        if self.jobs < 1:
            raise ConfigTypeError("jobs must be at least 1")

    def delta_for(self, h: float) -> float:
        return self.delta_coeff * h**self.delta_exp

    def get_scenario(self) -> Scenario:
        return SCENARIOS[self.scenario]()

    def make_mesh(self, n_elements: int | None = None) -> Mesh1D:
        n = self.n_elements if n_elements is None else n_elements
        return build_mesh(0.0, 1.0, n, self.degree, self.boundary_kind)

    def make_params(self, h: float) -> ModelParams:
        return ModelParams(
            v_f=self.v_f,
            rho_m=self.rho_m,
            chi=self.chi,
            delta=self.delta_for(h),
            deconv_order=self.deconv_order,
            gamma=self.gamma,
        )

    def header_line(self) -> str:
        parts = []
        for key in KEY_PARSERS:
            value = getattr(self, key)
            if isinstance(value, tuple):
                value = ",".join(_fmt(v) for v in value)
            elif isinstance(value, float):
                value = _fmt(value)
            parts.append(f"{key}={value}")
        return "# " + " ".join(parts)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def read_config_file(path: str | Path) -> dict[str, tuple[str, int]]:
    """Read ``key = value`` lines; returns {key: (raw value, line number)}."""
    entries: dict[str, tuple[str, int]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigTypeError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEY_PARSERS:
            raise UnknownKeyError(f"line {lineno}: unknown key {key!r}")
        entries[key] = (value, lineno)
    return entries


def parse_config(
    path: str | Path | None = None, overrides: dict | None = None
) -> RunConfig:
    """Resolve a configuration: flags override file override scenario defaults."""
    file_entries = read_config_file(path) if path is not None else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    for key in overrides:
        if key not in KEY_PARSERS:
            raise UnknownKeyError(f"unknown key {key!r}")

    name = overrides.get("scenario")
    if name is None and "scenario" in file_entries:
        name = file_entries["scenario"][0]
    if name is None:
        raise MissingScenarioError("no scenario named (key 'scenario')")
    name = str(name).strip()
    if name not in SCENARIOS:
        raise MissingScenarioError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}"
        )

    defaults = SCENARIOS[name]().defaults
    values: dict = {"scenario": name}
    for key in KEY_PARSERS:
        if key == "scenario":
            continue
        if hasattr(defaults, key):
            values[key] = getattr(defaults, key)
        else:
            values[key] = GLOBAL_DEFAULTS[key]

    for key, (raw, lineno) in file_entries.items():
        if key == "scenario":
            continue
        try:
            values[key] = KEY_PARSERS[key](raw)
        except (TypeError, ValueError) as err:
            raise ConfigTypeError(
                f"line {lineno}: key {key!r}: cannot parse {raw!r} ({err})"
            ) from err

    for key, raw in overrides.items():
        if key == "scenario":
            continue
        try:
            values[key] = KEY_PARSERS[key](raw)
        except (TypeError, ValueError) as err:
            raise ConfigTypeError(f"key {key!r}: cannot parse {raw!r} ({err})") from err

    return RunConfig(**values)


def _solve(config: RunConfig, mesh: Mesh1D, grid: TimeGrid) -> Trajectory:
    scenario = config.get_scenario()
    params = config.make_params(mesh.h)
    runner = run_backward_euler if config.algorithm == 1 else run_time_filtered
    return runner(
        scenario, params, grid, mesh,
        newton_tol=config.newton_tol, newton_max_iter=config.newton_max_iter,
    )


def _write_lines(path: Path, header: str, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join([header, *lines]) + "\n", encoding="utf-8")


def _write_profile(
    path: Path, config: RunConfig, state, t: float, scenario: Scenario
) -> None:
    xs = np.linspace(state.mesh.x_left, state.mesh.x_right, 512)
    rho = evaluate(state, xs)
    exact = (
        scenario.exact_solution(xs, t)
        if scenario.exact_solution is not None
        else np.full_like(xs, np.nan)
    )
    lines = ["x,rho_h,rho_exact"]
    lines += [
        f"{_fmt(float(x))},{_fmt(float(r))},{_fmt(float(e))}"
        for x, r, e in zip(xs, rho, exact)
    ]
    _write_lines(path, config.header_line(), lines)


def _write_diagnostics(path: Path, config: RunConfig, trajectory: Trajectory) -> None:
    lines = ["n,t,l2_norm,energy_E,zeta_Z,newton_iters,stab_dissipation"]
    for _, d in trajectory:
        lines.append(
            f"{d.n},{_fmt(d.t)},{_fmt(d.l2_norm)},{_fmt(d.energy_e)},"
            f"{_fmt(d.zeta_z)},{d.newton_iters},{_fmt(d.stab_dissipation)}"
        )
    _write_lines(path, config.header_line(), lines)


def cmd_run(config: RunConfig) -> tuple[list[Path], int]:
    """Single run: final-time profile plus per-step diagnostics."""
    mesh = config.make_mesh()
    grid = TimeGrid.to_final_time(config.dt, config.t_final)
    trajectory = _solve(config, mesh, grid)
    out = Path(config.output_dir)
    scenario = config.get_scenario()
    profile = out / "profile.csv"
    diagnostics = out / "diagnostics.csv"
    final_state, final_diag = trajectory[-1]
    _write_profile(profile, config, final_state, final_diag.t, scenario)
    _write_diagnostics(diagnostics, config, trajectory)
    return [profile, diagnostics], 0


def _resolution_label(value: float) -> str:
    inverse = 1.0 / value
    if abs(inverse - round(inverse)) < 1e-9 * inverse:
        return f"1/{int(round(inverse))}"
    return f"{value:g}"


def _run_ladder(
    rungs: Sequence[tuple[str, float, Callable[[], float]]], jobs: int
) -> list[tuple[str, float, float | None]]:
    """Evaluate ladder rungs (label, resolution, error-fn), possibly in parallel.

    A rung that raises NoConvergenceError is marked failed (error None);
    remaining rungs still run.
    """

    def guarded(fn: Callable[[], float]) -> float | None:
        try:
            return fn()
        except NoConvergenceError as err:
            print(f"rung failed: {err}", file=sys.stderr)
            return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(guarded, fn) for _, _, fn in rungs]
            errors = [f.result() for f in futures]
    else:
        errors = [guarded(fn) for _, _, fn in rungs]
    return [
        (label, resolution, error)
        for (label, resolution, _), error in zip(rungs, errors)
    ]


def _write_convergence(
    path: Path, config: RunConfig, results: list[tuple[str, float, float | None]]
) -> int:
    lines = ["resolution,h_or_dt,error_linf_l2,rate"]
    failures = 0
    prev: tuple[float, float] | None = None  # (resolution, error) of last success
    for label, resolution, error in results:
        if error is None:
            failures += 1
            lines.append(f"{label},{_fmt(resolution)},failed,")
            prev = None
            continue
        rate = ""
        if prev is not None and abs(prev[0] / resolution - 2.0) < 1e-6:
            rate = _fmt(float(np.log2(prev[1] / error)))
        lines.append(f"{label},{_fmt(resolution)},{_fmt(error)},{rate}")
        prev = (resolution, error)
    _write_lines(path, config.header_line(), lines)
    return failures


def cmd_convergence_space(config: RunConfig) -> tuple[list[Path], int]:
    """Halving ladder over the mesh width; writes a convergence CSV."""
    scenario = config.get_scenario()
    if scenario.exact_solution is None:
        raise ConfigError(f"scenario {config.scenario!r} has no exact solution")
    grid = TimeGrid.to_final_time(config.dt, config.t_final)

    def make_rung(n: int) -> Callable[[], float]:
        def rung() -> float:
            mesh = config.make_mesh(n)
            trajectory = _solve(config, mesh, grid)
            return run_error_inf(trajectory, scenario.exact_solution)

        return rung

    rungs = []
    for level in range(config.space_levels):
        n = config.space_min_elements * 2**level
        h = 1.0 / n
        rungs.append((_resolution_label(h), h, make_rung(n)))
    results = _run_ladder(rungs, config.jobs)
    path = Path(config.output_dir) / "convergence_space.csv"
    failures = _write_convergence(path, config, results)
    return [path], failures


def cmd_convergence_time(config: RunConfig) -> tuple[list[Path], int]:
    """Halving ladder over the time step; writes a convergence CSV."""
    scenario = config.get_scenario()
    if scenario.exact_solution is None:
        raise ConfigError(f"scenario {config.scenario!r} has no exact solution")
    mesh = config.make_mesh()

    def make_rung(dt: float) -> Callable[[], float]:
        def rung() -> float:
            grid = TimeGrid.to_final_time(dt, config.t_final)
            trajectory = _solve(config, mesh, grid)
            return run_error_inf(trajectory, scenario.exact_solution)

        return rung

    rungs = []
    for level in range(config.time_levels):
        dt = config.dt_max / 2**level
        rungs.append((_resolution_label(dt), dt, make_rung(dt)))
    results = _run_ladder(rungs, config.jobs)
    path = Path(config.output_dir) / "convergence_time.csv"
    failures = _write_convergence(path, config, results)
    return [path], failures


def cmd_scenario_study(config: RunConfig) -> tuple[list[Path], int]:
    """Sweep chi (and optionally deconvolution order, degree); write profiles."""
    scenario = config.get_scenario()
    times = sorted(set(config.study_times))
    if not times:
        raise ConfigError("study_times must name at least one time")
    if times[0] < 0:
        raise ConfigError("study_times must be nonnegative")
    deconv_values = config.deconv_list or (config.deconv_order,)
    degree_values = config.degree_list or (config.degree,)

    combos = [
        (chi, n_dec, deg)
        for deg in degree_values
        for n_dec in deconv_values
        for chi in config.chi_list
    ]

    def make_member(chi: float, n_dec: int, deg: int):
        member_cfg = dataclasses.replace(
            config, chi=chi, deconv_order=n_dec, degree=deg
        )

        def member() -> list[tuple[float, object]]:
            mesh = member_cfg.make_mesh()
            grid = TimeGrid.to_final_time(member_cfg.dt, times[-1])
            trajectory = _solve(member_cfg, mesh, grid)
            snapshots = []
            for t in times:
                index = min(int(round(t / grid.dt)), grid.n_steps)
                state, diag = trajectory[index]
                snapshots.append((diag.t, state))
            return snapshots

        return member_cfg, member

    members = [(combo, *make_member(*combo)) for combo in combos]

    def guarded(fn):
        try:
            return fn()
        except NoConvergenceError as err:
            print(f"study member failed: {err}", file=sys.stderr)
            return None

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(guarded, fn) for _, _, fn in members]
            outputs = [f.result() for f in futures]
    else:
        outputs = [guarded(fn) for _, _, fn in members]

    paths: list[Path] = []
    failures = 0
    out = Path(config.output_dir)
    for ((chi, n_dec, deg), member_cfg, _), snapshots in zip(members, outputs):
        if snapshots is None:
            failures += 1
            continue
        for t, state in snapshots:
            path = out / f"profile_chi{chi:g}_N{n_dec}_P{deg}_t{t:g}.csv"
            _write_profile(path, member_cfg, state, t, scenario)
            paths.append(path)
    return paths, failures


COMMANDS = {
    "run": cmd_run,
    "conv-space": cmd_convergence_space,
    "conv-time": cmd_convergence_time,
    "study": cmd_scenario_study,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lwrfem",
        description="Stabilized FEM solver for the LWR density model",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None, help="path to a key = value file")
        for key in KEY_PARSERS:
            cmd.add_argument(f"--{key}", default=None, metavar="VALUE")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {key: getattr(args, key) for key in KEY_PARSERS}
    try:
        config = parse_config(args.config, overrides)
        files, failures = COMMANDS[args.command](config)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    for path in files:
        print(path)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
