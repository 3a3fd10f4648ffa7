"""Command-line front end: presets, CSV artifacts, defect reports.

Configuration is a single JSON document passed with --config, with
dotted overrides via --set key=value (values parsed as JSON when
possible).  The presets are

    wave-wt          wave with boundary observation, every point
                     hyperbolic
    wave-mixed       the same wave split into hyperbolic, parabolic and
                     elliptic thirds
    port-hamiltonian scalar chain with endpoint coupling
    maxwell-lift-1d  two-field system under boundary data, lifted and
                     direct routes side by side

Commands
    wellposed   sweep nu and write wellposed.csv with c_min, the
                smallest eigenvalue of nu M0 + Re M1; fails when no nu
                certifies positivity
    simulate    integrate the preset and write trajectory.csv,
                ledger.csv (per-step energy balance) and io.csv
    bdspace     write the boundary space bases and a defect table
    energy      recompute the per-step ledger from a stored
                trajectory.csv

Files are UTF-8 with LF line endings; fields are comma-separated with
17 significant digits and '.' as the decimal mark.  Header comments
record the sampling seed (env EVOCTL_SEED, default 12345) and the run
parameters, so identical configurations produce byte-identical output.
Backward Euler steps dissipate an extra quadratic (1/2)<dx|M0 dx> by
construction; ledger rows expose it in the euler_correction column
(zero on midpoint steps) and the defect column holds the balance of
each step against its own identity, which is the quantity checked
against the tolerance.  Exit status: 0 when every requested defect
threshold passes, 1 when a threshold or hypothesis fails, 2 for
configuration and precondition errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys as _sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bdspace import compute_bd_space, dot_map
from .control import check_compatibility, energy_ledger, extract_io
from .errors import EvoctlError
from .evolution import SCHEMES, TimeGrid, Trajectory, check_wellposed
from .models import (
    PortHamiltonianSpec,
    WaveSpec,
    build_mixed_type_wave,
    build_port_hamiltonian,
    build_weiss_tucsnak_wave,
    drive,
    maxwell_lift_solve,
    scheme_states,
    three_region_indicators,
)
from .operators import Grid1D, build_sbp_pair_1d

PRESETS = ("wave-wt", "wave-mixed", "port-hamiltonian", "maxwell-lift-1d")
DEFAULT_SEED = 12345

DEFAULT_CONFIG = {
    "preset": "wave-wt",
    "grid": {"a": 0.0, "b": 1.0, "n_cells": 16},
    "time": {"t_end": 1.0, "n_steps": 200, "nu": 1.0},
    "scheme": "implicit_midpoint",
    "input": {"kind": "zero", "freq": 1.0, "amplitude": 1.0, "component": 0,
              "path": None},
    "initial": {"kind": "zero", "amplitude": 1.0, "mode": 1},
    "outdir": ".",
    "tolerance": None,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration."""

    preset: str
    a: float
    b: float
    n_cells: int
    t_end: float
    n_steps: int
    nu: float
    scheme: str
    input: dict
    initial: dict
    outdir: str
    tolerance: float


def _merge(base, override, path="config"):
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ValueError(f"unknown configuration key {path}.{key}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ValueError(f"{path}.{key} must be an object")
            out[key] = _merge(base[key], value, f"{path}.{key}")
        else:
            out[key] = value
    return out


def _apply_override(data, dotted, raw):
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ValueError(f"cannot override below non-object key {key!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node[keys[-1]] = value


def load_config(path, overrides, default_tolerance) -> RunConfig:
    user = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise ValueError("the configuration file must hold a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        _apply_override(user, dotted, raw)
    data = _merge(DEFAULT_CONFIG, user)

    for name, value in (("grid.a", data["grid"]["a"]), ("grid.b", data["grid"]["b"]),
                        ("time.t_end", data["time"]["t_end"]),
                        ("time.nu", data["time"]["nu"])):
        if not math.isfinite(float(value)):
            raise ValueError(f"{name} must be finite, got {value}")
    n_steps = int(data["time"]["n_steps"])
    if n_steps < 1:
        raise ValueError(f"time.n_steps must be at least 1, got {n_steps}")
    if data["preset"] not in PRESETS:
        raise ValueError(f"unknown preset {data['preset']!r}; choose from {PRESETS}")
    if data["scheme"] not in SCHEMES:
        raise ValueError(f"unknown scheme {data['scheme']!r}; choose from {SCHEMES}")
    tolerance = data["tolerance"]
    tolerance = default_tolerance if tolerance is None else float(tolerance)
    if not math.isfinite(tolerance) or tolerance <= 0:
        raise ValueError(f"tolerance must be positive and finite, got {tolerance}")
    return RunConfig(
        preset=data["preset"],
        a=float(data["grid"]["a"]), b=float(data["grid"]["b"]),
        n_cells=int(data["grid"]["n_cells"]),
        t_end=float(data["time"]["t_end"]), n_steps=n_steps,
        nu=float(data["time"]["nu"]),
        scheme=data["scheme"], input=data["input"], initial=data["initial"],
        outdir=str(data["outdir"]), tolerance=tolerance,
    )


def _seed() -> int:
    return int(os.environ.get("EVOCTL_SEED", str(DEFAULT_SEED)))


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_csv(path: Path, comments, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _base_comments(cfg: RunConfig):
    return [
        f"seed={_seed()}",
        f"preset={cfg.preset}",
        f"scheme={cfg.scheme}",
        f"grid a={_fmt(cfg.a)} b={_fmt(cfg.b)} n_cells={cfg.n_cells}",
        f"time t_end={_fmt(cfg.t_end)} n_steps={cfg.n_steps} nu={_fmt(cfg.nu)}",
    ]


def _initial_profile(cfg: RunConfig, points):
    kind = cfg.initial.get("kind", "zero")
    if kind == "zero":
        return np.zeros(len(points))
    if kind == "sine":
        amplitude = float(cfg.initial.get("amplitude", 1.0))
        mode = int(cfg.initial.get("mode", 1))
        if not math.isfinite(amplitude):
            raise ValueError("initial.amplitude must be finite")
        rel = (np.asarray(points) - cfg.a) / (cfg.b - cfg.a)
        return amplitude * np.sin(mode * np.pi * rel)
    raise ValueError(f"unknown initial kind {kind!r}; use zero or sine")


def _table_signal(path, n_inputs):
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None or not rows:
        raise ValueError(f"signal table {path} is empty")
    table = np.asarray(rows)
    if table.shape[1] != n_inputs + 1:
        raise ValueError(
            f"signal table {path} must have 1 + {n_inputs} columns, "
            f"got {table.shape[1]}"
        )
    tt = table[:, 0]

    def u(t):
        return np.array([np.interp(t, tt, table[:, 1 + j]) for j in range(n_inputs)])

    return u


def _control_signal(cfg: RunConfig, n_inputs):
    kind = cfg.input.get("kind", "zero")
    if kind == "zero":
        return None
    if kind == "sinusoid":
        freq = float(cfg.input.get("freq", 1.0))
        amplitude = float(cfg.input.get("amplitude", 1.0))
        component = int(cfg.input.get("component", 0))
        if not (math.isfinite(freq) and math.isfinite(amplitude)):
            raise ValueError("input.freq and input.amplitude must be finite")
        if not 0 <= component < n_inputs:
            raise ValueError(
                f"input.component must lie in [0, {n_inputs - 1}], got {component}"
            )

        def u(t):
            out = np.zeros(n_inputs)
            out[component] = amplitude * np.sin(freq * t)
            return out

        return u
    if kind == "table":
        path = cfg.input.get("path")
        if not path:
            raise ValueError("input.kind=table needs input.path")
        return _table_signal(path, n_inputs)
    raise ValueError(f"unknown input kind {kind!r}; use zero, sinusoid or table")


def _build_control_preset(cfg: RunConfig):
    grid = Grid1D(cfg.a, cfg.b, cfg.n_cells)
    if cfg.preset == "wave-wt":
        z1 = _initial_profile(cfg, grid.nodes())
        return build_weiss_tucsnak_wave(WaveSpec(grid=grid, z1=z1))
    if cfg.preset == "wave-mixed":
        z1 = _initial_profile(cfg, grid.nodes())
        return build_mixed_type_wave(WaveSpec(grid=grid, z1=z1),
                                     three_region_indicators(grid))
    if cfg.preset == "port-hamiltonian":
        xi1 = _initial_profile(cfg, grid.nodes())[None, :]
        return build_port_hamiltonian(
            PortHamiltonianSpec(grid=grid, Nmat=[[1.0]], xi1=xi1))
    raise ValueError(f"preset {cfg.preset!r} does not build a control system")


def _maxwell_matrices(cfg: RunConfig):
    grid = Grid1D(cfg.a, cfg.b, cfg.n_cells)
    pair = build_sbp_pair_1d(grid)
    dim = pair.n_nodes + pair.n_cells
    return pair, np.eye(dim), np.zeros((dim, dim))


def _imag_note(states):
    scale = max(1.0, np.abs(states).max())
    return f"max_imag={_fmt(np.abs(states.imag).max() / scale)}"


# ---------------------------------------------------------------------------
# commands


def cmd_wellposed(cfg: RunConfig, outdir: Path, zero_damping: bool) -> int:
    if cfg.preset == "maxwell-lift-1d":
        if zero_damping:
            raise ValueError("--zero-damping applies to presets with a Y block")
        _, M0, M1 = _maxwell_matrices(cfg)
    else:
        sys = _build_control_preset(cfg)
        M0, M1 = sys.M0, np.array(sys.M1)
        if zero_damping:
            sl = sys.partition.sl_y
            M1[sl, :] = 0.0
            M1[:, sl] = 0.0

    re_m1 = 0.5 * (M1 + M1.conj().T)
    nu_values = [(k + 1) * (2.0 * cfg.nu) / 16.0 for k in range(16)]
    rows = [(nu, float(np.linalg.eigvalsh(nu * M0 + re_m1)[0]))
            for nu in nu_values]
    write_csv(outdir / "wellposed.csv", _base_comments(cfg), ("nu", "c_min"), rows)

    report = check_wellposed(M0, M1, nu_max=2.0 * cfg.nu)
    if not report.ok:
        print(f"well-posedness fails: best c = {report.c:.6e} at nu = "
              f"{report.nu0:.6e} (need c > 0)")
        if report.witness is not None:
            witness = ", ".join(_fmt(v) for v in np.real_if_close(report.witness))
            print(f"witness direction: [{witness}]")
        return 1
    print(f"well-posed with c = {report.c:.6e} at nu = {report.nu0:.6e}")
    return 0


def _ledger_rows(sys, traj, times):
    rows = []
    worst = 0.0
    for k in range(traj.grid.n_steps):
        led = energy_ledger(sys, traj, a=times[k], b=times[k + 1])
        euler_step = traj.scheme == "backward_euler" or k < traj.n_euler_init_steps
        correction = 0.0
        if euler_step:
            dx = traj.states[k + 1] - traj.states[k]
            correction = 0.5 * np.vdot(dx, sys.M0 @ dx).real
        defect = led.defect - correction
        rows.append((times[k], times[k + 1], led.stored_drop, led.dissipation,
                     led.supply, correction, defect))
        worst = max(worst, abs(defect))
    return rows, worst


LEDGER_COLUMNS = ("t_a", "t_b", "stored_drop", "dissipation", "supply",
                  "euler_correction", "defect")


def _simulate_control(cfg: RunConfig, outdir: Path) -> int:
    sys = _build_control_preset(cfg)
    tg = TimeGrid(t_end=cfg.t_end, n_steps=cfg.n_steps, nu=cfg.nu)
    u_of_t = _control_signal(cfg, sys.partition.n_u1)
    traj = drive(sys, u_of_t, tg, cfg.scheme)
    times = tg.times()

    comments = _base_comments(cfg) + [
        f"n_euler_init_steps={traj.n_euler_init_steps}",
        _imag_note(traj.states),
    ]
    columns = ("t",) + tuple(f"x{i}" for i in range(sys.dim))
    write_csv(outdir / "trajectory.csv", comments, columns,
              [(times[k], *traj.states[k].real) for k in range(cfg.n_steps + 1)])

    io = extract_io(sys, traj)
    us = sys.control_samples(traj)
    m, ny = sys.partition.n_u1, sys.partition.n_y
    io_columns = ("t",) + tuple(f"u{i}" for i in range(m)) \
        + tuple(f"y{i}" for i in range(ny))
    write_csv(outdir / "io.csv", comments, io_columns,
              [(io.times[k], *us[k].real, *io.y_samples[k].real)
               for k in range(cfg.n_steps)])

    rows, worst = _ledger_rows(sys, traj, times)
    write_csv(outdir / "ledger.csv", comments, LEDGER_COLUMNS, rows)
    print(f"ledger defect max = {worst:.6e} (tolerance {cfg.tolerance:.0e})")
    return 0 if worst <= cfg.tolerance else 1


def _simulate_maxwell(cfg: RunConfig, outdir: Path) -> int:
    grid = Grid1D(cfg.a, cfg.b, cfg.n_cells)
    pair = build_sbp_pair_1d(grid)
    tg = TimeGrid(t_end=cfg.t_end, n_steps=cfg.n_steps, nu=cfg.nu)
    times = tg.times()
    bdD = compute_bd_space(pair, "D")

    u_of_t = _control_signal(cfg, bdD.dim)
    u_samples = None if u_of_t is None \
        else np.stack([u_of_t(t) for t in times]).astype(complex)
    E0 = _initial_profile(cfg, grid.nodes())
    result = maxwell_lift_solve(pair, None, None, u_samples,
                                (E0, np.zeros(pair.n_cells)), tg, cfg.scheme)
    direct, lifted = result.direct, result.lifted

    comments = _base_comments(cfg) + [
        f"n_euler_init_steps={direct.n_euler_init_steps}",
        _imag_note(direct.states),
    ]
    columns = ("t",) + tuple(f"x{i}" for i in range(pair.n_nodes + pair.n_cells))
    write_csv(outdir / "trajectory.csv", comments, columns,
              [(times[k], *direct.states[k].real) for k in range(cfg.n_steps + 1)])

    nn = pair.n_nodes
    data = np.zeros((cfg.n_steps + 1, bdD.dim)) if u_samples is None \
        else u_samples.real
    io_rows = []
    for k, x in scheme_states(direct):
        euler_step = cfg.scheme == "backward_euler" or k < direct.n_euler_init_steps
        t_s = times[k + 1] if euler_step else times[k] + 0.5 * tg.tau
        u_s = data[k + 1] if euler_step else 0.5 * (data[k] + data[k + 1])
        y_s = bdD.project(x[nn:]).real
        io_rows.append((t_s, *u_s, *y_s))
    io_columns = ("t",) + tuple(f"u{i}" for i in range(bdD.dim)) \
        + tuple(f"y{i}" for i in range(bdD.dim))
    write_csv(outdir / "io.csv", comments, io_columns, io_rows)

    def energy(x):
        return 0.5 * ((pair.W0 * np.abs(x[:nn]) ** 2).sum()
                      + (pair.W1 * np.abs(x[nn:]) ** 2).sum())

    rows = []
    worst = 0.0
    for k in range(cfg.n_steps):
        gap = np.abs(lifted.states[k + 1] - direct.states[k + 1]).max()
        rows.append((times[k], times[k + 1],
                     energy(direct.states[k]) - energy(direct.states[k + 1]),
                     0.0, 0.0, 0.0, gap))
        worst = max(worst, gap)
    write_csv(outdir / "ledger.csv",
              comments + ["defect column = distance between the lifted and "
                          "direct routes"],
              LEDGER_COLUMNS, rows)
    print(f"route gap max = {worst:.6e} (tolerance {cfg.tolerance:.0e})")
    return 0 if worst <= cfg.tolerance else 1


def cmd_simulate(cfg: RunConfig, outdir: Path) -> int:
    if cfg.preset == "maxwell-lift-1d":
        return _simulate_maxwell(cfg, outdir)
    return _simulate_control(cfg, outdir)


def cmd_bdspace(cfg: RunConfig, outdir: Path) -> int:
    grid = Grid1D(cfg.a, cfg.b, cfg.n_cells)
    pair = build_sbp_pair_1d(grid)
    bdG = compute_bd_space(pair, "G")
    bdD = compute_bd_space(pair, "D")
    comments = _base_comments(cfg)

    basis_rows = []
    for side, space in (("G", bdG), ("D", bdD)):
        for j in range(space.dim):
            for i, value in enumerate(space.basis[:, j]):
                basis_rows.append((side, space.dim, j, i, float(np.real(value))))
    write_csv(outdir / "bd_basis.csv", comments,
              ("side", "dimension", "basis_index", "point_index", "value"),
              basis_rows)

    rng = np.random.default_rng(_seed())
    Q = dot_map(bdG, bdD, pair)
    Qd = dot_map(bdD, bdG, pair)
    unit_gd = np.abs(Qd @ Q - np.eye(bdG.dim)).max()
    unit_dg = np.abs(Q @ Qd - np.eye(bdD.dim)).max()

    div_min = pair.minimal_div()
    grad_min = pair.minimal_grad()
    dec_div = dec_grad = green = 0.0
    for _ in range(50):
        z = rng.standard_normal(pair.n_cells)
        v = rng.standard_normal(pair.n_nodes)
        dec_div = max(dec_div, np.abs(
            pair.D @ z - div_min @ z - (pair.T @ z) / pair.W0
        ).max() / np.linalg.norm(z))
        dec_grad = max(dec_grad, np.abs(
            pair.G @ v - grad_min @ v - (pair.T.T @ v) / pair.W1
        ).max() / np.linalg.norm(v))
        lhs = np.vdot(pair.G @ v, pair.W1 * z) + np.vdot(v, pair.W0 * (pair.D @ z))
        green = max(green, abs(lhs - np.vdot(v, pair.T @ z))
                    / (np.linalg.norm(v) * np.linalg.norm(z)))

    defect_rows = [
        ("unitarity_node_to_cell", bdG.dim, unit_gd),
        ("unitarity_cell_to_node", bdD.dim, unit_dg),
        ("decomposition_div", bdD.dim, dec_div),
        ("decomposition_grad", bdG.dim, dec_grad),
        ("green_identity", bdG.dim, green),
    ]
    write_csv(outdir / "bd_defects.csv", comments,
              ("check", "dimension", "defect"), defect_rows)

    worst = max(row[2] for row in defect_rows)
    print(f"boundary space dimensions: G = {bdG.dim}, D = {bdD.dim}; "
          f"worst defect = {worst:.6e} (tolerance {cfg.tolerance:.0e})")
    if bdG.dim != bdD.dim:
        print("dimension mismatch between the node and cell sides")
        return 1
    return 0 if worst <= cfg.tolerance else 1


def _read_trajectory_csv(path):
    meta = {}
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                body = line[2:]
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if not line:
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None or not rows:
        raise ValueError(f"trajectory file {path} holds no samples")
    table = np.asarray(rows)
    return meta, table[:, 0], table[:, 1:]


def cmd_energy(cfg: RunConfig, outdir: Path, trajectory_path) -> int:
    if cfg.preset == "maxwell-lift-1d":
        raise ValueError(
            "the energy command replays control-system presets; the maxwell "
            "preset reports its route gap under simulate"
        )
    sys = _build_control_preset(cfg)
    path = Path(trajectory_path) if trajectory_path is not None \
        else outdir / "trajectory.csv"
    meta, times, states = _read_trajectory_csv(path)
    if states.shape != (cfg.n_steps + 1, sys.dim):
        raise ValueError(
            f"stored trajectory has shape {states.shape}, the configured run "
            f"needs ({cfg.n_steps + 1}, {sys.dim})"
        )
    scheme = meta.get("scheme", cfg.scheme)
    if scheme not in SCHEMES:
        raise ValueError(f"stored scheme {scheme!r} is not recognized")
    n_init = int(meta.get("n_euler_init_steps", 0))

    tg = TimeGrid(t_end=cfg.t_end, n_steps=cfg.n_steps, nu=cfg.nu)
    grid_times = tg.times()
    if np.abs(grid_times - times).max() > 1e-9 * max(1.0, tg.t_end):
        raise ValueError("stored time column does not match the configured grid")

    u_of_t = _control_signal(cfg, sys.partition.n_u1)
    inputs = np.zeros((cfg.n_steps, sys.dim + sys.partition.n_u1), dtype=complex)
    for k in range(cfg.n_steps):
        euler_step = scheme == "backward_euler" or k < n_init
        t_s = grid_times[k + 1] if euler_step else grid_times[k] + 0.5 * tg.tau
        u_k = np.zeros(sys.partition.n_u1) if u_of_t is None else u_of_t(t_s)
        inputs[k] = sys.input_vector(u_k)
    traj = Trajectory(grid=tg, states=states.astype(complex), inputs=inputs,
                      scheme=scheme, n_euler_init_steps=n_init)

    rows, worst = _ledger_rows(sys, traj, grid_times)
    comments = _base_comments(cfg) + [f"n_euler_init_steps={n_init}",
                                      f"source={path.name}"]
    write_csv(outdir / "ledger.csv", comments, LEDGER_COLUMNS, rows)
    led = energy_ledger(sys, traj, a=grid_times[n_init])
    print(f"stored drop {led.stored_drop:.6e}, dissipation {led.dissipation:.6e},"
          f" supply {led.supply:.6e} over {led.interval}")
    print(f"ledger defect max = {worst:.6e} (tolerance {cfg.tolerance:.0e})")
    return 0 if worst <= cfg.tolerance else 1


# ---------------------------------------------------------------------------
# entry point


DEFAULT_TOLERANCES = {
    "wellposed": 1e-8,
    "simulate": 1e-9,
    "energy": 1e-9,
    "bdspace": 1e-10,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="evoctl",
        description="evolutionary boundary control presets and defect reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "wellposed": "sweep nu and certify positivity of nu M0 + Re M1",
        "simulate": "integrate a preset and write trajectory, ledger and io files",
        "bdspace": "write boundary space bases and defect table",
        "energy": "recompute the per-step ledger from a stored trajectory",
    }
    for name, help_text in specs.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", default=None,
                         help="path to a JSON configuration file")
        cmd.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="KEY=VALUE",
                         help="override a configuration entry (dotted keys)")
        if name == "wellposed":
            cmd.add_argument("--zero-damping", action="store_true",
                             help="zero the damping on the observation block")
        if name == "energy":
            cmd.add_argument("--trajectory", default=None,
                             help="stored trajectory.csv (default: outdir)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides,
                          DEFAULT_TOLERANCES[args.command])
        outdir = Path(cfg.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        if args.command == "wellposed":
            return cmd_wellposed(cfg, outdir, args.zero_damping)
        if args.command == "simulate":
            return cmd_simulate(cfg, outdir)
        if args.command == "bdspace":
            return cmd_bdspace(cfg, outdir)
        return cmd_energy(cfg, outdir, args.trajectory)
    except EvoctlError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
