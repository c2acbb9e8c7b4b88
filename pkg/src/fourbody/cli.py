"""
Command-line interface.

    fourbody tetra --masses 4,3,2,1
    fourbody transform --masses 4,3,2,1 [--positions FILE | --seed N]
    fourbody solve-cc --areas -3,4,6,-15
    fourbody orbit [--areas ...] --p 1.0 --e 0.72 --samples 361 [--output FILE]
    fourbody simulate (--masses ... --init FILE | --preset equilateral) --dt 1e-3 --t-end 1
    fourbody check --trajectory FILE

Options may also come from an INI file (``--config FILE``, section
``[run]``, keys named like the long options with ``_`` for ``-``);
command-line flags win.  Reals are printed with 17 significant digits.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 collision.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import central_config as ccm
from . import dynamics as dyn
from .errors import Collision, FourBodyError, SolverFailure
from .rotations import euler_zxz
from .tetrahedron import as_masses, build_shape_tetrahedron, validate_shape_identities
from .transforms import (
    PAIRS,
    ConfigurationState,
    CoordinateDecomposition,
    cartesian_distances,
    decompose_configuration,
    forward_transform,
    gram_matrix,
    pairwise_distances,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_COLLISION = 4

COMMANDS = ("tetra", "transform", "solve-cc", "orbit", "simulate", "check")
DEFAULT_AREAS = (-3.0, 4.0, 6.0, -15.0)


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    masses: tuple | None = None
    areas: tuple | None = None
    dt: float = 1e-3
    t_end: float = 1.0
    p: float = 1.0
    e: float = 0.72
    psi0: float = 0.0
    samples: int = 361
    uniform_time: bool = False
    sample_every: int = 1
    tol: float | None = None
    output: str | None = None
    format: str = "report"
    init: str | None = None
    preset: str | None = None
    positions: str | None = None
    seed: int = 0
    trajectory: str | None = None

    def validate(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "report"):
            raise InputError("format must be csv or report")
        if self.command in ("tetra", "transform") and self.masses is None:
            raise InputError(f"{self.command} requires --masses")
        if self.command == "solve-cc" and self.areas is None:
            raise InputError("solve-cc requires --areas")
        if self.command == "simulate":
            if (self.init is None) == (self.preset is None):
                raise InputError("simulate requires exactly one of --init or --preset")
            if self.init is not None and self.masses is None:
                raise InputError("simulate --init requires --masses")
            if self.preset not in (None, "equilateral"):
                raise InputError(f"unknown preset {self.preset!r}")
            if not (self.dt > 0 and self.t_end > 0):
                raise InputError("dt and t-end must be positive")
            if self.sample_every < 1:
                raise InputError("sample-every must be >= 1")
        if self.command == "orbit" and self.samples < 2:
            raise InputError("samples must be >= 2")
        if self.command == "check" and self.trajectory is None:
            raise InputError("check requires --trajectory")
        for name in ("masses", "areas"):
            v = getattr(self, name)
            if v is not None and len(v) != 4:
                raise InputError(f"--{name} needs four comma-separated values")
        return self


# ---------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    return format(float(x), ".17g")


def fmt_row(v) -> str:
    return " ".join(fmt(x) for x in np.ravel(v))


def _matrix(name, A, out):
    out.append(f"{name}:")
    for row in np.atleast_2d(A):
        out.append("  " + fmt_row(row))


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    _emit_text(buf.getvalue(), path)


def report_to_rows(lines) -> list[list[str]]:
    """Flatten report lines into ``key,value`` rows (matrix rows become ``name[k]``)."""
    rows, section, k = [], None, 0
    for line in lines:
        if line.startswith("  ") and section is not None:
            body = line.strip()
            if ":" in body:
                key, val = body.split(":", 1)
                rows.append([f"{section}.{key.strip()}", val.strip()])
            else:
                rows.append([f"{section}[{k}]", body])
                k += 1
        elif line.endswith(":"):
            section, k = line[:-1], 0
        elif ":" in line:
            section = None
            key, val = line.split(":", 1)
            rows.append([key.strip(), val.strip()])
    return rows


def _emit(lines, path=None, fmt_name="report"):
    if fmt_name == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(report_to_rows(lines))
        text = buf.getvalue()
    else:
        text = "\n".join(lines) + "\n"
    _emit_text(text, path)


def _emit_text(text, path=None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_tetra(cfg: RunConfig) -> int:
    tet = build_shape_tetrahedron(cfg.masses)
    rep = validate_shape_identities(tet, tol=cfg.tol or 1e-12)
    out = [f"masses: {fmt_row(tet.masses.values)}", f"mu: {fmt(tet.mu)}",
           f"roots: {fmt_row(tet.roots.as_array())}"]
    _matrix("E", tet.E, out)
    out.append("edges: " + " ".join(f"r{i + 1}{j + 1}={fmt(r)}" for (i, j), r in tet.edge_lengths().items()))
    out.append("identities:")
    out.extend("  " + line for line in rep.lines())
    out.append(f"result: {'PASS' if rep.passed else 'FAIL'}")
    _emit(out, cfg.output, cfg.format)
    return EXIT_OK


def _read_state_file(path, masses) -> ConfigurationState:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except ValueError:
        data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
    if data.shape[0] != 4 or data.shape[1] not in (3, 6):
        raise InputError(f"{path}: expected 4 rows of x,y,z[,vx,vy,vz]")
    V = data[:, 3:6].T if data.shape[1] == 6 else np.zeros((3, 4))
    return ConfigurationState.centered(data[:, :3].T, V, masses)


def cmd_transform(cfg: RunConfig) -> int:
    tet = build_shape_tetrahedron(cfg.masses)
    if cfg.positions:
        X = _read_state_file(cfg.positions, tet.masses).positions
    else:
        rng = np.random.default_rng(cfg.seed)
        dec0 = CoordinateDecomposition(euler_zxz(rng.uniform(0, np.pi, 3)), np.sort(rng.uniform(0.5, 2.0, 3))[::-1],
                                       euler_zxz(rng.uniform(0, np.pi, 3)))
        X = forward_transform(tet, dec0)
    dec = decompose_configuration(X, tet)
    Xr = forward_transform(tet, dec)
    d_new = pairwise_distances(gram_matrix(dec), tet)
    d_cart = cartesian_distances(X)
    out = []
    _matrix("positions", X, out)
    _matrix("G", dec.G, out)
    out.append(f"R: {fmt_row(dec.R)}")
    _matrix("Gp", dec.Gp, out)
    out.append(f"round_trip_residual: {fmt(np.max(np.abs(Xr - X)))}")
    out.append(f"distance_residual: {fmt(max(abs(d_new[p] - d_cart[p]) for p in PAIRS))}")
    _emit(out, cfg.output, cfg.format)
    return EXIT_OK


def cc_report(cc: ccm.PlanarCentralConfig) -> list[str]:
    out = [f"areas: {fmt_row(cc.areas)}", f"lambda: {fmt(cc.lam)}", "distances:"]
    out.extend(f"  r{i + 1}{j + 1}: {fmt(r)}" for (i, j), r in cc.distances.items())
    out.append(f"masses: {fmt_row(cc.masses.values)}")
    _matrix("embedding", cc.embedding, out)
    out.append(f"scale: {fmt(cc.scale)}")
    if cc.shape is None:
        out.append("shape: undefined (two masses coincide)")
    else:
        out.append(f"theta: {fmt(cc.theta)}")
        out.append(f"psi: {fmt(cc.shape.psi)}")
        _matrix("Gp", cc.Gp, out)
    out.append("residuals:")
    out.extend(f"  {k}: {fmt(v)}" for k, v in cc.residuals.items())
    return out


def cmd_solve_cc(cfg: RunConfig) -> int:
    roots = ccm.dziobek_roots(cfg.areas)
    cc = ccm.select_root(roots, cfg.areas)
    out = cc_report(cc)
    others = [r for r in roots if r.lam != cc.lam]
    for r in others:
        out.append(f"rejected_root: lambda={fmt(r.lam)} status={r.status}")
    _emit(out, cfg.output, cfg.format)
    return EXIT_OK


def cmd_orbit(cfg: RunConfig) -> int:
    cc = ccm.dziobek_solve(cfg.areas or DEFAULT_AREAS)
    conic = ccm.ConicParams(cfg.p, cfg.e, cfg.psi0)
    tab = ccm.homographic_trajectory(cc, conic, cfg.samples, uniform_time=cfg.uniform_time)
    header = ["psi", "t"] + [f"{c}{i}" for i in range(1, 5) for c in "xy"]
    rows = [[s, t] + list(P.T.ravel()) for s, t, P in zip(tab.psi, tab.t, tab.positions)]
    write_csv(cfg.output, header, rows)
    return EXIT_OK


TRAJ_HEADER = (["t"] + [f"{c}{i}" for i in range(1, 5) for c in "xyz"]
               + ["energy", "Lx", "Ly", "Lz", "R1", "R2", "R3"]
               + [f"v{c}{i}" for i in range(1, 5) for c in "xyz"]
               + [f"m{i}" for i in range(1, 5)])


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.preset == "equilateral":
        state = ccm.laplace_homothetic_state(cfg.masses or (4.0, 3.0, 2.0, 1.0))
    else:
        state = _read_state_file(cfg.init, as_masses(cfg.masses))
    tet = build_shape_tetrahedron(state.masses)
    samples = dyn.integrate(state, cfg.dt, cfg.t_end, tet=tet, sample_every=cfg.sample_every)
    m = state.masses.values
    rows = [[s.t] + list(s.state.positions.T.ravel()) + [s.energy] + list(s.L_inertial) + list(s.dec.R)
            + list(s.state.velocities.T.ravel()) + list(m) for s in samples]
    write_csv(cfg.output, TRAJ_HEADER, rows)
    return EXIT_OK


def read_trajectory(path, masses=None):
    """Samples from a trajectory CSV written by ``simulate``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader if row])
    col = {name: k for k, name in enumerate(header)}
    missing = [c for c in TRAJ_HEADER[:33] if c not in col]
    if missing:
        raise InputError(f"{path}: missing columns {missing}")
    vel = [f"v{c}{i}" for i in range(1, 5) for c in "xyz"]
    if any(v not in col for v in vel):
        raise InputError(f"{path}: velocity columns are required for residual checks")
    if masses is None:
        if "m1" not in col:
            raise InputError(f"{path}: no mass columns; pass --masses")
        masses = data[0, [col[f"m{i}"] for i in range(1, 5)]]
    tet = build_shape_tetrahedron(masses)
    pos_idx = [col[f"{c}{i}"] for i in range(1, 5) for c in "xyz"]
    vel_idx = [col[v] for v in vel]
    samples = []
    for row in data:
        X = row[pos_idx].reshape(4, 3).T
        V = row[vel_idx].reshape(4, 3).T
        ref = samples[-1].dec if samples else None
        samples.append(dyn.make_sample(row[col["t"]], X, V, tet, reference=ref))
    return tet, samples


def check_table(tet, samples, tol=None) -> list[tuple[str, float, float]]:
    """(name, value, tolerance) for each residual operator along `samples`."""
    tol = 1e-4 if tol is None else tol
    E = np.array([s.energy for s in samples])
    L = np.array([s.L_inertial for s in samples])
    # relative to |V| so that zero-energy motions are still measured sensibly
    Escale = max(abs(E[0]), abs(dyn.newton_potential(samples[0].state.positions, tet.masses)))
    Lscale = max(float(np.linalg.norm(L[0])), 1.0)
    mu = tet.mu
    return [
        ("energy_drift", float(np.max(np.abs(E - E[0]))) / Escale, tol),
        ("angular_momentum_drift", float(np.max(np.abs(L - L[0]))) / Lscale, tol),
        ("euler", float(np.max(dyn.euler_equation_residual(samples, mu))), tol),
        ("node_elimination", dyn.node_elimination_check(samples, mu), tol),
        ("scale", float(np.max(dyn.scale_equation_residual(samples, tet))), tol),
        ("torque", dyn.torque_consistency_check(samples, tet), tol),
    ]


def cmd_check(cfg: RunConfig) -> int:
    tet, samples = read_trajectory(cfg.trajectory, cfg.masses)
    table = check_table(tet, samples, cfg.tol)
    ok = all(v <= t for _, v, t in table)
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["operator", "value", "tolerance", "result"])
        w.writerows([name, fmt(v), fmt(t), "PASS" if v <= t else "FAIL"] for name, v, t in table)
        _emit_text(buf.getvalue(), cfg.output)
        return EXIT_OK
    out = [f"{'operator':<24} {'value':>24} {'tolerance':>24} result"]
    for name, v, t in table:
        out.append(f"{name:<24} {fmt(v):>24} {fmt(t):>24} {'PASS' if v <= t else 'FAIL'}")
    out.append(f"result: {'PASS' if ok else 'FAIL'}")
    _emit(out, cfg.output, cfg.format)
    return EXIT_OK


DISPATCH = {
    "tetra": cmd_tetra,
    "transform": cmd_transform,
    "solve-cc": cmd_solve_cc,
    "orbit": cmd_orbit,
    "simulate": cmd_simulate,
    "check": cmd_check,
}


def run(config: RunConfig) -> int:
    """Validate `config`, dispatch, and map failures to exit codes."""
    try:
        config.validate()
        return DISPATCH[config.command](config)
    except Collision as exc:
        print(f"error: collision: {exc}", file=sys.stderr)
        return EXIT_COLLISION
    except SolverFailure as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError, FourBodyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


# ---------------------------------------------------------------------------
# argument parsing


def _reals(text) -> tuple:
    try:
        vals = tuple(float(x) for x in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"expected four values, got {len(vals)}")
    return vals


_CONVERTERS = {"masses": _reals, "areas": _reals, "dt": float, "t_end": float, "p": float, "e": float,
               "psi0": float, "samples": int, "sample_every": int, "tol": float, "seed": int}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fourbody", description="Four-body shape coordinates and central configurations.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI file with a [run] section")
    ap.add_argument("--masses", type=_reals)
    ap.add_argument("--areas", type=_reals)
    ap.add_argument("--dt", type=float)
    ap.add_argument("--t-end", dest="t_end", type=float)
    ap.add_argument("--p", type=float, help="latus rectum of the scale conic")
    ap.add_argument("--e", type=float, help="eccentricity")
    ap.add_argument("--psi0", type=float)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--uniform-time", dest="uniform_time", action="store_const", const=True)
    ap.add_argument("--sample-every", dest="sample_every", type=int)
    ap.add_argument("--tol", type=float, help="tolerance override")
    ap.add_argument("--output", "-o")
    ap.add_argument("--format", choices=("csv", "report"))
    ap.add_argument("--init", help="CSV with 4 rows x,y,z[,vx,vy,vz]")
    ap.add_argument("--preset", choices=("equilateral",))
    ap.add_argument("--positions", help="CSV with 4 rows x,y,z")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trajectory")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if ns.config:
        cp = configparser.ConfigParser()
        if not cp.read(ns.config):
            raise InputError(f"cannot read config file {ns.config}")
        if cp.has_section("run"):
            for key, raw in cp.items("run"):
                key = key.replace("-", "_")
                if key not in {f.name for f in fields(RunConfig)} or key == "command":
                    raise InputError(f"unknown config key {key!r}")
                if key == "uniform_time":
                    values[key] = cp.getboolean("run", key)
                else:
                    values[key] = _CONVERTERS.get(key, str)(raw)
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    return RunConfig(command=ns.command, **values)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
