"""Command-line entry point: configuration, experiment dispatch, CSV and
console table emission, and VTK export of sampled realisations."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import vtk_io
from .errors import UsageError
from .experiments import (
    DEFAULT_EPS,
    ConvergenceTable,
    Schedule,
    auto_m_schedule,
    manufactured_bulk_load,
    manufactured_surface_load_coupled,
    run_convergence,
    surface_load_context,
)
from .fem import coupled_discretisation, solve_cg, surface_discretisation
from .meshing import MAX_DISK_LEVEL, MAX_ICOSPHERE_LEVEL, build_disk_mesh, build_icosphere
from .random_field import Problem, bulk_map, draw_sample, sphere_height, circle_height_theta

MAX_AMPLITUDE = 0.3

DEFAULT_LEVELS = {Problem.SURFACE: (3, 6), Problem.BULK_SURFACE: (2, 5)}


@dataclass(frozen=True)
class RunConfig:
    problem: Problem
    norm: str
    levels: tuple                 # (first, last) inclusive
    m_schedule: Optional[tuple]   # None: auto
    seed: int
    alpha: float
    beta: float
    eps_tol: float
    sigma_tol: float
    delta: float
    out_dir: Path
    export_samples: int
    repeat: int
    threads: int


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


def _build_parser() -> _Parser:
    p = _Parser(prog="stochfem", add_help=True, description=__doc__)
    p.add_argument("--problem", choices=["surface", "bulk-surface"])
    p.add_argument("--norm", choices=["l2", "h1", "both"])
    p.add_argument("--levels", help="inclusive mesh level range, e.g. 3..6")
    p.add_argument("--m-schedule", help="comma list of sample counts, or 'auto'")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--eps-tol", type=float)
    p.add_argument("--sigma-tol", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--out-dir")
    p.add_argument("--export-samples", type=int)
    p.add_argument("--repeat", type=int)
    p.add_argument("--threads", help="worker process count, or 'auto'")
    p.add_argument("--config", help="flat key = value config file")
    return p

_KEYS = (
    "problem", "norm", "levels", "m_schedule", "seed", "alpha", "beta",
    "eps_tol", "sigma_tol", "delta", "out_dir", "export_samples", "repeat",
    "threads",
)


def _read_config_file(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}")
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise UsageError(f"{path}:{ln}: unknown key '{key}'")
        values[key] = val
    return values


def _parse_levels(text) -> tuple:
    try:
        first, last = (int(s) for s in str(text).split(".."))
    except ValueError:
        raise UsageError(f"bad level range '{text}', expected e.g. 3..6")
    if first > last:
        raise UsageError("level range must be increasing")
    return first, last


def _parse_m_schedule(text):
    if text is None or str(text) == "auto":
        return None
    try:
        return tuple(int(s) for s in str(text).split(","))
    except ValueError:
        raise UsageError(f"bad M schedule '{text}', expected e.g. 1,16,256")


def _parse_threads(text) -> int:
    if text is None or str(text) == "auto":
        env = os.environ.get("STOCHFEM_THREADS")
        return int(env) if env else 1
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"bad thread count '{text}'")


def parse_config(argv) -> RunConfig:
    """Resolve flags plus optional config file into a validated RunConfig."""
    if not argv:
        raise UsageError(_build_parser().format_help())
    args = _build_parser().parse_args(argv)
    merged = _read_config_file(args.config) if args.config else {}
    for key in _KEYS:
        flag = getattr(args, key)
        if flag is not None:
            merged[key] = flag

    problem = {
        "surface": Problem.SURFACE, "bulk-surface": Problem.BULK_SURFACE,
        "bulk_surface": Problem.BULK_SURFACE,
    }.get(str(merged.get("problem", "surface")))
    if problem is None:
        raise UsageError(f"unknown problem '{merged['problem']}'")
    norm = str(merged.get("norm", "l2"))
    if norm not in ("l2", "h1", "both"):
        raise UsageError(f"unknown norm '{norm}'")
    levels = _parse_levels(merged.get("levels") or
                           "{}..{}".format(*DEFAULT_LEVELS[problem]))
    max_level = (
        MAX_ICOSPHERE_LEVEL if problem is Problem.SURFACE else MAX_DISK_LEVEL
    )
    if levels[0] < 0 or levels[1] > max_level:
        raise UsageError(f"levels must lie within 0..{max_level}")

    def _num(key, default, cast):
        try:
            return cast(merged.get(key, default))
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {key}: '{merged[key]}'")

    eps_tol = _num("eps_tol", DEFAULT_EPS[problem], float)
    sigma_tol = _num("sigma_tol", 0.3, float)
    for name, value in (("eps-tol", eps_tol), ("sigma-tol", sigma_tol)):
        if not 0.0 <= value <= MAX_AMPLITUDE:
            raise UsageError(
                f"--{name} {value} outside [0, {MAX_AMPLITUDE}]: the "
                "coefficient bounds of the pulled-back operators are only "
                "guaranteed for small amplitudes"
            )
    config = RunConfig(
        problem=problem,
        norm=norm,
        levels=levels,
        m_schedule=_parse_m_schedule(merged.get("m_schedule")),
        seed=_num("seed", 42, int),
        alpha=_num("alpha", 1.0, float),
        beta=_num("beta", 1.0, float),
        eps_tol=eps_tol,
        sigma_tol=sigma_tol,
        delta=_num("delta", 0.4, float),
        out_dir=Path(merged.get("out_dir", ".")),
        export_samples=_num("export_samples", 0, int),
        repeat=_num("repeat", 1, int),
        threads=_parse_threads(merged.get("threads")),
    )
    if config.export_samples < 0:
        raise UsageError("--export-samples must be >= 0")
    if config.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    if config.alpha <= 0 or config.beta <= 0:
        raise UsageError("alpha and beta must be positive")
    return config


def _schedule_from_config(config: RunConfig) -> Schedule:
    levels = list(range(config.levels[0], config.levels[1] + 1))
    ms = config.m_schedule
    if ms is None:
        # 'both' shares one run, so it uses the L2 pairing
        ms = auto_m_schedule(levels, "h1" if config.norm == "h1" else "l2")
    if len(ms) != len(levels):
        raise UsageError(
            f"M schedule has {len(ms)} entries for {len(levels)} levels"
        )
    return Schedule(
        problem=config.problem,
        entries=tuple(zip(levels, ms)),
        master_seed=config.seed,
        norm=config.norm,
        eps_tol=config.eps_tol,
        sigma_tol=config.sigma_tol,
        delta=config.delta,
        alpha=config.alpha,
        beta=config.beta,
        threads=config.threads,
    )


# ---------------------------------------------------------------------------
# table output


def render_csv(table: ConvergenceTable) -> str:
    header = ["h", "M"]
    for name in table.columns:
        header += [f"error_{name}", f"eoc_h_{name}", f"eoc_M_{name}"]
    lines = [",".join(header)]
    eocs = {name: table.eoc(name) for name in table.columns}
    for i, row in enumerate(table.rows):
        cells = [repr(float(row["h"])), str(row["M"])]
        for name in table.columns:
            eh, em = eocs[name][i]
            cells.append(repr(float(row["errors"][name])))
            cells.append("" if eh is None else repr(float(eh)))
            cells.append("" if em is None else repr(float(em)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_console(table: ConvergenceTable) -> str:
    cols = ["h", "M"]
    for name in table.columns:
        cols += [f"error({name})", f"eoc(h) {name}", f"eoc(M) {name}"]
    eocs = {name: table.eoc(name) for name in table.columns}
    rows = []
    for i, row in enumerate(table.rows):
        cells = [f"{row['h']:.6g}", str(row["M"])]
        for name in table.columns:
            eh, em = eocs[name][i]
            cells.append(f"{row['errors'][name]:.6g}")
            cells.append("-" if eh is None else f"{eh:.5g}")
            cells.append("-" if em is None else f"{em:.5g}")
        rows.append(cells)
    widths = [
        max(len(c[i]) for c in [cols] + rows) for i in range(len(cols))
    ]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    return "\n".join(fmt.format(*r) for r in [cols] + rows)


def emit_table(table: ConvergenceTable, out_path) -> str:
    """Write the CSV file and return the rendered console table."""
    csv = render_csv(table)
    out_path = Path(out_path)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(csv)
    except OSError as e:
        raise UsageError(f"cannot write {out_path}: {e}")
    return render_console(table)


# ---------------------------------------------------------------------------
# realisation export


def export_realisations(config: RunConfig, n: int):
    """Solve and write n path-wise realisations as legacy VTK files."""
    if n < 1:
        raise UsageError("export count must be >= 1")
    level = config.levels[1]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if config.problem is Problem.SURFACE:
        mesh = build_icosphere(level)
        disc = surface_discretisation(mesh)
        ctx = surface_load_context(disc)
        for i in range(n):
            sample = draw_sample(
                config.seed, i, Problem.SURFACE,
                eps_tol=config.eps_tol, sigma_tol=config.sigma_tol,
            )
            sol = solve_cg(disc.assemble(sample, load_values=ctx.values(sample)))
            h, _ = sphere_height(sample.height, mesh.vertices)
            deformed = mesh.vertices * (1.0 + h)[:, None]
            path = out / f"sample_{i:03d}_surface.vtk"
            vtk_io.write_surface_vtk(
                path, deformed, mesh.triangles, sol.values,
                title=f"surface realisation {i}",
            )
            written.append(path)
    else:
        mesh = build_disk_mesh(level)
        disc = coupled_discretisation(mesh)
        for i in range(n):
            sample = draw_sample(
                config.seed, i, Problem.BULK_SURFACE,
                eps_tol=config.eps_tol, sigma_tol=config.sigma_tol,
                delta=config.delta,
            )
            f = manufactured_bulk_load(sample, disc.lifted_flat)
            fg = manufactured_surface_load_coupled(
                sample, disc.edge_theta.ravel(), config.alpha, config.beta
            )
            sol = solve_cg(disc.assemble(
                sample, f_values=f, fg_values=fg,
                alpha=config.alpha, beta=config.beta,
            ))
            # the origin vertex sits in the identity region of the mapping
            deformed = mesh.vertices.copy()
            moving = np.linalg.norm(mesh.vertices, axis=1) > 1e-9
            deformed[moving] = bulk_map(sample, mesh.vertices[moving])[0]
            path = out / f"sample_{i:03d}_bulk.vtk"
            vtk_io.write_bulk_vtk(
                path, deformed, mesh.triangles, sol.values[: disc.nv],
                title=f"bulk realisation {i}",
            )
            written.append(path)
            be = disc.edge_v
            btheta = np.arctan2(
                mesh.vertices[be[:, 0], 1], mesh.vertices[be[:, 0], 0]
            )
            hb, _, _ = circle_height_theta(sample.height, btheta)
            curve_pts = mesh.vertices[be[:, 0]] * (1.0 + hb)[:, None]
            segs = np.column_stack(
                [np.arange(disc.ne), (np.arange(disc.ne) + 1) % disc.ne]
            )
            path = out / f"sample_{i:03d}_surface.vtk"
            vtk_io.write_curve_vtk(
                path, curve_pts, segs, sol.values[disc.nv:],
                title=f"boundary realisation {i}",
            )
            written.append(path)
    return written


def main(argv=None) -> int:
    try:
        config = parse_config(sys.argv[1:] if argv is None else list(argv))
        schedule = _schedule_from_config(config)
        name = config.problem.value
        out_path = Path(config.out_dir) / f"table_{name}_{config.norm}.csv"
        reference_csv = None
        for _ in range(config.repeat):
            table = run_convergence(schedule)
            csv = render_csv(table)
            if reference_csv is None:
                reference_csv = csv
            elif csv != reference_csv:
                print("error: repeated run produced different output", file=sys.stderr)
                return 1
        print(emit_table(table, out_path))
        print(f"wrote {out_path}")
        if config.export_samples:
            for path in export_realisations(config, config.export_samples):
                print(f"wrote {path}")
        return 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
