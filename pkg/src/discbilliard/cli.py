"""Command-line front end.

Exit codes: 0 ok, 2 parse/usage error, 3 invalid polygon, 4 radius not
admissible, 5 I/O error, 6 invalid reflexify parameters.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, dynamics, kernel, render
from .geometry import (
    InvalidEdge,
    KTooSmall,
    Polygon,
    PolygonError,
    interior_angles,
    rationality_report,
    reflexify,
    validate_polygon,
)
from .table import ErosionInvalid, RadiusTooLarge, build_equivalent_table, compute_rP

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_POLYGON = 3
EXIT_RADIUS = 4
EXIT_IO = 5
EXIT_CONSTRUCTION = 6

OUTPUTS = {"summary", "events", "svg", "unfolding_svg"}
SVG_MAX_EVENTS = 200


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


@dataclass
class RunConfig:
    polygon_path: str
    radius: float = 0.0
    n_trajectories: int = 100
    max_bounces: int = 1000
    max_time: float | None = None
    seed: int = 0
    mode: str = "full_measure"
    outputs: list[str] = field(default_factory=lambda: ["summary"])
    events_trajectories: int = 10

    def validate(self) -> None:
        if self.radius < 0:
            raise CliError(EXIT_PARSE, "radius must be >= 0")
        if self.n_trajectories < 1 or self.max_bounces < 1 or self.events_trajectories < 0:
            raise CliError(EXIT_PARSE, "n_trajectories and max_bounces must be >= 1")
        if self.max_time is not None and not self.max_time > 0:
            raise CliError(EXIT_PARSE, "max_time must be positive or null")
        if self.mode not in dynamics.SAMPLERS:
            raise CliError(EXIT_PARSE, f"mode must be one of {sorted(dynamics.SAMPLERS)}")
        unknown = set(self.outputs) - OUTPUTS
        if unknown:
            raise CliError(EXIT_PARSE, f"unknown outputs {sorted(unknown)}")
        if "unfolding_svg" in self.outputs and self.radius != 0:
            raise CliError(EXIT_PARSE, "unfolding_svg requires radius 0")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - names
        if extra:
            raise CliError(EXIT_PARSE, f"unknown config fields {sorted(extra)}")
        if "polygon_path" not in d:
            raise CliError(EXIT_PARSE, "config needs polygon_path")
        try:
            cfg = cls(**d)
            cfg.radius = float(cfg.radius)
            cfg.n_trajectories = int(cfg.n_trajectories)
            cfg.max_bounces = int(cfg.max_bounces)
            cfg.seed = int(cfg.seed)
            cfg.events_trajectories = int(cfg.events_trajectories)
            cfg.max_time = None if cfg.max_time is None else float(cfg.max_time)
            cfg.outputs = sorted(set(cfg.outputs))
        except (TypeError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"bad config: {exc}") from exc
        cfg.validate()
        return cfg


def load_polygon(path: str | os.PathLike) -> Polygon:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
        pts = data["vertices"]
        if not isinstance(pts, list) or not all(isinstance(q, list) and len(q) == 2 for q in pts):
            raise ValueError("vertices must be a list of [x, y] pairs")
        pts = [[float(x), float(y)] for x, y in pts]
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot parse polygon file {path}: {exc}") from exc
    try:
        return validate_polygon(pts)
    except PolygonError as exc:
        raise CliError(EXIT_POLYGON, f"invalid polygon: {type(exc).__name__}: {exc}") from exc


def polygon_info(p: Polygon) -> dict:
    angles = interior_angles(p)
    rat = rationality_report(p)
    return {
        "n": p.n,
        "angles_over_pi": [a.theta / math.pi for a in angles],
        "reflex_vertices": [a.vertex_index for a in angles if a.is_reflex],
        "reflex_count": sum(a.is_reflex for a in angles),
        "rational": rat.is_rational_within_tol,
        "rationality": rat.to_json(),
        "r_P": compute_rP(p),
    }


def cmd_inspect(args) -> int:
    p = load_polygon(args.polygon)
    info = polygon_info(p)
    print(f"n: {info['n']}")
    for a in interior_angles(p):
        flag = "  reflex" if a.is_reflex else ""
        print(f"  vertex {a.vertex_index}: theta = {a.theta / math.pi:.12g} pi{flag}")
    print(f"reflex_count: {info['reflex_count']}")
    print(f"reflex_vertices: {info['reflex_vertices']}")
    rows = info["rationality"]["angles"]
    print(f"rational: {info['rational']} (tol {info['rationality']['tol_rat']:g}, q <= {info['rationality']['q_max']})")
    for row in rows:
        print(f"  vertex {row['vertex']}: {row['p']}/{row['q']} residual {row['residual']:.3g}")
    print(f"r_P: {info['r_P']:.12g}")
    return EXIT_OK


def _read_config(args) -> tuple[RunConfig, Path]:
    base = {}
    cfg_dir = Path.cwd()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {args.config}: {exc}") from exc
        try:
            base = json.loads(text)
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"cannot parse config: {exc}") from exc
        if not isinstance(base, dict):
            raise CliError(EXIT_PARSE, "config must be a JSON object")
        cfg_dir = Path(args.config).resolve().parent
    for name in ("polygon_path", "radius", "n_trajectories", "max_bounces", "max_time", "seed", "mode",
                 "events_trajectories"):
        val = getattr(args, name)
        if val is not None:
            base[name] = val
    if args.outputs is not None:
        base["outputs"] = [s for s in args.outputs.split(",") if s]
    cfg = RunConfig.from_dict(base)
    return cfg, cfg_dir


def run_simulation(cfg: RunConfig, polygon: Polygon, workers: int = 1) -> dict:
    """Everything ``simulate`` writes, as in-memory strings keyed by file name."""
    try:
        table = build_equivalent_table(polygon, cfg.radius)
    except (RadiusTooLarge, ErosionInvalid) as exc:
        raise CliError(EXIT_RADIUS, f"{type(exc).__name__}: {exc}") from exc
    if cfg.mode == "arc_start" and not table.arcs:
        raise CliError(EXIT_RADIUS, "arc_start mode needs dispersing arcs (reflex vertex and r > 0)")
    max_time = math.inf if cfg.max_time is None else cfg.max_time
    t0 = time.perf_counter()
    starts, summaries = analysis.ensemble_summaries(table, cfg.n_trajectories, cfg.max_bounces, cfg.seed,
                                                    cfg.mode, workers, max_time)
    report = analysis.report_from_summaries(summaries, cfg.mode, cfg.max_bounces)
    elapsed = time.perf_counter() - t0

    files: dict[str, str] = {}
    info = polygon_info(polygon)
    summary = {
        "config": dataclasses.asdict(cfg),
        "r_P": info["r_P"],
        "reflex_count": info["reflex_count"],
        "rationality": {"rational": info["rational"], "angles_over_pi": info["angles_over_pi"]},
        "table": {"n_walls": len(table) - len(table.arcs), "n_arcs": len(table.arcs), "radius": table.radius},
        "report": report.to_json(),
        "env": {
            "wall_clock_s": elapsed,
            "hostname": platform.node(),
            "workers": workers,
            "kernel": kernel.BACKEND,
        },
    }
    if "summary" in cfg.outputs:
        files["summary.json"] = json.dumps(summary, indent=2) + "\n"

    need_records = {"events", "svg", "unfolding_svg"} & set(cfg.outputs)
    records = []
    if need_records:
        k = max(1, cfg.events_trajectories) if "events" in cfg.outputs else 1
        for i in range(min(k, cfg.n_trajectories)):
            s0 = dynamics.SAMPLERS[cfg.mode](table, cfg.seed, i)
            records.append(dynamics.simulate(table, s0, cfg.max_bounces, max_time))
    if "events" in cfg.outputs:
        buf = io.StringIO()
        dynamics.write_events_csv(buf, [(i, rec.event_array) for i, rec in
                                        enumerate(records[: cfg.events_trajectories])])
        files["events.csv"] = buf.getvalue()
    if "svg" in cfg.outputs:
        rec = records[0]
        pts = [tuple(rec.initial.point)] + [tuple(e.point) for e in rec.events[:SVG_MAX_EVENTS]]
        files["table.svg"] = render.table_svg(table, pts)
    if "unfolding_svg" in cfg.outputs:
        rec = records[0]
        short = dynamics.simulate(table, rec.initial, min(cfg.max_bounces, 20), max_time)
        files["unfolding.svg"] = render.unfolding_svg(polygon, dynamics.unfold(polygon, short))
    return files


def cmd_simulate(args) -> int:
    cfg, cfg_dir = _read_config(args)
    ppath = Path(cfg.polygon_path)
    if not ppath.is_absolute() and not ppath.exists():
        ppath = cfg_dir / ppath
    polygon = load_polygon(ppath)
    files = run_simulation(cfg, polygon, max(1, args.workers))
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write outputs: {exc}") from exc
    rep = json.loads(files["summary.json"])["report"] if "summary.json" in files else None
    if rep is not None:
        print(f"entropy_hat={rep['entropy_hat']:.6g} arc_hit_fraction={rep['arc_hit_fraction']:.4g} "
              f"n={rep['n_total']}")
    print(f"wrote {', '.join(sorted(files))} to {out}")
    return EXIT_OK


def cmd_reflexify(args) -> int:
    p = load_polygon(args.polygon)
    try:
        q = reflexify(p, args.edge, args.k)
    except (KTooSmall, InvalidEdge) as exc:
        raise CliError(EXIT_CONSTRUCTION, f"{type(exc).__name__}: {exc}") from exc
    try:
        Path(args.out).write_text(json.dumps(q.to_json()) + "\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.out}: {exc}") from exc
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="discbilliard", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("inspect", help="angles, reflex vertices, rationality and r_P of a polygon")
    p.add_argument("polygon")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("simulate", help="run an ensemble and write summary/events/SVG files")
    p.add_argument("--config")
    p.add_argument("--polygon-path", dest="polygon_path")
    p.add_argument("--radius", type=float)
    p.add_argument("--n-trajectories", dest="n_trajectories", type=int)
    p.add_argument("--max-bounces", dest="max_bounces", type=int)
    p.add_argument("--max-time", dest="max_time", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=sorted(dynamics.SAMPLERS))
    p.add_argument("--outputs", help="comma-separated subset of " + ",".join(sorted(OUTPUTS)))
    p.add_argument("--events-trajectories", dest="events_trajectories", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reflexify", help="replace an edge by a reflex notch")
    p.add_argument("polygon")
    p.add_argument("--edge", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reflexify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
