"""Command-line entry point: ``berslab <subcommand> [options]``.

Each subcommand runs a group of certificates, writes its tables as CSV and
all certificates as one JSON array into the output directory, and exits 0
only if every certificate passes.  Configuration problems exit with status 2
before anything is written; numerical failures exit with status 3.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .certificates import (
    CHECKS,
    RUNNERS,
    SUITE_ORDER,
    Certificate,
    Context,
    Table,
    diagnose_reports,
    noncontrol_rows,
    trace_summary,
)
from .families import FamilySpec, parse_family
from .numerics import Grid
from .scattering import KGrid

DEFAULT_FAMILY = "gauss_bump{0.5,0,1}"
SEED_ENV = "BERSLAB_SEED"
EXIT_CONFIG = 2
EXIT_FAILURE = 3

_GRID_KEYS = {"x_min": float, "x_max": float, "n": int}
_KGRID_KEYS = {"k_min": float, "k_max": float, "n_k": int}
_TOP_KEYS = {"grid", "kgrid", "family", "tolerances", "output_dir", "threads", "figures"}


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


@dataclass
class RunConfig:
    grid: dict = field(default_factory=lambda: {"x_min": -20.0, "x_max": 20.0, "n": 4001})
    kgrid: dict = field(default_factory=lambda: {"k_min": 1e-3, "k_max": 40.0, "n_k": 512})
    family: str = DEFAULT_FAMILY
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "berslab_out"
    threads: int = 1
    figures: bool = False

    def update(self, data: dict) -> None:
        """Merge a parsed mapping, rejecting unknown keys and bad values."""
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        for key, schema in (("grid", _GRID_KEYS), ("kgrid", _KGRID_KEYS)):
            if key in data:
                getattr(self, key).update(_typed_section(key, data[key], schema))
        if "family" in data:
            if not isinstance(data["family"], str):
                raise ConfigError("family must be a string such as gauss_bump{0.5,0,1}")
            self.family = data["family"]
        if "tolerances" in data:
            if not isinstance(data["tolerances"], dict):
                raise ConfigError("tolerances must be an object")
            for name, value in data["tolerances"].items():
                self.set_tolerance(name, value)
        if "output_dir" in data:
            if not isinstance(data["output_dir"], str) or not data["output_dir"]:
                raise ConfigError("output_dir must be a non-empty string")
            self.output_dir = data["output_dir"]
        if "threads" in data:
            self.threads = _int_in_range("threads", data["threads"], 1, 256)
        if "figures" in data:
            if not isinstance(data["figures"], bool):
                raise ConfigError("figures must be true or false")
            self.figures = data["figures"]

    def set_tolerance(self, name: str, value) -> None:
        if name not in CHECKS:
            raise ConfigError(f"unknown check in tolerances: {name!r}")
        try:
            tol = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"tolerance for {name} is not a number: {value!r}") from None
        if not (math.isfinite(tol) and tol >= 0) or isinstance(value, bool):
            raise ConfigError(f"tolerance for {name} must be a finite nonnegative number")
        self.tolerances[name] = tol

    def build(self) -> tuple[Grid, KGrid, FamilySpec]:
        g, k = self.grid, self.kgrid
        if not (101 <= g["n"] <= 200001):
            raise ConfigError("grid.n must lie in [101, 200001]")
        if not (-1e3 <= g["x_min"] < 0 < g["x_max"] <= 1e3):
            raise ConfigError("grid must satisfy -1000 <= x_min < 0 < x_max <= 1000")
        if not (0 < k["k_min"] < k["k_max"] <= 1e3):
            raise ConfigError("kgrid must satisfy 0 < k_min < k_max <= 1000")
        if not (8 <= k["n_k"] <= 8192):
            raise ConfigError("kgrid.n_k must lie in [8, 8192]")
        try:
            grid = Grid(g["x_min"], g["x_max"], g["n"])
            kgrid = KGrid(k["k_min"], k["k_max"], k["n_k"])
            family = parse_family(self.family)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if family.path is not None and not Path(family.path).is_file():
            raise ConfigError(f"sampled family file not found: {family.path}")
        return grid, kgrid, family


def _typed_section(name: str, section, schema: dict) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{name} must be an object")
    unknown = set(section) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    out = {}
    for key, kind in schema.items():
        if key not in section:
            continue
        value = section[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}.{key} must be a number")
        if kind is int and value != int(value):
            raise ConfigError(f"{name}.{key} must be an integer")
        if not math.isfinite(value):
            raise ConfigError(f"{name}.{key} must be finite")
        out[key] = kind(value)
    return out


def _int_in_range(name: str, value, low: int, high: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not low <= value <= high:
        raise ConfigError(f"{name} must be an integer in [{low}, {high}]")
    return value


def _seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigError(f"{SEED_ENV} must be nonnegative")
    return seed


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (flags override it)")
    common.add_argument("--family", help="test family, e.g. gauss_bump{0.5,0,1} or sampled{path.csv}")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol", action="append", default=[], metavar="CHECK=VALUE",
                        help="override one check tolerance (repeatable)")
    common.add_argument("--threads", type=int, help="worker threads for data-parallel stages")
    common.add_argument("--figures", action="store_true", help="also render PNG figures of each table")

    parser = argparse.ArgumentParser(prog="berslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "geodesic": "chart round trips, isometry and geodesic dynamics",
        "schwarzian": "Schwarzian and Lp-Schwarzian identities",
        "cocycle": "group and Lie-algebra cocycle checks",
        "scatter": "scattering data, spectrum and outer function",
        "trace": "trace identities and large-z expansion",
        "diagnose": "sign structure, Hardy inequalities and criticality",
        "noncontrol": "Fisher non-control experiment",
        "suite": "every certificate in dependency order",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    bers_parser = sub.add_parser("bers", parents=[common], help="Bers map round trip and membership")
    bers_parser.add_argument("action", choices=["roundtrip"])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {args.config}: {exc}") from None
        config.update(data)
    if args.family is not None:
        config.family = args.family
    if args.out is not None:
        config.output_dir = args.out
    if args.threads is not None:
        config.threads = _int_in_range("--threads", args.threads, 1, 256)
    if args.figures:
        config.figures = True
    for item in args.tol:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects CHECK=VALUE, got {item!r}")
        config.set_tolerance(name.strip(), value.strip())
    return config


def write_table(path: Path, table: Table) -> None:
    np.savetxt(path, table.rows, delimiter=",", header=",".join(table.header), comments="", fmt="%.17g")


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_json_ready(payload), indent=2) + "\n")


def execute(commands, ctx: Context, out: Path, figures: bool) -> int:
    """Run the runners in order and write their artifacts; returns the exit status."""
    out.mkdir(parents=True, exist_ok=True)
    certs: list[Certificate] = []
    tables: dict[str, Table] = {}
    status = 0
    for command in commands:
        try:
            new_certs, new_tables = RUNNERS[command](ctx)
            extra = {}
            if command == "trace":
                extra["trace"] = trace_summary(ctx)
            if command == "diagnose":
                extra["diagnose_reports"] = diagnose_reports(ctx)
            if command == "noncontrol":
                extra["noncontrol"] = [asdict(r) for r in noncontrol_rows(ctx)]
        except (ArithmeticError, RuntimeError, ValueError) as exc:  # MembershipError included
            certs.append(Certificate(f"{command}.error: {exc}", None, None, math.inf, 0.0, command))
            status = EXIT_FAILURE
            break
        certs.extend(new_certs)
        tables.update(new_tables)
        for name, payload in extra.items():
            write_json(out / f"{name}.json", payload)
    for name, table in tables.items():
        write_table(out / f"{name}.csv", table)
        if figures:
            from .plotting import plot_table
            plot_table(name, table.header, table.rows, out / f"{name}.png")
    write_json(out / "certificates.json", [c.to_json() for c in certs])
    for c in certs:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.check_name}  residual={c.residual:.3e}  tol={c.tolerance:.1e}")
    if status == 0 and not all(c.passed for c in certs):
        status = EXIT_FAILURE
    print(f"{sum(c.passed for c in certs)}/{len(certs)} certificates passed; artifacts in {out}")
    return status


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        grid, kgrid, family = config.build()
        seed = _seed()
        ctx = Context(grid, kgrid, family, dict(config.tolerances), config.threads, seed)
        try:
            ctx.phi
        except ValueError as exc:
            raise ConfigError(f"family {config.family!r} is not usable on this grid: {exc}") from None
    except ConfigError as exc:
        print(f"berslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    commands = SUITE_ORDER if args.command == "suite" else (args.command,)
    return execute(commands, ctx, Path(config.output_dir), config.figures)


if __name__ == "__main__":
    sys.exit(main())
