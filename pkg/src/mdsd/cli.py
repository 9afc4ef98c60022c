"""Command-line interface.

Subcommands:
  simulate <config>      run a full scenario sweep
  attenuation            print k(f) and molecular loss for one atmosphere
  invert                 print concentration and visibility for an A_dust
  errprop                print the attenuation variance table
  ingest --check <grid>  validate an MDSD-GRID v1 file

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .dust import (
    DustMedium,
    concentration_from_attenuation,
    visibility_from_attenuation,
)
from .errprop import UncertaintyBudget, variance_components
from .grids import GridFormatError, read_grid
from .scenario import ConfigError, Scenario, run_scenario
from .spectra import (
    CatalogParseError,
    PartitionModel,
    absorption_coefficient,
    absorption_db_per_km,
    mars_atmosphere,
    parse_line_catalog,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdsd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario config")
    p_sim.add_argument("config", help="scenario config file")
    p_sim.add_argument("--output-dir", default=None, help="override run.output_dir")

    p_att = sub.add_parser("attenuation", help="molecular absorption at one frequency")
    p_att.add_argument("--freq", type=float, required=True, help="Hz")
    p_att.add_argument("--temp", type=float, default=210.0, help="K")
    p_att.add_argument("--pressure", type=float, default=610.0, help="Pa")
    p_att.add_argument("--catalog", required=True, help="HITRAN-format .par file")

    p_inv = sub.add_parser("invert", help="concentration and visibility from A_dust")
    p_inv.add_argument("--adust", type=float, required=True, help="dB/km")
    p_inv.add_argument("--freq", type=float, default=1e12, help="Hz")

    p_err = sub.add_parser("errprop", help="attenuation variance breakdown")
    p_err.add_argument("--freq", type=float, default=1e12, help="Hz")
    p_err.add_argument("--n", type=float, default=1e8, help="concentration 1/m^3")

    p_ing = sub.add_parser("ingest", help="grid file validation")
    p_ing.add_argument("--check", required=True, metavar="GRID", help="MDSD-GRID v1 file")
    return parser


def _cmd_simulate(args) -> int:
    try:
        scenario = Scenario.from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_scenario(scenario, args.output_dir)
    except (GridFormatError, CatalogParseError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {manifest['rows_written']} metric rows in {manifest['wall_time_s']} s")
    if manifest["errors"]:
        for message in manifest["errors"]:
            print(f"cell error: {message}", file=sys.stderr)
    return EXIT_OK


def _cmd_attenuation(args) -> int:
    if args.freq <= 0:
        print("config error: --freq must be > 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw = Path(args.catalog).read_text()
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        catalog = parse_line_catalog(raw, {2, 22}, (0.5 * args.freq, 1.5 * args.freq))
        atm = mars_atmosphere(args.temp, args.pressure)
    except (CatalogParseError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    k = absorption_coefficient(atm, catalog, args.freq, PartitionModel())
    print(f"k(f) = {k:.6e} 1/m")
    print(f"A_abs = {absorption_db_per_km(k):.6e} dB/km")
    return EXIT_OK


def _cmd_invert(args) -> int:
    if args.adust < 0:
        print("config error: --adust must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    dust = DustMedium()
    n = concentration_from_attenuation(args.adust, dust, args.freq)
    v = visibility_from_attenuation(args.adust, dust, args.freq, allow_clear=True)
    print(f"N = {n:.6e} 1/m^3")
    print(f"V = {v:.6g} km" if v != float("inf") else "V = inf km (clear air)")
    return EXIT_OK


def _cmd_errprop(args) -> int:
    if args.freq <= 0 or args.n < 0:
        print("config error: --freq must be > 0 and --n >= 0", file=sys.stderr)
        return EXIT_CONFIG
    dust = DustMedium(concentration=args.n)
    vc = variance_components(dust, args.freq, UncertaintyBudget())
    print(f"var_r        = {vc.var_r:.6e} (dB/km)^2")
    print(f"var_N        = {vc.var_n:.6e} (dB/km)^2")
    print(f"var_eps_real = {vc.var_eps_real:.6e} (dB/km)^2")
    print(f"var_eps_imag = {vc.var_eps_imag:.6e} (dB/km)^2")
    print(f"total_sigma  = {vc.total_sigma:.6e} dB/km")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    try:
        grid = read_grid(args.check)
    except (GridFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    valid = int(grid.valid_mask.sum())
    print(
        f"OK: {grid.spec.nx}x{grid.spec.ny} grid, "
        f"{valid}/{grid.valid_mask.size} valid cells"
    )
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING)
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "attenuation": _cmd_attenuation,
        "invert": _cmd_invert,
        "errprop": _cmd_errprop,
        "ingest": _cmd_ingest,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
