"""Command line interface.

Subcommands: ``run`` a config file, ``preset`` to print or run a named
figure preset, ``sweep`` a config over parameter axes, and ``spectrum`` for
number-sector eigenvalues. Exit codes: 0 success, 2 validation error, 3
numerics or resource error.
"""

from __future__ import annotations

import argparse
import os
import sys

from ..analysis import ResourceLimitError, sector_spectrum
from ..operators import AnharmonicityProfile, CouplingProfile, mhz_from_omega
from ..propagator import NumericsError
from .config import ConfigError, load_config
from .experiments import SweepSpec, run_experiment, run_sweep, write_output
from .presets import preset, preset_names, preset_text
from .records import default_output_dir, write_spectrum


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quenchsim",
        description="Exact dynamics of driven chains of K-level bosonic sites",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config file")
    p_run.add_argument("-c", "--config", required=True, help="config file path")
    p_run.add_argument("-o", "--output", help="output file (overrides config)")
    p_run.add_argument("--format", choices=("csv", "json"), help="output format override")

    p_pre = sub.add_parser("preset", help="print or run a figure preset")
    p_pre.add_argument("name", help="preset name (see 'preset list')")
    group = p_pre.add_mutually_exclusive_group()
    group.add_argument("--print", action="store_true", dest="do_print",
                       help="print the preset document (default)")
    group.add_argument("--run", action="store_true", dest="do_run", help="run the preset")
    p_pre.add_argument("-o", "--output", help="output file when running")
    p_pre.add_argument("--format", choices=("csv", "json"))

    p_sweep = sub.add_parser("sweep", help="run a cartesian parameter sweep")
    p_sweep.add_argument("-c", "--config", required=True)
    p_sweep.add_argument("--axis", action="append", default=[],
                         metavar="key=v1,v2", help="extra sweep axis (repeatable)")
    p_sweep.add_argument("-j", "--jobs", type=int, default=None, help="parallel workers")
    p_sweep.add_argument("-o", "--outdir", help="output directory")

    p_spec = sub.add_parser("spectrum", help="number-sector spectrum of the chain")
    p_spec.add_argument("-L", "--sites", type=int, required=True)
    p_spec.add_argument("-N", "--particles", type=int, required=True)
    p_spec.add_argument("-K", "--levels", type=int, required=True)
    p_spec.add_argument("--J", type=float, required=True, help="coupling/2pi in MHz")
    p_spec.add_argument("--U", type=float, required=True, help="anharmonicity/2pi in MHz")
    p_spec.add_argument("-o", "--output", help="write the spectrum to this file")
    p_spec.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.format:
        config = config.with_overrides({"format": args.format})
    result = run_experiment(config)
    path = args.output or config.output_path or "run." + config.output_format
    path = write_output(config, result, path)
    print(f"wrote {path}")
    return 0


def _cmd_preset(args) -> int:
    if args.do_run:
        config = preset(args.name)
        if args.format:
            config = config.with_overrides({"format": args.format})
        if config.sweep_axes:
            spec = SweepSpec.from_config(config)
            results = run_sweep(spec)
            failures = [r for r in results if r.error]
            for r in results:
                tag = r.path if r.path else f"FAILED: {r.error}"
                print(f"{r.params} -> {tag}")
            return 3 if failures else 0
        result = run_experiment(config)
        path = args.output or config.output_path or f"{args.name}.{config.output_format}"
        path = write_output(config, result, path)
        print(f"wrote {path}")
        return 0
    sys.stdout.write(preset_text(args.name))
    return 0


def _parse_axes(pairs) -> dict:
    axes = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--axis expects key=v1,v2 (got {pair!r})")
        key, values = pair.split("=", 1)
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ConfigError(f"--axis {key} has no values")
        axes[key.strip().lower()] = vals
    return axes


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    spec = SweepSpec.from_config(
        config,
        extra_axes=_parse_axes(args.axis),
        parallelism=args.jobs,
        output_dir=args.outdir,
    )
    print(f"sweep over {spec.size} point(s)")
    results = run_sweep(spec)
    failures = [r for r in results if r.error]
    for r in results:
        tag = r.path if r.path else f"FAILED: {r.error}"
        print(f"{r.params} -> {tag}")
    return 3 if failures else 0


def _cmd_spectrum(args) -> int:
    n_bonds = max(args.sites - 1, 1)
    report = sector_spectrum(
        args.sites,
        args.particles,
        args.levels,
        CouplingProfile.from_mhz([args.J] * n_bonds),
        AnharmonicityProfile.from_mhz([args.U] * args.sites),
    )
    lo = mhz_from_omega(report.eigenvalues[0])
    hi = mhz_from_omega(report.eigenvalues[-1])
    print(f"dimension {report.dim}, energies (value/2pi) {lo:.3f} .. {hi:.3f} MHz, "
          f"{len(set(report.bands.tolist()))} band(s)")
    if args.output:
        path = args.output
        if not os.path.isabs(path) and os.path.dirname(path) == "":
            path = os.path.join(default_output_dir(), path)
        write_spectrum(report, path, args.format)
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            return _cmd_preset(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_spectrum(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
