"""Command-line entry point: ``bdris-cs <subcommand> [options]``."""

import argparse
import dataclasses
import logging
import sys

from .errors import InvalidArgument, ResourceLimit
from .harness import DEFAULT_SWEEPS, METHODS, SweepSpec, emit, run_sweep
from .scenario import RIS_CONSTRAINTS, ScenarioConfig

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_IO = 0, 2, 3, 4

SUBCOMMANDS = {
    "sweep-snr": "snr",
    "sweep-meas": "meas_fraction",
    "sweep-paths": "n_paths",
    "timing": "timing_kbar",
    "trial": "single",
}

DEFAULT_METHODS = {
    "timing": ("storm", "star"),
}


def _opt_int(text):
    return None if text.lower() in ("", "none") else int(text)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(conv):
    return lambda text: [conv(v.strip()) for v in text.split(",") if v.strip()]


_SCENARIO_KEYS = {
    "n_frames": _opt_int,
    "sparsity": _opt_int,
    "meas_fraction": float,
    "snr_db": float,
    "ris_constraint": str,
    "off_grid": _bool,
}
for _f in dataclasses.fields(ScenarioConfig):
    _SCENARIO_KEYS.setdefault(_f.name, int)

_HARNESS_KEYS = {
    "methods": _list(str),
    "sweep_values": _list(float),
    "n_trials": int,
    "master_seed": int,
    "workers": int,
    "vcs_budget": int,
}


def load_config(path):
    """Parse a flat ``key = value`` file into (scenario overrides, harness overrides)."""
    scenario, harness = {}, {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidArgument(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                if key in _SCENARIO_KEYS:
                    scenario[key] = _SCENARIO_KEYS[key](value)
                elif key in _HARNESS_KEYS:
                    harness[key] = _HARNESS_KEYS[key](value)
                else:
                    raise InvalidArgument(f"unknown key {key!r}")
            except ValueError as exc:
                raise InvalidArgument(f"{path}:{lineno}: {exc}") from exc
    return scenario, harness


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bdris-cs",
        description="Sparse Tucker-core channel estimation benchmarks for BD-RIS.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value scenario file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        p.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
        p.add_argument("--values", help="comma list overriding the sweep grid")
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--noiseless", action="store_true")
        p.add_argument("--ris-constraint", choices=RIS_CONSTRAINTS)
        p.add_argument("--workers", type=int, help="parallel trial processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def make_spec(args):
    kind = SUBCOMMANDS[args.command]
    scenario, harness = load_config(args.config) if args.config else ({}, {})
    if args.noiseless:
        scenario["snr_db"] = float("inf")
    if args.ris_constraint:
        scenario["ris_constraint"] = args.ris_constraint
    base = ScenarioConfig(**scenario)

    methods = harness.get("methods", DEFAULT_METHODS.get(args.command,
                                                         ("storm", "star", "oracle_ls")))
    if args.methods:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    values = harness.get("sweep_values", DEFAULT_SWEEPS[kind])
    if args.values:
        values = _list(float)(args.values)
    if kind in ("n_paths", "timing_kbar"):
        values = [int(v) for v in values]
    n_trials = args.trials or harness.get("n_trials", 1 if kind == "single" else 200)
    seed = args.seed if args.seed is not None else harness.get("master_seed", base.seed)
    return SweepSpec(
        kind=kind,
        base=base,
        sweep_values=values,
        methods=tuple(methods),
        n_trials=n_trials,
        master_seed=seed,
        workers=args.workers or harness.get("workers", 1),
        vcs_budget=harness.get("vcs_budget", SweepSpec.vcs_budget),
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = make_spec(args)
        result = run_sweep(spec)
        emit(result, args.format, args.out)
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidArgument, ValueError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
