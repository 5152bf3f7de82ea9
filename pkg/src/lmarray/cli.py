"""Command line entry point.

Subcommands ``crest``, ``vswr``, ``distortion``, ``synth`` and ``fig4`` run
scenarios; ``validate`` checks a coupling-matrix file.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 I/O error.
The seed comes from ``--seed``, then the config file, then ``$LMARRAY_SEED``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .array_model import parse_coupling, validate_coupling
from .exceptions import ConfigError, CouplingValidationError, MatrixParseError, NumericalError, SynthesisError
from .scenario import emit_outputs, parse_config_text, run_scenario, scenario_from_dict

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("lmarray")


def _csv_list(text):
    return [p.strip() for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (JSON or key=value)")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--samples", type=int, help="Monte-Carlo draws per sweep point")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="parallel workers; never changes results")
    common.add_argument(
        "--format", action="append", choices=("csv", "json", "plot"),
        help="output format, repeatable (default csv); plot also renders figures",
    )
    common.add_argument("--n-values", type=_csv_list, help="comma-separated element counts")
    common.add_argument("--epsilons", type=_csv_list, help="comma-separated clip probabilities")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lmarray", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crest", parents=[common], help="crest factor vs. N")
    p.add_argument("--mode", dest="crest_mode", choices=("analytic", "mc"))
    p = sub.add_parser("vswr", parents=[common], help="VSWR distribution vs. N")
    p.add_argument("--model", dest="mismatch_models", type=_csv_list,
                   help="power_conserving and/or amplitude_difference")
    p = sub.add_parser("distortion", parents=[common], help="clipping distortion vs. N")
    p.add_argument("--etas", type=_csv_list, help="comma-separated target efficiencies")
    sub.add_parser("synth", parents=[common], help="parasitic / load-modulated synthesis demo")
    p = sub.add_parser("fig4", parents=[common], help="crest, VSWR and distortion sweeps")
    p.add_argument("--mode", dest="crest_mode", choices=("analytic", "mc"))

    p = sub.add_parser("validate", help="check a coupling-matrix file")
    p.add_argument("path")
    p.add_argument("--z-ref", type=float, default=50.0)
    return parser


def _validate(args) -> int:
    try:
        with open(args.path, encoding="utf-8") as fh:
            cm = parse_coupling(fh.read(), args.z_ref)
    except OSError as exc:
        print(f"error: cannot read {args.path}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    except MatrixParseError as exc:
        print(f"error: {args.path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = validate_coupling(cm)
    if report:
        for v in report:
            print(f"violation: {v}")
        return EXIT_NUMERICAL
    print(f"ok: {cm.n}x{cm.n} coupling matrix is reciprocal and passive")
    return EXIT_OK


def _scenario(args):
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {args.config}: {exc.strerror}") from None
    overrides = {
        "kind": args.command,
        "seed": args.seed,
        "samples": args.samples,
        "output_dir": args.out,
        "workers": args.workers,
        "formats": args.format,
        "n_values": args.n_values,
        "epsilons": args.epsilons,
    }
    for name in ("crest_mode", "mismatch_models", "etas"):
        overrides[name] = getattr(args, name, None)
    if args.command == "vswr" and args.epsilons:
        overrides["vswr_epsilons"] = args.epsilons
    return scenario_from_dict(raw, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        return _validate(args)
    try:
        scenario = _scenario(args)
        log.info("running %s (seed %d, %d samples)", scenario.kind.value, scenario.seed, scenario.samples)
        bundle = run_scenario(scenario)
        written = emit_outputs(bundle, scenario.output_dir, scenario.formats)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SynthesisError, CouplingValidationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MatrixParseError as exc:
        print(f"config error: coupling file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
