"""Command-line entry point.

    gibbsframes <command> [--config FILE] [--key value ...]

Every configuration key can come from a YAML file and be overridden by a
flag of the same name (``--record-every`` and ``--record_every`` both work).
Exit codes: 0 on success, 2 for configuration errors, 3 for runtime errors.
"""

import argparse
import dataclasses
import sys

from . import harness, tables
from .config import COMMANDS, ConfigError, build_config, load_config_file, normalize_key

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

HELP = {
    "sample-loops": "sample truncated Wiener loops with Gibbs weights",
    "evolve-nls": "evolve a truncated NLS state and report invariant drift",
    "simulate-frames": "simulate stochastic moving frames on SO(3)",
    "analyze": "Wasserstein, KS and independence statistics of a run",
    "jk": "sparse k-point matrix expansion for given covariance eigenvalues",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser():
    parser = _Parser(prog="gibbsframes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, cls in COMMANDS.items():
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="YAML file of key/value settings")
        for f in dataclasses.fields(cls):
            flags = {f"--{f.name.replace('_', '-')}", f"--{f.name}"}
            if f.name == "lam":
                flags |= {"--lambda"}
            p.add_argument(*sorted(flags), dest=f.name, default=None, metavar=f.name.upper())
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = {normalize_key(k): v for k, v in (load_config_file(args.config) if args.config else {}).items()}
        values.update({k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None})
        cfg = build_config(args.command, values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "jk" and cfg.output is None:
            sys.stdout.buffer.write(tables.format_table(("bra", "ket", "coefficient"), harness.jk_rows(cfg)))
            return EXIT_OK
        manifest = harness.run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures map to one exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for note in manifest.notes:
        print(f"note: {note}")
    print(f"wrote {len(manifest.outputs)} files to {cfg.output} (content {manifest.content_hash[:12]})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
