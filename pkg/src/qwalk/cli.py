"""Command-line driver: ``qwalk run`` and ``qwalk list``.

Exit codes: 0 on success, 1 for invalid input, 2 when a resource cap is hit.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .decoherence import ResourceCapError
from .dtqw import WindowOverflowError
from .experiments import CATALOG, ExperimentSpec, InvalidParameters, list_experiments, run_experiment
from .graph import GraphSizeError

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _key_value(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def read_config(path: str) -> dict:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            key, value = _key_value(line)
        except argparse.ArgumentTypeError as exc:
            raise InvalidParameters(f"{path}:{n}: {exc}") from exc
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qwalk", description="Reproducible quantum and classical random-walk experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", help=f"one of: {', '.join(CATALOG)}")
    run.add_argument("--param", action="append", default=[], type=_key_value, metavar="KEY=VALUE")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--config", help="key=value file; 'experiment', 'seed' and 'out' keys are honoured")
    sub.add_parser("list", help="show the experiment catalog")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_experiments())
        return EXIT_OK
    try:
        config = read_config(args.config) if args.config else {}
        experiment = args.experiment or config.pop("experiment", None)
        config.pop("experiment", None)
        seed = int(config.pop("seed", args.seed)) if args.seed == 0 else args.seed
        out = config.pop("out", args.out) if args.out == "results" else args.out
        if experiment is None:
            raise InvalidParameters("no experiment given; use --experiment or an 'experiment' config key")
        params = {**config, **dict(args.param)}
        path = run_experiment(ExperimentSpec(experiment, params, seed, out))
    except (InvalidParameters, GraphSizeError, WindowOverflowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ResourceCapError, MemoryError) as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
