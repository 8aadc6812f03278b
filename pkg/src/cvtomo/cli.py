"""Command-line front end.

    cvtomo estimate --state oscillator:0 --x 0 --xp 0 --epsilon 0.1
    cvtomo reconstruct --state squeezed:0,0.5,0.1 --epsilon 0.01 --out rho.csv --format csv
    cvtomo fidelity-table --table oscillator

Exit codes: 0 success, 2 usage error, 3 protocol or numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .mesh import MeshError, RefinementConfig
from .numerics import QuadratureError, RandomStream
from .protocol import ModelError
from .states import parse_state
from .tomography import estimate_element, fidelity, reconstruct

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 2, 3

TABLE_GRIDS = {
    "squeezed": ("sigma", [0.1, 0.4, 0.9], [0.01, 0.05, 0.1], lambda s: f"squeezed:0,0.5,{s}"),
    "oscillator": ("n", list(range(1, 11)), [0.01, 0.05], lambda n: f"oscillator:{n}"),
}

_FAILURES = (QuadratureError, ModelError, MeshError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    env = os.environ.get("CVTOMO_SEED")
    return int(env) if env else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file whose keys override the flags")
    common.add_argument("--state", default="oscillator:0", help="oscillator:<n> or squeezed:<mean_x>,<mean_p>,<sigma>")
    common.add_argument("--delta", type=float, default=0.1, help="detector window width")
    common.add_argument("--epsilon", type=float, default=0.01, help="weight threshold for region sizing")
    common.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    common.add_argument("--shots-epsilon", type=float, default=0.1, help="target uncertainty for shot planning")
    common.add_argument("--fail-prob", type=float, default=0.05, help="Chernoff failure probability")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $CVTOMO_SEED or 0)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = _Parser(prog="cvtomo", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    est = sub.add_parser("estimate", parents=[common], help="estimate a single element rho(x, x')")
    est.add_argument("--x", type=float, required=True)
    est.add_argument("--xp", type=float, required=True)
    sub.add_parser("reconstruct", parents=[common], help="piecewise-constant reconstruction of rho")
    tab = sub.add_parser("fidelity-table", parents=[common], help="regenerate a fidelity table")
    tab.add_argument("--table", choices=sorted(TABLE_GRIDS), required=True)
    return parser


def _apply_config(args, parser):
    if args.config is None:
        return args
    try:
        overrides = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            parser.error(f"unknown config key {key!r}")
        setattr(args, attr, value)
    return args


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        out.write_text(text)


def _refinement(args) -> RefinementConfig:
    return RefinementConfig(epsilon_weight=args.epsilon, mode=args.mode, delta=args.delta, fail_prob=args.fail_prob)


def cmd_estimate(args) -> int:
    state = parse_state(args.state)
    stream = RandomStream(args.seed) if args.mode == "sampled" else None
    est = estimate_element(state, args.x, args.xp, args.delta, args.epsilon, args.mode, stream,
                           shots_epsilon=args.shots_epsilon, fail_prob=args.fail_prob)
    report = {"state": args.state, **est.to_dict()}
    _emit(json.dumps(report, indent=2), args.out)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    state = parse_state(args.state)
    stream = RandomStream(args.seed) if args.mode == "sampled" else None
    recon = reconstruct(state, _refinement(args), stream,
                        shots_epsilon=args.shots_epsilon, fail_prob=args.fail_prob)
    fmt = args.format or (args.out.suffix.lstrip(".") if args.out and args.out.suffix in (".json", ".csv") else "json")
    if fmt == "csv":
        _emit(recon.to_csv(), args.out)
    else:
        _emit(recon.to_json(), args.out)
        if args.out is not None:
            # grid dump next to the JSON for surface plotting
            args.out.with_suffix(".grid.csv").write_text(recon.to_csv())
    return EXIT_OK


def fidelity_table(table: str, delta: float = 0.1, mode: str = "exact", seed: int = 0,
                   shots_epsilon: float = 0.1, fail_prob: float = 0.05) -> list[tuple]:
    """Rows ``(row_param, epsilon, fidelity)`` for the squeezed or oscillator grid."""
    name, params, epsilons, descriptor = TABLE_GRIDS[table]
    rows = []
    for param in params:
        state = parse_state(descriptor(param))
        for eps in epsilons:
            cfg = RefinementConfig(epsilon_weight=eps, mode=mode, delta=delta, fail_prob=fail_prob)
            stream = RandomStream(seed) if mode == "sampled" else None
            recon = reconstruct(state, cfg, stream, shots_epsilon=shots_epsilon, fail_prob=fail_prob)
            rows.append((param, eps, fidelity(recon, state).fidelity))
    return rows


def cmd_fidelity_table(args) -> int:
    name = TABLE_GRIDS[args.table][0]
    rows = fidelity_table(args.table, args.delta, args.mode, args.seed, args.shots_epsilon, args.fail_prob)
    if args.format == "json":
        text = json.dumps([{name: p, "epsilon": e, "fidelity": f} for p, e, f in rows], indent=2)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([name, "epsilon", "fidelity"])
        writer.writerows([p, e, f"{f:.6f}"] for p, e, f in rows)
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "reconstruct": cmd_reconstruct, "fidelity-table": cmd_fidelity_table}


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser.parse_args(argv), parser)
    if args.seed is None:
        args.seed = _default_seed()
    try:
        parse_state(args.state)
    except (ValueError, KeyError) as exc:
        parser.error(f"invalid --state: {exc}")
    if not args.delta > 0:
        parser.error("--delta must be positive")
    if not 0 < args.epsilon <= 1:
        parser.error("--epsilon must lie in (0, 1]")
    if not 0 < args.fail_prob < 1:
        parser.error("--fail-prob must lie in (0, 1)")
    if not args.shots_epsilon > 0:
        parser.error("--shots-epsilon must be positive")
    if args.command == "estimate" and not args.epsilon < 1:
        parser.error("estimate needs --epsilon below 1")
    try:
        return COMMANDS[args.command](args)
    except _FAILURES as exc:
        print(f"cvtomo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
