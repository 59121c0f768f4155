"""Command-line entry point.

    rgap <command> --config <path> [--out <dir>] [--seed <u64>] [--override k=v ...]

Exit codes: 0 all audits pass, 2 audit violation, 3 solver failure,
4 config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .eigensolver import SolverFailure
from .experiments import COMMANDS, AuditViolation, ConfigError

EXIT_OK = 0
EXIT_AUDIT = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, _, raw = text.partition("=")
    try:
        parsed = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from exc
    return key.strip(), parsed


def _set_dotted(cfg: dict, key: str, value):
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override key {key!r} collides with a scalar")
    node[parts[-1]] = value


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rgap",
        description="Rearrangement and spectral-gap audits on discrete metric "
                    "measure spaces.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, required=True,
                        help="TOML config file")
    parser.add_argument("--out", type=Path, default=Path("rgap-out"),
                        help="output directory (created if needed)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized commands (overrides config)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="k=v", help="config override, TOML-parsed value")
    args = parser.parse_args(argv)

    try:
        try:
            with open(args.config, "rb") as fh:
                config = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config is not valid TOML: {exc}") from exc
        for item in args.override:
            key, value = _parse_override(item)
            _set_dotted(config, key, value)

        seed = args.seed if args.seed is not None else config.get("seed")
        if seed is not None:
            seed = int(seed)

        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](config, out, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AuditViolation as exc:
        print(f"audit violation: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.command}: all audits passed; outputs in {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
