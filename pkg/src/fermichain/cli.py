"""Command-line interface: ``fermichain run|compare|validate``.

Exit codes: 0 on success, 2 for an invalid configuration, 3 when a
truncation policy is exhausted during evolution.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigInvalid, PolicyExhausted
from .experiments import METHOD_ALIASES, compare_methods, load_config, run, validate_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_POLICY = 3

log = logging.getLogger("fermichain")


def _progress(every: int):
    def cb(step, time, bond_dims, n_params, discarded, observables):
        if step % every == 0:
            log.info("step %d  t=%.4g  max bond %d  params %d  discarded %.3e",
                     step, time, max(bond_dims, default=1), n_params, discarded)
    return cb


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermichain", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log evolution progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("config")
    r.add_argument("--out", required=True, help="output directory")

    c = sub.add_parser("compare", help="run one experiment under several thermal methods")
    c.add_argument("config")
    c.add_argument("--methods", default="tt,tf,mpo", help="comma separated subset of tt,tf,mpo")
    c.add_argument("--out", required=True, help="output directory")

    v = sub.add_parser("validate", help="check a configuration and print it resolved")
    v.add_argument("config")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    progress = _progress(100) if args.verbose else None
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(json.dumps(validate_config(cfg), indent=2))
        elif args.command == "run":
            art = run(cfg, args.out, progress)
            print(art.csv_path)
        else:
            methods = [m.strip() for m in args.methods.split(",") if m.strip()]
            bad = [m for m in methods if m not in METHOD_ALIASES and m not in METHOD_ALIASES.values()]
            if bad:
                raise ConfigInvalid(f"unknown methods {bad}", "compare-method")
            runs = compare_methods(cfg, methods, args.out, progress)
            for art in runs.values():
                print(art.csv_path)
    except ConfigInvalid as err:
        print(f"invalid configuration [{err.rule}]: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except PolicyExhausted as err:
        print(f"truncation policy exhausted: {err}", file=sys.stderr)
        return EXIT_POLICY
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
