"""Command-line entry point: ``python -m gyrostep <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from ..fields import FieldError
from ..filters import ResonanceError, ResonanceWarning
from ..integrators import BlowUpError, ConvergenceError
from .config import ConfigError, load_scenario, load_sweep
from .experiments import (check_resonance_cmd, run_convergence_sweep, run_drift_experiment,
                          run_longtime_energy, run_scenario)

EXIT_OK, EXIT_CONFIG, EXIT_RESONANCE, EXIT_NONCONVERGED, EXIT_BLOWUP = 0, 1, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gyrostep", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "integrate one scenario"),
                        ("sweep", "convergence sweep over eps and h"),
                        ("drift", "compare perpendicular motion with the drift flow")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config")
        s.add_argument("--output", help="override the output path of the config")
    e = sub.add_parser("energy", help="long-time energy / magnetic moment run")
    e.add_argument("config")
    e.add_argument("--output")
    e.add_argument("--full", action="store_true", help="run to t = 1e7")
    e.add_argument("--perturb", type=float, default=None, help="initial-data perturbation size")
    e.add_argument("--trials", type=int, default=1)
    e.add_argument("--seed", type=int, default=None)
    r = sub.add_parser("check-resonance", help="print the non-resonance margin")
    r.add_argument("--h", type=float, required=True)
    r.add_argument("--eps", type=float, required=True)
    r.add_argument("--N", type=int, default=2)
    r.add_argument("--floor", type=float, default=0.05)
    return p


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _dispatch(args) -> int:
    if args.command == "check-resonance":
        try:
            line, code = check_resonance_cmd(args.h, args.eps, args.N, args.floor)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        print(line)
        return code
    if args.command == "sweep":
        cfg = load_sweep(args.config)
        if args.output:
            cfg = type(cfg)(**{**cfg.__dict__, "output": args.output})
        rows = run_convergence_sweep(cfg)
        bad = sum(r.status not in ("ok", "low-margin") for r in rows)
        print(f"{len(rows)} cells, {bad} failed" + (f", written to {cfg.output}" if cfg.output else ""))
        return EXIT_OK
    cfg = load_scenario(args.config)
    if args.output:
        cfg = cfg.replace(output=args.output)
    if args.command == "simulate":
        _emit(run_scenario(cfg).summary)
        return EXIT_OK
    if args.command == "drift":
        _emit(run_drift_experiment(cfg).summary)
        return EXIT_OK
    if args.trials < 1:
        raise ConfigError("--trials: must be >= 1")
    res = run_longtime_energy(cfg, full=args.full, perturb=args.perturb, trials=args.trials,
                              seed=args.seed)
    _emit(res.summary)
    return EXIT_BLOWUP if res.status == "blowup" else EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    warnings.simplefilter("always", ResonanceWarning)
    try:
        return _dispatch(args)
    except (ConfigError, FieldError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceError as exc:
        print(f"resonance: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except ConvergenceError as exc:
        print(f"non-convergence at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except BlowUpError as exc:
        print(f"blow-up at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
