"""Command-line driver: ``dragphase <verb> --config cfg.json --out dir``.

On failure the process exits nonzero and writes one JSON line to stderr,
``{"error": "<ExceptionType>", "message": "..."}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from dragphase.config import ConfigError, dump_config, load_config
from dragphase.dynamics import ReentryError
from dragphase.lp_builder import SpacingTarget, assemble, write_lp
from dragphase.metrics import write_run_csv
from dragphase.mpc import (
    ControlError,
    HorizonInfeasibleError,
    find_min_horizon,
    initial_state,
    run_horizon_sweep,
    run_lifetime,
    run_mpc,
    run_open_loop,
)
from dragphase.sensitivity import build_reference

log = logging.getLogger("dragphase")

EXIT_CONFIG = 2
EXIT_RUN = 3
EXIT_IO = 4


def _dump_lp(c0, horizon, scn, p, env, out: Path) -> None:
    ref = build_reference(c0, horizon, p, env, scn.dt_command)
    lp = assemble(c0, horizon, ref, SpacingTarget.equal_spacing(c0.n_sats), scn, p)
    path = out / f"lp_T{horizon}.txt"
    write_lp(lp, path)
    log.info("wrote %s", path)


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_min_horizon(args, sat, env, scn, out):
    c0 = initial_state(scn, env)
    t0 = time.perf_counter()
    horizon = find_min_horizon(c0, scn, sat, env)
    _write_json(
        out / "min_horizon.json",
        {"n_sats": scn.n_sats, "min_horizon_days": horizon, "seconds": time.perf_counter() - t0},
    )
    if args.dump_lp:
        _dump_lp(c0, horizon, scn, sat, env, out)
    print(horizon)


def cmd_open_loop(args, sat, env, scn, out):
    c0 = initial_state(scn, env)
    if args.dump_lp:
        _dump_lp(c0, args.horizon, scn, sat, env, out)
    runlog, rep = run_open_loop(c0, args.horizon, scn, sat, env)
    write_run_csv(runlog, out)
    print(
        f"open-loop T={args.horizon}: max spacing error {rep.max_spacing_error:.4f} deg, "
        f"drop {rep.max_altitude_drop:.3f} km (predicted {rep.predicted_drop:.3f} km)"
    )


def cmd_mpc(args, sat, env, scn, out):
    c0 = initial_state(scn, env)
    if args.dump_lp:
        _dump_lp(c0, args.horizon, scn, sat, env, out)
    runlog, rep = run_mpc(c0, args.horizon, scn, sat, env)
    write_run_csv(runlog, out)
    print(
        f"mpc T={args.horizon}: {rep.days} days, max spacing error "
        f"{rep.max_spacing_error:.4f} deg, drop {rep.max_altitude_drop:.3f} km, "
        f"{rep.recoveries} recoveries"
    )


def _parse_horizons(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad horizon list {text!r}") from exc
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("horizons must be positive integers")
    return values


def cmd_sweep(args, sat, env, scn, out):
    c0 = initial_state(scn, env)
    if args.dump_lp:
        for horizon in args.horizons:
            _dump_lp(c0, horizon, scn, sat, env, out)
    rows = run_horizon_sweep(c0, args.horizons, scn, sat, env)
    fields = list(rows[0])
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(
                {k: format(v, ".17g") if isinstance(v, float) else v for k, v in row.items()}
            )
    for row in rows:
        print(f"T={row['horizon_days']}: drop {row['max_altitude_drop_km']:.3f} km {row['status']}")


def cmd_lifetime(args, sat, env, scn, out):
    c0 = initial_state(scn, env)
    res = run_lifetime(c0, scn, sat, env)
    write_run_csv(res.runlog, out)
    print(f"lifetime {res.lifetime_days:.0f} days, reentered={res.reentered}")


def cmd_dump_config(args, sat, env, scn, out):
    (out / "config.json").write_text(dump_config(sat, env, scn))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dragphase", description="Differential-drag phasing of a satellite cluster."
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", required=True, type=Path)
        sp.add_argument("--dump-lp", action="store_true", help="write the day-0 LP as text")
        sp.set_defaults(func=func)
        return sp

    verb("min-horizon", cmd_min_horizon, "smallest feasible horizon")
    verb("open-loop", cmd_open_loop, "one solve, commands applied blind").add_argument(
        "--horizon", type=int, required=True
    )
    verb("mpc", cmd_mpc, "shrinking-horizon MPC").add_argument(
        "--horizon", type=int, required=True
    )
    verb("sweep", cmd_sweep, "MPC over several horizons").add_argument(
        "--horizons", type=_parse_horizons, required=True, help="comma-separated, e.g. 71,98,120"
    )
    verb("lifetime", cmd_lifetime, "acquisition, drift and maintenance until reentry")
    verb("dump-config", cmd_dump_config, "write the resolved config with all defaults")
    return ap


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        sat, env, scn = load_config(args.config)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        args.func(args, sat, env, scn, args.out)
    except (HorizonInfeasibleError, ControlError, ReentryError, ValueError) as exc:
        return _fail(exc, EXIT_RUN)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    return 0


if __name__ == "__main__":
    sys.exit(main())
