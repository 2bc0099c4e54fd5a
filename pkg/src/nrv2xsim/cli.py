"""Command-line entry point: run, sweep, capacity, tables.

All results go to CSV files or stdout; log lines go to stderr only, so
output files and piped tables stay clean.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import engine, l2sm, metrics, phy, scenario
from .config import (
    ConfigError,
    SimConfig,
    apply_overrides,
    expand_campaign,
    parse_campaign,
    parse_config,
)

log = logging.getLogger("nrv2xsim")


def _read_text(path: str) -> str:
    with open(path, "r") as f:
        return f.read()


def _resolve_config(args) -> SimConfig:
    cfg = parse_config(_read_text(args.config)) if args.config else SimConfig()
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    return cfg


def _cmd_run(args) -> int:
    cfg = _resolve_config(args)
    result = engine.execute_run(cfg, cfg.seed)
    metrics.write_run_csv(result, args.out)
    log.info("wrote %s (fingerprint %s, seed %d)", args.out, result.fingerprint, result.seed)
    if args.dump_samples:
        samples_path = args.out + ".samples.csv"
        with open(samples_path, "w", newline="") as f:
            f.write("drop,tx_id,phase,receivers_in_range,received_count\n")
            for row in engine.run_sample_table(cfg, cfg.seed):
                f.write(",".join(map(str, row)) + "\n")
        log.info("wrote %s", samples_path)
    if args.dump_deployment:
        rng = np.random.default_rng(engine._drop_seed(cfg.seed, 0))
        dep = scenario.generate_deployment(cfg, rng)
        with open(args.dump_deployment, "w", newline="") as f:
            scenario.write_deployment_csv(dep, f)
        log.info("wrote %s", args.dump_deployment)
    return 0


def _sweep_worker(item):
    cfg, seed = item
    return engine.execute_run(cfg, seed)


def _cmd_sweep(args) -> int:
    campaign = parse_campaign(_read_text(args.config) if args.config else "{}")
    if args.overrides:
        campaign = replace(campaign, base=apply_overrides(campaign.base, args.overrides))
    runs = expand_campaign(campaign)
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    log.info("expanding campaign: %d runs, %d worker(s)", len(runs), jobs)
    if jobs == 1 or len(runs) < 2:
        results = [_sweep_worker(item) for item in runs]
    else:
        chunk = max(1, len(runs) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, runs, chunksize=chunk))
    rows = metrics.aggregate(results)
    metrics.write_sweep_csv(rows, args.out)
    log.info("wrote %s (%d sweep points)", args.out, len(rows))
    return 0


def _cmd_capacity(args) -> int:
    cfg = _resolve_config(args)
    plan = phy.build_resource_plan(cfg)
    num = phy.Numerology.from_mu(cfg.mu)
    ue_gnb = scenario.ue_per_gnb_count(cfg.isd_m, cfg.ivd_m, 2 * cfg.lanes_per_direction)
    ceiling = phy.prr_max(plan.ue_supported, ue_gnb) if ue_gnb > 0 else 1.0
    entries = [
        ("bandwidth_mhz", format(cfg.bandwidth_mhz, "g")),
        ("mu", str(cfg.mu)),
        ("scs_khz", str(num.scs_khz)),
        ("slots_per_second", str(num.slots_per_second)),
        ("usable_symbols", str(num.usable_symbols)),
        ("n_prb", str(plan.n_prb)),
        ("nprb_pscch", str(plan.nprb_pscch)),
        ("nprb_pssch", str(plan.nprb_pssch)),
        ("nprb_total", str(plan.nprb_total)),
        ("ue_per_slot", str(plan.ue_per_slot)),
        ("ue_supported", str(plan.ue_supported)),
        ("ue_per_gnb", str(ue_gnb)),
        ("prr_max", f"{ceiling:.6f}"),
    ]
    if args.csv:
        print(",".join(name for name, _ in entries))
        print(",".join(value for _, value in entries))
    else:
        width = max(len(name) for name, _ in entries)
        for name, value in entries:
            print(f"{name:<{width}}  {value}")
    return 0


def _print_prb_table() -> None:
    print("bandwidth_mhz,mu,scs_khz,n_prb")
    for mu in phy.PRB_TABLE_MUS:
        for bw in phy.PRB_TABLE_BANDWIDTHS_MHZ:
            count = phy.PRB_TABLE.get((bw, mu))
            cell = "NA" if count is None else str(count)
            print(f"{bw},{mu},{phy.scs_khz(mu)},{cell}")


def _cmd_tables(args) -> int:
    cfg = _resolve_config(args)
    if args.prb or args.dump_bler:
        want_prb, want_bler = args.prb, args.dump_bler
    else:
        want_prb = want_bler = True
    if want_prb:
        _print_prb_table()
    if want_prb and want_bler:
        print()
    if want_bler:
        l2sm.dump_table(l2sm.active_table(cfg), sys.stdout)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config or campaign file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a config scalar (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrv2xsim",
        description="System-level NR V2X sidelink broadcast simulator",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="execute one (config, seed) run")
    _add_common(run_p)
    run_p.add_argument("--out", default="run.csv", metavar="PATH")
    run_p.add_argument(
        "--dump-samples", action="store_true",
        help="also write per-transmission samples next to --out",
    )
    run_p.add_argument("--dump-deployment", metavar="PATH",
                       help="write the first drop's deployment as CSV")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="expand and execute a campaign")
    _add_common(sweep_p)
    sweep_p.add_argument("--out", default="sweep.csv", metavar="PATH")
    sweep_p.add_argument("--jobs", type=int, default=0, metavar="N",
                         help="parallel workers (default: all cores)")
    sweep_p.set_defaults(func=_cmd_sweep)

    cap_p = sub.add_parser("capacity", help="print the resource plan for a config")
    _add_common(cap_p)
    cap_p.add_argument("--csv", action="store_true")
    cap_p.set_defaults(func=_cmd_capacity)

    tab_p = sub.add_parser("tables", help="dump the PRB grid and BLER tables")
    _add_common(tab_p)
    tab_p.add_argument("--prb", action="store_true", help="only the PRB grid table")
    tab_p.add_argument("--dump-bler", action="store_true",
                       help="only the active BLER table")
    tab_p.set_defaults(func=_cmd_tables)
    return parser


def main(argv=None) -> int:
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream closed the pipe (e.g. piped into head); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
