"""Command line entry point: ``qptomo verify-pom | bell | table | run``."""

import argparse
import logging
import sys
import time

from .harness import (CampaignConfig, CampaignError, load_config, run_campaign,
                      write_outputs)
from .pom import make_pom, save_pom, verify_pom
from .states import ENSEMBLE_KINDS, EnsembleSpec


def _parser():
    ap = argparse.ArgumentParser(prog="qptomo", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify-pom", help="run the algebraic POM checks")
    v.add_argument("--kind", choices=("product", "sic"), required=True)
    v.add_argument("--export", metavar="PATH", help="also write the POM as JSON")

    def campaign_flags(p):
        p.add_argument("--config", metavar="PATH", help="JSON campaign config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--runs", type=int, help="runs per N")
        p.add_argument("--raw", action="store_true", help="also write raw_runs.csv")

    b = sub.add_parser("bell", help="Bell-state distance curves and eta")
    campaign_flags(b)

    t = sub.add_parser("table", help="ensemble averages of n_thr and eta")
    campaign_flags(t)
    t.add_argument("--ensemble", choices=[k for k in ENSEMBLE_KINDS if k not in ("bell", "fixed")])
    t.add_argument("--states", type=int, help="number of sampled states")

    r = sub.add_parser("run", help="run whatever campaign a config file describes")
    campaign_flags(r)
    return ap


def _build_config(args, kind):
    base = {}
    if args.config:
        try:
            base = load_config(args.config).to_dict()
        except (OSError, ValueError, TypeError) as exc:
            raise _UsageError(f"cannot read config {args.config}: {exc}") from exc
    if kind is not None:
        base["kind"] = kind
    if args.seed is not None:
        base["master_seed"] = args.seed
    if args.runs is not None:
        base["runs_per_point"] = args.runs
    if args.raw:
        base["keep_raw"] = True
    if getattr(args, "states", None) is not None:
        base["n_states"] = args.states
    if getattr(args, "ensemble", None):
        base["ensemble"] = EnsembleSpec(args.ensemble).to_dict()
    try:
        return CampaignConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise _UsageError(str(exc)) from exc


class _UsageError(Exception):
    pass


def main(argv=None):
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "verify-pom":
        pom = make_pom(args.kind)
        report = verify_pom(pom)
        print(report.format())
        if args.export:
            save_pom(pom, args.export)
        return 0 if report.passed else 1

    kind = {"bell": "bell", "table": "ensemble_average", "run": None}[args.command]
    try:
        cfg = _build_config(args, kind)
    except _UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"qptomo: error: {exc}", file=sys.stderr)
        return 2

    t0 = time.time()
    try:
        result = run_campaign(cfg)
    except CampaignError as exc:
        print(f"qptomo: campaign failed: {exc}", file=sys.stderr)
        return 1
    for path in write_outputs(result, args.out):
        print(path)
    logging.getLogger(__name__).info("finished in %.1f s", time.time() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
