"""Command-line front end.

Subcommands:

  scenario  run one bundled scenario to completion; optionally write the
            block trace (JSONL) and an outcome summary (JSON)
  fuzz      randomized fault-injection campaigns; nonzero exit on any
            atomicity violation
  bench     throughput report from the closed-form cost model
  verify    re-run a scenario deterministically, require the byte-identical
            trace, and revalidate every receipt proof and relayer signature

Every run is seed-determined; there is no wall-clock or OS randomness in
any code path, so two invocations with the same flags produce identical
bytes on stdout and in every artifact.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import merkle
from .fuzz import run_fuzz
from .ledger import header_from_value
from .metrics import (
    SHAPES,
    bottleneck,
    call_rate,
    observed_chain_counts,
)
from .relay import relayer_secret, sign
from .scenarios import BUILDERS, build

RUN_DEFAULTS = {
    "variant": "standard",
    "mode": "direct",
    "relayers": 1,
    "seed": 0,
    "max_ticks": 400,
}


def _settings(args) -> dict:
    """Defaults, overlaid by --config, overlaid by explicit flags."""
    merged = dict(RUN_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            merged.update(json.load(fh))
    for key in merged:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _build_run(name: str, settings: dict):
    return build(
        name,
        variant=settings["variant"],
        mode=settings["mode"],
        relayers=settings["relayers"],
    )


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# scenario


def cmd_scenario(args) -> int:
    settings = _settings(args)
    run = _build_run(args.name, settings)
    run.launch()
    finished = run.run_to_completion(settings["max_ticks"])
    if not finished:
        print(f"error: scenario {args.name} did not finish "
              f"within {settings['max_ticks']} ticks", file=sys.stderr)
        return 1
    counts = observed_chain_counts(run.sim)
    print(f"scenario {args.name} variant={settings['variant']} "
          f"mode={settings['mode']} relayers={settings['relayers']} "
          f"seed={settings['seed']}")
    for i, orch in enumerate(run.orchestrators):
        print(f"call {i}: {orch.outcome} result={orch.result!r} "
              f"completed_at={orch.completion_time} attempts={len(orch.attempts)}")
    print("txs per chain: " + " ".join(f"{cid}={counts[cid]}" for cid in sorted(counts)))
    if args.trace:
        _write(args.trace, "\n".join(run.sim.trace) + "\n")
        print(f"trace: {args.trace} ({len(run.sim.trace)} records)")
    if args.out:
        outcome = {
            "scenario": args.name,
            "variant": settings["variant"],
            "mode": settings["mode"],
            "relayers": settings["relayers"],
            "seed": settings["seed"],
            "calls": [
                {
                    "outcome": orch.outcome,
                    "result": orch.result,
                    "completed_at": orch.completion_time,
                    "attempts": orch.attempts,
                }
                for orch in run.orchestrators
            ],
            "chain_txs": {cid: counts[cid] for cid in sorted(counts)},
        }
        _write(args.out, json.dumps(outcome, sort_keys=True, indent=2) + "\n")
        print(f"outcome: {args.out}")
    return 0


# ---------------------------------------------------------------------------
# fuzz


def cmd_fuzz(args) -> int:
    settings = _settings(args)
    names = sorted(n for n in ("hotel_train", "supply_chain", "oracle"))
    if args.scenario != "all":
        names = [args.scenario]
    total_violations = 0
    for name in names:
        report = run_fuzz(name, runs=args.runs, seed=settings["seed"],
                          variant=settings["variant"])
        print(f"fuzz {name} variant={settings['variant']} runs={report.runs} "
              f"seed={settings['seed']} violations={len(report.violations)} "
              f"max_margin={report.max_margin}")
        for record in report.violations:
            print(f"  seed={record.seed} fault={record.fault} "
                  f"target={record.target} outcome={record.outcome} "
                  f"problems={record.violations}")
        total_violations += len(report.violations)
    return 1 if total_violations else 0


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args) -> int:
    rows = []
    for name in ("hotel_train", "hotel_train_many", "supply_chain", "oracle"):
        shape = SHAPES[name]
        for variant in ("standard", "scalable"):
            chain, txs = bottleneck(shape, variant)
            rate = call_rate(args.base_tps, txs, variant, args.block_period)
            rows.append({
                "scenario": name,
                "variant": variant,
                "bottleneck": chain,
                "txs_per_call": txs,
                "calls_per_sec": round(rate, 4),
            })
    if args.json:
        print(json.dumps({"base_tps": args.base_tps,
                          "block_period": args.block_period,
                          "rows": rows}, sort_keys=True, indent=2))
        return 0
    print(f"bench base_tps={args.base_tps} block_period={args.block_period}")
    header = f"{'scenario':18} {'variant':9} {'bottleneck':11} {'txs/call':>8} {'calls/sec':>10}"
    print(header)
    for row in rows:
        print(f"{row['scenario']:18} {row['variant']:9} {row['bottleneck']:11} "
              f"{row['txs_per_call']:>8} {row['calls_per_sec']:>10.2f}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _check_signatures(chain) -> int:
    """Recheck every relayer signature that landed on one chain."""
    checked = 0
    for block in chain.blocks:
        for tx in block.txs:
            if tx.function == "submit_header":
                header_value, relayer, sig = tx.args
                digest = header_from_value(header_value).digest
                if sign(relayer_secret(relayer), digest) != sig:
                    raise AssertionError(f"bad signature in {tx.tx_id}")
                checked += 1
            elif tx.function == "submit_header_multi":
                header_value, sigs = tx.args
                digest = header_from_value(header_value).digest
                for relayer, sig in sigs.items():
                    if sign(relayer_secret(relayer), digest) != sig:
                        raise AssertionError(f"bad signature in {tx.tx_id}")
                    checked += 1
            elif tx.function == "submit_round_root":
                root, relayer, sig = tx.args
                if sign(relayer_secret(relayer), root) != sig:
                    raise AssertionError(f"bad signature in {tx.tx_id}")
                checked += 1
    return checked


def cmd_verify(args) -> int:
    settings = _settings(args)
    run = _build_run(args.name, settings)
    run.launch()
    if not run.run_to_completion(settings["max_ticks"]):
        print("error: replay did not finish", file=sys.stderr)
        return 1
    with open(args.trace, encoding="utf-8") as fh:
        recorded = fh.read().splitlines()
    if recorded != run.sim.trace:
        print(f"error: trace mismatch ({len(recorded)} recorded vs "
              f"{len(run.sim.trace)} replayed records)", file=sys.stderr)
        return 1
    proofs = 0
    sigs = 0
    for cid in sorted(run.sim.chains):
        chain = run.sim.chains[cid]
        for block in chain.blocks:
            leaves = block.leaves()
            root = merkle.build_root(leaves)
            if root != block.header.receipt_root:
                print(f"error: receipt root mismatch at {cid} block "
                      f"{block.header.number}", file=sys.stderr)
                return 1
            for i in range(len(leaves)):
                if not merkle.verify(leaves[i], block.receipt_proof(i), root):
                    print(f"error: receipt proof failed at {cid} block "
                          f"{block.header.number} tx {i}", file=sys.stderr)
                    return 1
                proofs += 1
        sigs += _check_signatures(chain)
    print(f"verified: trace match, {proofs} receipt proofs, {sigs} signatures")
    return 0


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crosschain",
        description="Atomic cross-chain call simulator and cost model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p, with_scenario_name=True):
        if with_scenario_name:
            p.add_argument("name", choices=sorted(BUILDERS))
        p.add_argument("--config", help="JSON file with default flag values")
        p.add_argument("--variant", choices=["standard", "scalable"])
        p.add_argument("--relay-mode", dest="mode",
                       choices=["direct", "broadcast", "on_demand"])
        p.add_argument("--relayers", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--max-ticks", type=int, dest="max_ticks")

    p_scenario = sub.add_parser("scenario", help="run one scenario to completion")
    add_run_flags(p_scenario)
    p_scenario.add_argument("--trace", help="write the block trace here (JSONL)")
    p_scenario.add_argument("--out", help="write the outcome summary here (JSON)")
    p_scenario.set_defaults(fn=cmd_scenario)

    p_fuzz = sub.add_parser("fuzz", help="randomized fault-injection campaign")
    p_fuzz.add_argument("--scenario", default="all",
                        choices=["all", "hotel_train", "supply_chain", "oracle"])
    p_fuzz.add_argument("--runs", type=int, default=100)
    p_fuzz.add_argument("--config", help="JSON file with default flag values")
    p_fuzz.add_argument("--variant", choices=["standard", "scalable"])
    p_fuzz.add_argument("--seed", type=int)
    p_fuzz.set_defaults(fn=cmd_fuzz)

    p_bench = sub.add_parser("bench", help="closed-form throughput report")
    p_bench.add_argument("--base-tps", type=float, default=375.0)
    p_bench.add_argument("--block-period", type=float, default=1.0)
    p_bench.add_argument("--json", action="store_true")
    p_bench.set_defaults(fn=cmd_bench)

    p_verify = sub.add_parser(
        "verify", help="replay a run and revalidate its trace, proofs, signatures"
    )
    add_run_flags(p_verify)
    p_verify.add_argument("--trace", required=True)
    p_verify.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
