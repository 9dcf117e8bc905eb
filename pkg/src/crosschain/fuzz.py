"""Randomized fault injection with an atomicity oracle.

Each run builds a fresh scenario, picks a fault (or none), executes the
call, and then checks the outcome two ways. The all-commit oracle replays
every node of the pinned tree as plain single-chain transactions on copies
of the chains, children before parents, which yields the state the call
must produce if it commits. Atomicity then means: the terminal business
state equals that oracle state after COMMITTED, equals the initial state
after ROLLED_BACK, and never anything in between; and no locks or
provisional entries survive. Clean-up must land within four root-chain
periods of the timeout.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field

from .ledger import CallContext
from .lockable import LockableStore
from .orchestrator import COMMITTED, ROLLED_BACK
from .scenarios import ScenarioRun, build

FAULTS = (
    "none",
    "segment_revert",
    "drop_segment",
    "delay_timeout",
    "third_party_cancel",
)


class ThirdPartyCanceller:
    """Unrelated account that cancels a stuck call the moment the timeout
    can be enforced on-chain."""

    def __init__(self, orch):
        self.orch = orch
        self.fired = False

    def on_tick(self, sim, t: int) -> None:
        orch = self.orch
        if self.fired or orch.call_id is None or orch.timeout is None:
            return
        chain = sim.chains[orch.root_chain_id]
        control = chain.contracts["control"]
        if orch.call_id in control.decisions:
            return
        next_seal = (t // chain.block_period + 1) * chain.block_period
        if next_seal >= orch.timeout:
            chain.submit("mallory", "control", "root", (orch.call_id, ()))
            self.fired = True


def _state_of(contracts_by_chain: dict) -> dict:
    return {
        cid: {
            addr: dict(obj.committed)
            for addr, obj in contracts.items()
            if isinstance(obj, LockableStore)
        }
        for cid, contracts in contracts_by_chain.items()
    }


def oracle_commit_state(run: ScenarioRun, trees: list) -> dict:
    """State if every pinned call ran as plain single-chain transactions."""
    copies = {
        cid: copy.deepcopy(run.sim.chains[cid].contracts)
        for cid in run.business_chains
    }

    def execute(node, sender: str):
        results = [execute(child, sender) for child in node.children]
        feed = iter(results)
        ctx = CallContext(
            copies[node.chain_id],
            node.chain_id,
            0,
            0,
            sender,
            cross_handler=lambda *args: next(feed),
        )
        return ctx.call(node.contract, node.function, *node.args)

    for orch, tree in zip(run.orchestrators, trees):
        execute(tree, orch.sender)
    return _state_of(copies)


@dataclass
class FuzzRecord:
    seed: int
    scenario: str
    fault: str
    target: tuple
    outcome: str | None
    completion_margin: int | None  # completion time minus timeout
    violations: list = field(default_factory=list)


def run_one(scenario: str, seed: int, variant: str = "standard") -> FuzzRecord:
    rng = random.Random(seed)
    run = build(scenario, variant=variant)
    orch = run.orchestrators[0]
    chain_id, contract, function, args = run.calls[0]
    preview = orch.simulate(chain_id, contract, function, args)
    paths = [path for path, _ in preview.walk() if path]
    fault = rng.choice(FAULTS)
    target = rng.choice(paths)
    record = FuzzRecord(seed, scenario, fault, target, None, None)

    initial = run.business_state()
    expected_commit = oracle_commit_state(run, [preview])

    if fault == "segment_revert":
        def hook(kind, cid, call_id, path):
            if kind == "segment_exec" and path == target:
                return "revert"
            return None

        for chain in run.sim.chains.values():
            chain.fault_hook = hook
    elif fault in ("drop_segment", "third_party_cancel"):
        orch.drop_paths = {target}
        if fault == "third_party_cancel":
            run.sim.listeners.insert(0, ThirdPartyCanceller(orch))

    run.launch()
    if fault == "delay_timeout":
        orch.hold_paths[target] = orch.timeout

    bound = orch.timeout + 12 * run.sim.chains[orch.root_chain_id].block_period
    finished = run.sim.run_until(lambda: orch.done, max_ticks=bound + 30)
    if not finished:
        record.violations.append("call never reached clean-up")
        return record

    record.outcome = orch.outcome
    root_period = run.sim.chains[orch.root_chain_id].block_period
    record.completion_margin = orch.completion_time - orch.timeout

    expected_outcome = COMMITTED if fault == "none" else ROLLED_BACK
    if orch.outcome != expected_outcome:
        record.violations.append(
            f"outcome {orch.outcome} but fault {fault} implies {expected_outcome}"
        )
    terminal = run.business_state()
    goal = expected_commit if orch.outcome == COMMITTED else initial
    if terminal != goal:
        record.violations.append(f"mixed or wrong state after {orch.outcome}")
    if not run.quiescent():
        record.violations.append("locks or provisional entries left behind")
    # Rollback tail after the block at the timeout: root header out to each
    # locked chain, signal block, signal header back, clean block. Headers
    # become usable one block after sealing with the standard relay and two
    # with the scalable one (the round root lands a block after recording).
    header_lag = 1 if variant == "standard" else 2
    slack = (2 * header_lag + 2) * root_period
    if orch.completion_time > orch.timeout + slack:
        record.violations.append(
            f"clean at {orch.completion_time}, past timeout + {2 * header_lag + 2} periods"
        )
    return record


@dataclass
class FuzzReport:
    scenario: str
    runs: int
    outcomes: dict = field(default_factory=dict)
    faults: dict = field(default_factory=dict)
    max_margin: int | None = None
    violations: list = field(default_factory=list)


def run_fuzz(scenario: str, runs: int, seed: int = 0, variant: str = "standard") -> FuzzReport:
    report = FuzzReport(scenario, runs)
    for i in range(runs):
        record = run_one(scenario, seed + i, variant)
        report.outcomes[record.outcome] = report.outcomes.get(record.outcome, 0) + 1
        report.faults[record.fault] = report.faults.get(record.fault, 0) + 1
        if record.completion_margin is not None:
            if report.max_margin is None or record.completion_margin > report.max_margin:
                report.max_margin = record.completion_margin
        if record.violations:
            report.violations.append(record)
    return report
