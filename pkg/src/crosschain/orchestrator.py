"""Client-side coordination of one cross-chain call.

The orchestrator first dry-runs the call against sandbox copies of every
chain's contracts. Each cross-chain call the business code makes during
the dry run becomes a node of the call tree, pinned with the exact
arguments used and the result produced, and flagged when it locked stores.
Live execution then replays that tree: deepest segments first (each one an
ordinary transaction carrying event proofs), then the root decision, then
signals to release locks, then the clean-up. Every step waits until the
headers its proofs rely on are usable at the destination, and header
transfers are requested only where the protocol needs them.

If the decision cannot be reached in time the orchestrator submits a
cancelling root transaction timed to land in the first root-chain block at
or past the timeout, which keeps the worst-case distance from timeout to
clean-up short and bounded.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .crosscontrol import (
    CLEAN_EVENT,
    COMMIT,
    Frame,
    ROOT_EVENT,
    SEGMENT_EVENT,
    SIGNAL_EVENT,
    START_EVENT,
    node_value,
)
from .encoding import encode_value, sha256
from .ledger import CallContext

SIM_CALL_ID = sha256(b"simulated-call")

COMMITTED = "COMMITTED"
ROLLED_BACK = "ROLLED_BACK"


@dataclass
class CallNode:
    chain_id: str
    contract: str
    function: str
    args: tuple
    expect: object = None
    children: list = field(default_factory=list)
    writes: bool = False

    def to_value(self) -> dict:
        return node_value(
            self.chain_id,
            self.contract,
            self.function,
            self.args,
            self.expect,
            tuple(child.to_value() for child in self.children),
        )

    def walk(self, path: tuple = ()):
        yield path, self
        for i, child in enumerate(self.children):
            yield from child.walk(path + (i,))


def plan(tree: CallNode) -> list[tuple[str, tuple]]:
    """Phases of the live run: start, segment waves deepest first, root,
    signals for lock-holding nodes off the root chain, clean."""
    by_depth: dict[int, list[tuple]] = {}
    for path, _ in tree.walk():
        if path:
            by_depth.setdefault(len(path), []).append(path)
    phases: list[tuple[str, tuple]] = [("start", ((),))]
    for depth in sorted(by_depth, reverse=True):
        phases.append(("segment", tuple(sorted(by_depth[depth]))))
    phases.append(("root", ((),)))
    signals = tuple(
        sorted(
            path
            for path, node in tree.walk()
            if path and node.writes and node.chain_id != tree.chain_id
        )
    )
    if signals:
        phases.append(("signal", signals))
    phases.append(("clean", ((),)))
    return phases


class Orchestrator:
    def __init__(
        self,
        sim,
        relay,
        root_chain_id: str,
        sender: str,
        enterprise=None,
        timeout_periods: int = 10,
        retries: int = 0,
        drop_paths=(),
        hold_paths=None,
    ):
        self.sim = sim
        self.relay = relay
        self.root_chain_id = root_chain_id
        self.sender = sender
        self.enterprise = set(enterprise) if enterprise is not None else set(sim.chains)
        self.timeout_periods = timeout_periods
        self.retries_left = retries
        self.drop_paths = set(drop_paths)
        self.hold_paths = dict(hold_paths or {})  # path -> earliest submit tick

        self._entry = None
        self._nonce = 0
        self.call_id: bytes | None = None
        self.tree: CallNode | None = None
        self.timeout: int | None = None
        self.outcome: str | None = None
        self.result = None
        self.done = False
        self.completion_time: int | None = None
        self.attempts: list[str] = []

        self._paths: dict[tuple, CallNode] = {}
        self._submitted: set = set()
        self._cursors: dict[str, int] = {}
        self._seen: dict[tuple, dict] = {}

    # ------------------------------------------------------------------
    # set-up

    def check_reach(self, tree: CallNode) -> bool:
        return all(node.chain_id in self.enterprise for _, node in tree.walk())

    def simulate(self, chain_id: str, contract: str, function: str, args) -> CallNode:
        """Dry-run the call on sandbox copies and pin the resulting tree."""
        sandboxes: dict[str, dict] = {}

        def contracts_for(cid: str) -> dict:
            if cid not in sandboxes:
                sandboxes[cid] = copy.deepcopy(self.sim.chains[cid].contracts)
            return sandboxes[cid]

        def run(cid, address, function, args, path) -> CallNode:
            node = CallNode(cid, address, function, tuple(args))
            contracts = contracts_for(cid)
            control = contracts.get("control")

            def handler(ctx, child_cid, child_contract, child_fn, child_args):
                child = run(
                    child_cid,
                    child_contract,
                    child_fn,
                    child_args,
                    path + (len(node.children),),
                )
                node.children.append(child)
                return child.expect

            ctx = CallContext(
                contracts,
                cid,
                self.sim.now + 1,
                0,
                self.sender,
                cross_handler=handler,
            )
            prior = control.frame if control is not None else None
            if control is not None:
                control.frame = Frame(SIM_CALL_ID, path, {}, [])
            try:
                node.expect = ctx.call(address, function, *args)
                if control is not None:
                    node.writes = bool(control.frame.locked)
            finally:
                if control is not None:
                    control.frame = prior
            return node

        return run(chain_id, contract, function, tuple(args), ())

    def start_call(self, chain_id: str, contract: str, function: str, args=()) -> bytes:
        if chain_id != self.root_chain_id:
            raise ValueError("entry node must live on the orchestrator's root chain")
        self._entry = (chain_id, contract, function, tuple(args))
        self._begin_attempt()
        return self.call_id

    def _begin_attempt(self, now: int | None = None) -> None:
        chain_id, contract, function, args = self._entry
        tree = self.simulate(chain_id, contract, function, args)
        if not self.check_reach(tree):
            raise ValueError("call tree leaves the reachable chain set")
        self.tree = tree
        self._paths = dict(tree.walk())
        self.call_id = sha256(
            encode_value((self.root_chain_id, self.sender, self._nonce))
        )
        self._nonce += 1
        self._submitted = set()
        self.outcome = None
        self.result = None
        self.completion_time = None
        root_chain = self.sim.chains[self.root_chain_id]
        start_ts = self._next_seal(root_chain, now)
        self.timeout = start_ts + self.timeout_periods * root_chain.block_period
        root_chain.submit(
            self.sender, "control", "start", (self.call_id, self.timeout, tree.to_value())
        )

    def _next_seal(self, chain, now: int | None = None) -> int:
        # Inside on_tick(t) the simulator clock still reads t - 1, so callers
        # there must pass the tick; a submission made during tick t lands in
        # the first block sealed strictly after t.
        if now is None:
            now = self.sim.now
        period = chain.block_period
        return (now // period + 1) * period

    # ------------------------------------------------------------------
    # chain watching

    def _scan_all(self) -> None:
        for cid in sorted(self.enterprise):
            chain = self.sim.chains[cid]
            for number in range(self._cursors.get(cid, 0), len(chain.blocks)):
                block = chain.blocks[number]
                for ti, (tx, receipt) in enumerate(zip(block.txs, block.receipts)):
                    if receipt.status != "COMMITTED":
                        continue
                    for ei, event in enumerate(receipt.events):
                        if event.contract != "control":
                            continue
                        payload = event.payload
                        key = (
                            event.name,
                            payload.get("call"),
                            tuple(payload.get("path", ())),
                        )
                        self._seen.setdefault(
                            key,
                            {
                                "chain": cid,
                                "block": number,
                                "tx_index": ti,
                                "event_index": ei,
                                "payload": payload,
                            },
                        )
                self._cursors[cid] = number + 1

    def _event(self, name: str, path: tuple = ()):
        return self._seen.get((name, self.call_id, path))

    def _proof(self, record: dict, dest_chain_id: str) -> dict:
        chain = self.sim.chains[record["chain"]]
        block = chain.blocks[record["block"]]
        mp = block.receipt_proof(record["tx_index"])
        proof = {
            "header": block.header.value(),
            "leaf": block.leaves()[record["tx_index"]],
            "merkle": (mp.leaf_index, tuple(mp.siblings), mp.tree_size),
            "event_index": record["event_index"],
        }
        if record["chain"] != dest_chain_id and self.relay.variant == "scalable":
            proof["header_proof"] = self.relay.header_proof(block.header.digest)
        return proof

    def _usable_on(self, record: dict, dest_chain_id: str) -> bool:
        if record["chain"] == dest_chain_id:
            return True
        chain = self.sim.chains[record["chain"]]
        header = chain.blocks[record["block"]].header
        return self._header_usable(header, dest_chain_id)

    def _header_usable(self, header, dest_chain_id: str) -> bool:
        proof = None
        if self.relay.variant == "scalable":
            proof = self.relay.header_proof(header.digest)
            if proof is None:
                return False
        registry = self.sim.chains[dest_chain_id].contracts["headers"]
        return registry.usable(None, header.value(), proof)

    def _request(self, record: dict, dest_chain_id: str) -> None:
        if record["chain"] != dest_chain_id:
            self.relay.request(record["chain"], record["block"], dest_chain_id)

    # ------------------------------------------------------------------
    # the drive loop

    def on_tick(self, sim, t: int) -> None:
        if self._entry is None or self.done:
            return
        self._scan_all()
        start = self._event(START_EVENT)
        if start is None:
            return
        self._request_transfers(start)
        self._submit_segments(t, start)
        self._submit_root(t)
        self._submit_signals(start)
        self._submit_clean()
        self._finish(t)

    def _request_transfers(self, start) -> None:
        segment_chains = {
            node.chain_id
            for path, node in self._paths.items()
            if path and node.chain_id != self.root_chain_id
        }
        for cid in sorted(segment_chains):
            self._request(start, cid)
        for path, node in self._paths.items():
            if not path:
                continue
            record = self._event(SEGMENT_EVENT, path)
            if record is None:
                continue
            parent_path = path[:-1]
            parent_chain = self._paths[parent_path].chain_id
            for dest in sorted({parent_chain, self.root_chain_id} - {node.chain_id}):
                self._request(record, dest)
        root_record = self._event(ROOT_EVENT)
        if root_record is not None:
            for cid in sorted(self._locked_chains()):
                self._request(root_record, cid)
        for path in self._locked_paths():
            signal_record = self._event(SIGNAL_EVENT, path)
            if signal_record is not None:
                self._request(signal_record, self.root_chain_id)

    def _locked_paths(self) -> list[tuple]:
        found = []
        for path, node in self._paths.items():
            if not path or node.chain_id == self.root_chain_id:
                continue
            record = self._event(SEGMENT_EVENT, path)
            if record is not None and record["payload"].get("locked"):
                found.append(path)
        return sorted(found)

    def _locked_chains(self) -> set:
        return {self._paths[path].chain_id for path in self._locked_paths()}

    def _timeout_evidence(self, dest_chain_id: str):
        """Freshest root-chain header at or past the timeout, once usable at
        the destination; None while the call is still inside its window."""
        root_chain = self.sim.chains[self.root_chain_id]
        if not root_chain.blocks or root_chain.blocks[-1].header.timestamp < self.timeout:
            return None, False
        header = next(
            b.header for b in root_chain.blocks if b.header.timestamp >= self.timeout
        )
        self.relay.request(self.root_chain_id, header.number, dest_chain_id)
        if not self._header_usable(header, dest_chain_id):
            return None, True  # timed out but evidence not yet usable
        evidence = {"header": header.value()}
        if self.relay.variant == "scalable":
            evidence["header_proof"] = self.relay.header_proof(header.digest)
        return evidence, True

    def _submit_segments(self, t: int, start) -> None:
        order = sorted(
            (path for path in self._paths if path),
            key=lambda p: (-len(p), p),
        )
        for path in order:
            mark = ("segment", path)
            if mark in self._submitted or path in self.drop_paths:
                continue
            if t < self.hold_paths.get(path, 0):
                continue
            node = self._paths[path]
            children = node.children
            child_records = [
                self._event(SEGMENT_EVENT, path + (i,)) for i in range(len(children))
            ]
            evidence = None
            if any(record is None for record in child_records):
                evidence, timed_out = self._timeout_evidence(node.chain_id)
                if evidence is None:
                    continue  # waiting for children, or for usable evidence
            elif self.timeout is not None:
                root_head = self.sim.chains[self.root_chain_id].blocks[-1].header
                if root_head.timestamp >= self.timeout:
                    evidence, _ = self._timeout_evidence(node.chain_id)
                    if evidence is None:
                        continue
            if not self._usable_on(start, node.chain_id):
                continue
            ready = all(
                record is None or self._usable_on(record, node.chain_id)
                for record in child_records
            )
            if not ready:
                continue
            proofs = tuple(
                None if record is None else self._proof(record, node.chain_id)
                for record in child_records
            )
            self.sim.chains[node.chain_id].submit(
                self.sender,
                "control",
                "segment",
                (self._proof(start, node.chain_id), path, proofs, evidence),
            )
            self._submitted.add(mark)

    def _submit_root(self, t: int) -> None:
        if self._event(ROOT_EVENT) is not None:
            return
        root_chain = self.sim.chains[self.root_chain_id]
        if ("root",) not in self._submitted:
            children = self.tree.children
            records = [
                self._event(SEGMENT_EVENT, (i,)) for i in range(len(children))
            ]
            if all(r is not None for r in records) and all(
                self._usable_on(r, self.root_chain_id) for r in records
            ):
                proofs = tuple(self._proof(r, self.root_chain_id) for r in records)
                root_chain.submit(
                    self.sender, "control", "root", (self.call_id, proofs)
                )
                self._submitted.add(("root",))
                return
        if ("cancel",) not in self._submitted and self._next_seal(root_chain, t) >= self.timeout:
            root_chain.submit(self.sender, "control", "root", (self.call_id, ()))
            self._submitted.add(("cancel",))

    def _submit_signals(self, start) -> None:
        root_record = self._event(ROOT_EVENT)
        if root_record is None:
            return
        if self.outcome is None:
            decision = root_record["payload"]["decision"]
            self.outcome = COMMITTED if decision == COMMIT else ROLLED_BACK
            self.result = root_record["payload"]["result"]
        for path in self._locked_paths():
            mark = ("signal", path)
            if mark in self._submitted:
                continue
            node = self._paths[path]
            segment_record = self._event(SEGMENT_EVENT, path)
            if not self._usable_on(root_record, node.chain_id):
                continue
            if not self._usable_on(start, node.chain_id):
                continue
            self.sim.chains[node.chain_id].submit(
                self.sender,
                "control",
                "signal",
                (
                    self._proof(start, node.chain_id),
                    self._proof(root_record, node.chain_id),
                    self._proof(segment_record, node.chain_id),
                    path,
                ),
            )
            self._submitted.add(mark)

    def _submit_clean(self) -> None:
        if self._event(ROOT_EVENT) is None or ("clean",) in self._submitted:
            return
        proofs = []
        for path in self._locked_paths():
            record = self._event(SIGNAL_EVENT, path)
            if record is None or not self._usable_on(record, self.root_chain_id):
                return
            proofs.append(self._proof(record, self.root_chain_id))
        self.sim.chains[self.root_chain_id].submit(
            self.sender, "control", "clean", (self.call_id, tuple(proofs))
        )
        self._submitted.add(("clean",))

    def _finish(self, t: int) -> None:
        record = self._event(CLEAN_EVENT)
        if record is None:
            return
        block = self.sim.chains[self.root_chain_id].blocks[record["block"]]
        self.completion_time = block.header.timestamp
        self.attempts.append(self.outcome)
        if self.outcome == ROLLED_BACK and self.retries_left > 0:
            self.retries_left -= 1
            self._begin_attempt(now=t)
        else:
            self.done = True
