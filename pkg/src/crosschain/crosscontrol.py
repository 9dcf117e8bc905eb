"""Control contract: one instance per chain drives atomic cross-chain calls.

A call is pinned up front as a tree of nodes (chain, contract, function,
arguments, expected result). The flow across chains:

  start    root chain: record the tree, a timeout, and the caller, and
           emit a Start event that every other participant proves against.
  segment  each non-root node, deepest first: prove the Start event and
           all child Segment events, then execute the node's function with
           the children's results pinned. Failures (business revert,
           diverging call, timeout reached, failed child) emit an error
           Segment event instead of touching state.
  root     root chain: prove the top-level Segment events and run the root
           node; any error, revert, or timeout flips the decision from
           COMMIT to IGNORE. Local stores are finalised immediately.
  signal   each chain that locked stores: prove Start + Root + the local
           Segment event and finalise the listed stores per the decision.
  clean    root chain: once every locking segment has a proven Signal,
           tombstone the call's records.

Execution runs inside a snapshot that excludes this contract itself, so a
failing business call rolls back cleanly while replay marks, decisions and
events survive; the lock registry is repaired by hand on that path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import merkle
from .encoding import decode_value, encode_value
from .ledger import Revert, header_from_value

OK = "ok"
ERROR = "error"
COMMIT = "COMMIT"
IGNORE = "IGNORE"

START_EVENT = "Start"
SEGMENT_EVENT = "Segment"
ROOT_EVENT = "Root"
SIGNAL_EVENT = "Signal"
CLEAN_EVENT = "Clean"


class BusinessRevert(Revert):
    """Live execution diverged from the pinned call tree."""


@dataclass
class Frame:
    call_id: bytes
    path: tuple
    node: dict
    child_results: list
    counter: int = 0
    locked: list = field(default_factory=list)


def node_value(chain: str, contract: str, function: str, args, expect=None, children=()) -> dict:
    """Canonical tree node; `expect` is the result execution is pinned to."""
    return {
        "chain": chain,
        "contract": contract,
        "function": function,
        "args": tuple(args),
        "expect": expect,
        "children": tuple(children),
    }


def _check_node(node) -> None:
    if not isinstance(node, dict):
        raise Revert("tree node must be a mapping")
    for key in ("chain", "contract", "function"):
        if not isinstance(node.get(key), str):
            raise Revert(f"tree node needs a string {key!r}")
    if "args" not in node or "expect" not in node:
        raise Revert("tree node needs args and expect")
    for child in node.get("children", ()):
        _check_node(child)


class ControlContract:
    def __init__(self, registry: str = "headers"):
        self.registry = registry
        self.started: dict[bytes, dict] = {}
        self.decisions: dict[bytes, str] = {}
        self.pending_signals: dict[bytes, set] = {}
        self.completed: set[bytes] = set()
        self.processed: set[tuple] = set()
        self.signals_done: set[tuple] = set()
        self.locks: dict[bytes, list] = {}
        self.frame: Frame | None = None

    # queried directly by lockable stores on the same chain
    def active_call(self) -> bytes | None:
        return self.frame.call_id if self.frame is not None else None

    def call_state(self, call_id: bytes) -> str | None:
        if call_id in self.completed:
            return "COMPLETE"
        if call_id in self.decisions:
            return self.decisions[call_id]
        if call_id in self.started:
            return "STARTED"
        return None

    # ------------------------------------------------------------------
    # event proofs

    def _verify_event(self, ctx, proof, name: str):
        """Check one event proof and return (header, payload).

        The header must be this chain's own (checked against local history)
        or registered with the header registry; the receipt leaf must sit
        under the header's receipt root; the event must have been emitted
        by the control contract at the expected position.
        """
        if not isinstance(proof, dict):
            raise Revert("malformed event proof")
        try:
            header = header_from_value(proof["header"])
            leaf = bytes(proof["leaf"])
            leaf_index, siblings, tree_size = proof["merkle"]
            event_index = proof["event_index"]
        except (KeyError, ValueError, TypeError) as exc:
            raise Revert(f"malformed event proof: {exc}") from exc
        if header.chain_id == ctx.chain_id:
            if ctx.own_header_digest(header.number) != header.digest:
                raise Revert("header does not match local history")
        else:
            usable = ctx.call(
                self.registry, "usable", header.value(), proof.get("header_proof")
            )
            if not usable:
                raise Revert("header is not usable on this chain")
        mproof = merkle.MerkleProof(leaf_index, tuple(bytes(s) for s in siblings), tree_size)
        if not merkle.verify(leaf, mproof, header.receipt_root):
            raise Revert("receipt proof does not match the header")
        decoded = decode_value(leaf)
        status, events = decoded[4], decoded[7]
        if status != "COMMITTED":
            raise Revert("receipt was reverted")
        if not 0 <= event_index < len(events):
            raise Revert("event index out of range")
        emitter, event_name, payload = events[event_index]
        if emitter != (ctx.contract or "control"):
            raise Revert("event was not emitted by the control contract")
        if event_name != name:
            raise Revert(f"expected a {name} event, found {event_name}")
        return header, payload

    def _verify_start(self, ctx, proof):
        header, payload = self._verify_event(ctx, proof, START_EVENT)
        if header.chain_id != payload["root"]:
            raise Revert("start event does not sit on its root chain")
        return payload

    def _latest_root_ts(self, ctx, root_chain: str, evidence):
        """Newest root-chain timestamp this chain can currently attest to."""
        if ctx.chain_id == root_chain:
            return ctx.now
        candidates = []
        known = ctx.call(self.registry, "latest_timestamp", root_chain)
        if known is not None:
            candidates.append(known)
        if evidence is not None:
            header = header_from_value(evidence["header"])
            usable = header.chain_id == root_chain and ctx.call(
                self.registry, "usable", header.value(), evidence.get("header_proof")
            )
            if usable:
                candidates.append(header.timestamp)
        return max(candidates) if candidates else None

    @staticmethod
    def _node_at(tree: dict, path: tuple) -> dict:
        node = tree
        for index in path:
            children = node.get("children", ())
            if not isinstance(index, int) or not 0 <= index < len(children):
                raise Revert("path does not name a tree node")
            node = children[index]
        return node

    # ------------------------------------------------------------------
    # protocol operations

    def start(self, ctx, call_id: bytes, timeout: int, tree):
        if call_id in self.started or call_id in self.completed or call_id in self.decisions:
            raise Revert("call id already used")
        tree = decode_value(encode_value(tree))  # pin the canonical form
        _check_node(tree)
        if tree["chain"] != ctx.chain_id:
            raise Revert("root node must live on this chain")
        self.started[call_id] = {
            "sender": ctx.sender,
            "timeout": timeout,
            "tree": tree,
        }
        ctx.emit(
            START_EVENT,
            {
                "call": call_id,
                "timeout": timeout,
                "sender": ctx.sender,
                "root": ctx.chain_id,
                "tree": tree,
            },
        )
        return None

    def segment(self, ctx, start_proof, path, child_proofs=(), evidence=None):
        path = tuple(path)
        if not path:
            raise Revert("the root node is executed by root, not segment")
        start_payload = self._verify_start(ctx, start_proof)
        call_id = start_payload["call"]
        root_chain = start_payload["root"]
        if ctx.sender != start_payload["sender"]:
            raise Revert("only the starting account drives segments")
        if (call_id, path) in self.processed:
            raise Revert("segment already processed")
        node = self._node_at(start_payload["tree"], path)
        if node["chain"] != ctx.chain_id:
            raise Revert("segment addressed to another chain")

        root_ts = self._latest_root_ts(ctx, root_chain, evidence)
        timed_out = root_ts is not None and root_ts >= start_payload["timeout"]

        children = node["children"]
        verified: dict[int, dict] = {}
        for i in range(len(children)):
            proof = child_proofs[i] if i < len(child_proofs) else None
            if proof is None:
                if timed_out:
                    continue  # error event below; locks best known
                raise Revert(f"missing proof for child segment {i}")
            header, payload = self._verify_event(ctx, proof, SEGMENT_EVENT)
            if payload["call"] != call_id or tuple(payload["path"]) != path + (i,):
                raise Revert("child event does not match the tree")
            if header.chain_id != children[i]["chain"]:
                raise Revert("child event sits on the wrong chain")
            verified[i] = payload

        subtree = []
        for i in sorted(verified):
            subtree.extend(tuple(entry) for entry in verified[i]["subtree"])

        def finish(status, result=None, error=None, locked=()):
            self.processed.add((call_id, path))
            if locked:
                subtree.append((ctx.chain_id, path))
            ctx.emit(
                SEGMENT_EVENT,
                {
                    "call": call_id,
                    "path": path,
                    "status": status,
                    "result": result,
                    "error": error,
                    "locked": tuple(locked),
                    "subtree": tuple(subtree),
                },
            )

        if timed_out:
            finish(ERROR, error="timed out")
            return None
        if any(payload["status"] == ERROR for payload in verified.values()):
            finish(ERROR, error="child segment failed")
            return None

        snap = ctx.snapshot(exclude=(ctx.contract,))
        prior_locks = list(self.locks.get(call_id, ()))
        self.frame = Frame(
            call_id, path, node, [verified[i]["result"] for i in range(len(children))]
        )
        try:
            if ctx.fault_hook is not None:
                if ctx.fault_hook("segment_exec", ctx.chain_id, call_id, path) == "revert":
                    raise Revert("injected segment fault")
            result = ctx.call(node["contract"], node["function"], *node["args"])
        except Revert as exc:
            ctx.restore(snap)
            self.locks[call_id] = prior_locks
            self.frame = None
            finish(ERROR, error=str(exc))
            return None
        locked = tuple(self.frame.locked)
        self.frame = None
        finish(OK, result=result, locked=locked)
        return result

    def root(self, ctx, call_id: bytes, segment_proofs=()):
        record = self.started.get(call_id)
        if record is None:
            raise Revert("unknown call on this chain")
        if call_id in self.decisions:
            raise Revert("call already decided")
        tree = record["tree"]
        children = tree["children"]
        result = None
        error = None
        subtree: list = []

        if ctx.now >= record["timeout"]:
            decision = IGNORE
            error = "timed out"
            for i in range(len(children)):
                proof = segment_proofs[i] if i < len(segment_proofs) else None
                if proof is None:
                    continue  # cancellation needs no proofs; locks best known
                _, payload = self._verify_event(ctx, proof, SEGMENT_EVENT)
                if payload["call"] == call_id and tuple(payload["path"]) == (i,):
                    subtree.extend(tuple(entry) for entry in payload["subtree"])
        else:
            if ctx.sender != record["sender"]:
                raise Revert("only the starting account concludes before timeout")
            results = []
            failed = False
            for i, child in enumerate(children):
                proof = segment_proofs[i] if i < len(segment_proofs) else None
                if proof is None:
                    raise Revert(f"missing proof for top-level segment {i}")
                header, payload = self._verify_event(ctx, proof, SEGMENT_EVENT)
                if payload["call"] != call_id or tuple(payload["path"]) != (i,):
                    raise Revert("segment event does not match the tree")
                if header.chain_id != child["chain"]:
                    raise Revert("segment event sits on the wrong chain")
                subtree.extend(tuple(entry) for entry in payload["subtree"])
                results.append(payload["result"])
                failed = failed or payload["status"] == ERROR
            if failed:
                decision = IGNORE
                error = "segment failed"
            else:
                snap = ctx.snapshot(exclude=(ctx.contract,))
                prior_locks = list(self.locks.get(call_id, ()))
                self.frame = Frame(call_id, (), tree, results)
                try:
                    if ctx.fault_hook is not None:
                        if ctx.fault_hook("root_exec", ctx.chain_id, call_id, ()) == "revert":
                            raise Revert("injected root fault")
                    result = ctx.call(tree["contract"], tree["function"], *tree["args"])
                except Revert as exc:
                    ctx.restore(snap)
                    self.locks[call_id] = prior_locks
                    decision = IGNORE
                    error = str(exc)
                else:
                    decision = COMMIT
                finally:
                    self.frame = None

        self.decisions[call_id] = decision
        self.pending_signals[call_id] = {
            (chain, tuple(path)) for chain, path in subtree if chain != ctx.chain_id
        }
        for store in self.locks.pop(call_id, ()):
            if getattr(ctx.contracts.get(store), "locked_by", None) == call_id:
                ctx.call(store, "finalise", decision)
        ctx.emit(
            ROOT_EVENT,
            {"call": call_id, "decision": decision, "result": result, "error": error},
        )
        return decision

    def signal(self, ctx, start_proof, root_proof, segment_proof, path):
        path = tuple(path)
        start_payload = self._verify_start(ctx, start_proof)
        call_id = start_payload["call"]
        if (call_id, path) in self.signals_done:
            raise Revert("signal already processed")
        root_header, root_payload = self._verify_event(ctx, root_proof, ROOT_EVENT)
        if root_header.chain_id != start_payload["root"] or root_payload["call"] != call_id:
            raise Revert("root event does not match the call")
        seg_header, seg_payload = self._verify_event(ctx, segment_proof, SEGMENT_EVENT)
        if seg_header.chain_id != ctx.chain_id:
            raise Revert("signal needs the local segment event")
        if seg_payload["call"] != call_id or tuple(seg_payload["path"]) != path:
            raise Revert("segment event does not match the signal")
        decision = root_payload["decision"]
        finalised = []
        for store in seg_payload["locked"]:
            if getattr(ctx.contracts.get(store), "locked_by", None) == call_id:
                ctx.call(store, "finalise", decision)
                finalised.append(store)
            if call_id in self.locks and store in self.locks[call_id]:
                self.locks[call_id].remove(store)
        if call_id in self.locks and not self.locks[call_id]:
            del self.locks[call_id]
        self.signals_done.add((call_id, path))
        ctx.emit(
            SIGNAL_EVENT,
            {
                "call": call_id,
                "path": path,
                "decision": decision,
                "finalised": tuple(finalised),
            },
        )
        return None

    def clean(self, ctx, call_id: bytes, signal_proofs=()):
        decision = self.decisions.get(call_id)
        if decision is None:
            raise Revert("call has no decision on this chain")
        if call_id in self.completed:
            raise Revert("call already cleaned")
        covered = set()
        for proof in signal_proofs:
            header, payload = self._verify_event(ctx, proof, SIGNAL_EVENT)
            if payload["call"] != call_id:
                raise Revert("signal event for another call")
            if payload["decision"] != decision:
                raise Revert("signal decision does not match")
            covered.add((header.chain_id, tuple(payload["path"])))
        missing = self.pending_signals.get(call_id, set()) - covered
        if missing:
            raise Revert(f"{len(missing)} locking segments have no verified signal")
        self.completed.add(call_id)
        self.started.pop(call_id, None)
        self.pending_signals.pop(call_id, None)
        ctx.emit(CLEAN_EVENT, {"call": call_id})
        return None

    # ------------------------------------------------------------------
    # live call checking

    def cross_call(self, ctx, chain_id: str, contract: str, function: str, args):
        frame = self.frame
        if frame is None:
            raise Revert("no active cross-chain call on this chain")
        position = frame.counter
        frame.counter += 1
        children = frame.node["children"]
        if position >= len(children):
            raise BusinessRevert("cross-chain call not present in the pinned tree")
        child = children[position]
        same_target = (
            child["chain"] == chain_id
            and child["contract"] == contract
            and child["function"] == function
            and encode_value(tuple(args)) == encode_value(child["args"])
        )
        if not same_target:
            raise BusinessRevert("cross-chain call diverged from the pinned tree")
        result = frame.child_results[position]
        if encode_value(result) != encode_value(child["expect"]):
            raise BusinessRevert("cross-chain result diverged from the pinned tree")
        return result

    def register_lock(self, ctx):
        if self.frame is None:
            raise Revert("no active cross-chain call to lock for")
        store = ctx.sender
        self.frame.locked.append(store)
        self.locks.setdefault(self.frame.call_id, []).append(store)
        return None
