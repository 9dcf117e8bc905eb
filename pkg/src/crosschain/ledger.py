"""Single-chain simulation: transactions, receipts, events, sealed blocks.

A Chain holds contract objects in a flat address map and seals queued
transactions into blocks with instant finality. Contract functions are
plain methods invoked as fn(ctx, *args); they signal failure by raising
Revert, which rolls the whole transaction back. Receipts of reverted
transactions keep their status and error text but carry no events, so a
block's receipt root commits only to effects that actually happened.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from . import merkle
from .encoding import EncodingError, encode_value, sha256

COMMITTED = "COMMITTED"
REVERTED = "REVERTED"

GENESIS_PARENT = bytes(32)


class Revert(Exception):
    """Transaction-level failure; state changes are rolled back."""


@dataclass(frozen=True)
class Tx:
    sender: str
    contract: str
    function: str
    args: tuple
    tx_id: str = ""


@dataclass(frozen=True)
class Event:
    contract: str
    name: str
    payload: dict


@dataclass(frozen=True)
class Receipt:
    status: str
    events: tuple[Event, ...] = ()
    result: object = None
    error: str | None = None


@dataclass(frozen=True)
class BlockHeader:
    chain_id: str
    number: int
    timestamp: int
    receipt_root: bytes
    parent: bytes

    def value(self) -> tuple:
        """Canonical tuple form, the preimage of the header digest."""
        return (self.chain_id, self.number, self.timestamp, self.receipt_root, self.parent)

    @property
    def digest(self) -> bytes:
        return sha256(encode_value(self.value()))


def header_from_value(value) -> BlockHeader:
    chain_id, number, timestamp, receipt_root, parent = value
    return BlockHeader(chain_id, number, timestamp, bytes(receipt_root), bytes(parent))


def receipt_leaf(tx: Tx, receipt: Receipt) -> bytes:
    """Byte form of one receipt, the leaf of the block's receipt tree."""
    events = tuple((e.contract, e.name, e.payload) for e in receipt.events)
    return encode_value(
        (
            tx.sender,
            tx.contract,
            tx.function,
            tuple(tx.args),
            receipt.status,
            receipt.error,
            receipt.result,
            events,
        )
    )


@dataclass
class Block:
    header: BlockHeader
    txs: tuple[Tx, ...]
    receipts: tuple[Receipt, ...]
    _leaves: list[bytes] = field(default_factory=list, repr=False)

    def leaves(self) -> list[bytes]:
        if not self._leaves and self.txs:
            self._leaves = [
                receipt_leaf(tx, r) for tx, r in zip(self.txs, self.receipts)
            ]
        return self._leaves

    def receipt_proof(self, index: int) -> merkle.MerkleProof:
        return merkle.prove(self.leaves(), index)


class CallContext:
    """Execution context handed to every contract function.

    Tracks the caller chain (sender changes as contracts call contracts),
    collects events, and exposes snapshot/restore over the contract map so
    a contract can contain a failing sub-call without losing its own
    bookkeeping: pass exclude=(own_address,) and apply compensation by hand.
    """

    def __init__(
        self,
        contracts: dict,
        chain_id: str,
        now: int,
        block_number: int,
        sender: str,
        readonly: bool = False,
        cross_handler=None,
        header_digest_fn=None,
        fault_hook=None,
    ):
        self.contracts = contracts
        self.chain_id = chain_id
        self.now = now
        self.block_number = block_number
        self.sender = sender
        self.contract: str | None = None
        self.readonly = readonly
        self.events: list[Event] = []
        self._cross_handler = cross_handler
        self._header_digest_fn = header_digest_fn
        self.fault_hook = fault_hook

    def call(self, address: str, function: str, *args):
        """Invoke another contract on the same chain; sender becomes the
        calling contract for the duration."""
        if address not in self.contracts:
            raise Revert(f"no contract at {address!r}")
        target = self.contracts[address]
        if function.startswith("_") or not callable(getattr(target, function, None)):
            raise Revert(f"{address!r} has no function {function!r}")
        prev_sender, prev_contract = self.sender, self.contract
        self.sender = self.contract if self.contract is not None else self.sender
        self.contract = address
        try:
            return getattr(target, function)(self, *args)
        finally:
            self.sender, self.contract = prev_sender, prev_contract

    def emit(self, name: str, payload: dict) -> None:
        if self.readonly:
            raise Revert("view call cannot emit events")
        try:
            encode_value(dict(payload))
        except EncodingError as exc:
            raise Revert(f"event payload not canonical: {exc}") from exc
        self.events.append(Event(self.contract or self.sender, name, dict(payload)))

    def cross_call(self, chain_id: str, contract: str, function: str, args):
        if self._cross_handler is None:
            raise Revert("cross-chain calls are not available here")
        return self._cross_handler(self, chain_id, contract, function, tuple(args))

    def own_header_digest(self, number: int) -> bytes | None:
        if self._header_digest_fn is None:
            return None
        return self._header_digest_fn(number)

    def snapshot(self, exclude: tuple[str, ...] = ()) -> dict:
        return {
            addr: copy.deepcopy(obj)
            for addr, obj in self.contracts.items()
            if addr not in exclude
        }

    def restore(self, snap: dict) -> None:
        for addr, obj in snap.items():
            self.contracts[addr] = obj


class Chain:
    """One simulated blockchain: contract map, FIFO queue, sealed blocks."""

    def __init__(self, chain_id: str, block_period: int = 1):
        self.chain_id = chain_id
        self.block_period = block_period
        self.contracts: dict[str, object] = {}
        self.queue: list[Tx] = []
        self.blocks: list[Block] = []
        self.fault_hook = None
        self._tx_seq = 0
        self._receipt_index: dict[str, tuple[int, int]] = {}

    def add_contract(self, address: str, contract) -> None:
        if address in self.contracts:
            raise ValueError(f"address {address!r} already taken")
        self.contracts[address] = contract

    def submit(self, sender: str, contract: str, function: str, args=()) -> str:
        tx_id = f"{self.chain_id}:{self._tx_seq}"
        self._tx_seq += 1
        self.queue.append(Tx(sender, contract, function, tuple(args), tx_id))
        return tx_id

    def header_digest(self, number: int) -> bytes | None:
        if 0 <= number < len(self.blocks):
            return self.blocks[number].header.digest
        return None

    @property
    def headers(self) -> list[BlockHeader]:
        return [b.header for b in self.blocks]

    def _make_context(self, sender: str, timestamp: int, readonly: bool = False) -> CallContext:
        return CallContext(
            self.contracts,
            self.chain_id,
            timestamp,
            len(self.blocks),
            sender,
            readonly=readonly,
            cross_handler=self._live_cross_call,
            header_digest_fn=self.header_digest,
            fault_hook=self.fault_hook,
        )

    def _live_cross_call(self, ctx, chain_id, contract, function, args):
        control = self.contracts.get("control")
        if control is None:
            raise Revert("no control contract on this chain")
        return control.cross_call(ctx, chain_id, contract, function, args)

    def _execute(self, tx: Tx, timestamp: int):
        ctx = self._make_context(tx.sender, timestamp)
        result = ctx.call(tx.contract, tx.function, *tx.args)
        try:
            encode_value(result)
        except EncodingError as exc:
            raise Revert(f"non-canonical return value: {exc}") from exc
        return result, tuple(ctx.events)

    def seal_block(self, timestamp: int) -> Block:
        txs = tuple(self.queue)
        self.queue.clear()
        number = len(self.blocks)
        receipts = []
        for i, tx in enumerate(txs):
            snap = copy.deepcopy(self.contracts)
            try:
                result, events = self._execute(tx, timestamp)
            except Revert as exc:
                self.contracts.clear()
                self.contracts.update(snap)
                receipts.append(Receipt(REVERTED, error=str(exc)))
            else:
                receipts.append(Receipt(COMMITTED, events=events, result=result))
            self._receipt_index[tx.tx_id] = (number, i)
        block = Block(
            BlockHeader(
                self.chain_id,
                number,
                timestamp,
                merkle.build_root(
                    [receipt_leaf(t, r) for t, r in zip(txs, receipts)]
                ),
                self.blocks[-1].header.digest if self.blocks else GENESIS_PARENT,
            ),
            txs,
            tuple(receipts),
        )
        self.blocks.append(block)
        return block

    def receipt_of(self, tx_id: str) -> tuple[int, int, Receipt] | None:
        """(block number, tx index, receipt) once the tx is sealed."""
        pos = self._receipt_index.get(tx_id)
        if pos is None:
            return None
        number, index = pos
        return number, index, self.blocks[number].receipts[index]

    def execute_view(self, contract: str, function: str, args=(), sender: str = "viewer"):
        """Run a function against current state without keeping any effects."""
        snap = copy.deepcopy(self.contracts)
        ctx = self._make_context(sender, self.blocks[-1].header.timestamp if self.blocks else 0, readonly=True)
        try:
            return ctx.call(contract, function, *args)
        finally:
            self.contracts.clear()
            self.contracts.update(snap)
