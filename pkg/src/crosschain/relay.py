"""Header transport between chains.

Chains only trust what lands in their own blocks, so cross-chain proofs
hinge on block headers being registered at the destination. A committee of
relayers moves them in one of three modes:

  direct     every relayer submits the header to the destination on its
             own; the registry counts distinct submissions and accepts the
             header once a threshold is reached. No relayer-to-relayer
             traffic, N transactions per destination.
  broadcast  relayers swap signatures among themselves (N*(N-1) messages,
             once per header) and a single multi-signed transaction lands
             at each destination.
  on_demand  nothing moves until someone asks; a requester collects the
             missing signatures (2*(N-1) messages per requester) and
             submits one multi-signed transaction.

The scalable variant replaces per-destination registration entirely: every
header is recorded on a dedicated header chain one block later, and the
Merkle root over each of that chain's blocks is pushed to every business
chain the block after that. Headers are then proven on demand against the
stored round roots, costing each chain one transaction per round instead
of one per header, at the price of one extra block of latency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import merkle
from .encoding import encode_value, sha256
from .ledger import Chain, Revert, header_from_value

STANDARD = "standard"
SCALABLE = "scalable"


def relayer_secret(name: str) -> bytes:
    return sha256(b"relayer-secret:" + name.encode())


def sign(secret: bytes, digest: bytes) -> bytes:
    return sha256(secret + digest)


class HeaderRegistry:
    """On-chain contract that remembers which foreign headers are trusted."""

    def __init__(self, keys: dict[str, bytes], threshold: int, mode: str = STANDARD):
        self.keys = dict(keys)
        self.threshold = threshold
        self.mode = mode
        self.known: dict[bytes, tuple] = {}
        self.pending: dict[bytes, set] = {}
        self.latest_ts: dict[str, int] = {}
        self.round_roots: list[bytes] = []

    def _check_sig(self, relayer: str, digest: bytes, sig) -> None:
        secret = self.keys.get(relayer)
        if secret is None or sign(secret, digest) != sig:
            raise Revert(f"bad signature from {relayer!r}")

    def _accept(self, header_value) -> None:
        header = header_from_value(header_value)
        self.known[header.digest] = tuple(header_value)
        previous = self.latest_ts.get(header.chain_id, -1)
        self.latest_ts[header.chain_id] = max(previous, header.timestamp)

    def submit_header(self, ctx, header_value, relayer: str, sig):
        digest = header_from_value(header_value).digest
        self._check_sig(relayer, digest, sig)
        voters = self.pending.setdefault(digest, set())
        voters.add(relayer)
        if len(voters) >= self.threshold:
            self._accept(header_value)
        return None

    def submit_header_multi(self, ctx, header_value, sigs: dict):
        digest = header_from_value(header_value).digest
        valid = 0
        for relayer, sig in sigs.items():
            self._check_sig(relayer, digest, sig)
            valid += 1
        if valid < self.threshold:
            raise Revert(f"{valid} signatures, threshold is {self.threshold}")
        self._accept(header_value)
        return None

    def submit_round_root(self, ctx, root: bytes, relayer: str, sig):
        self._check_sig(relayer, root, sig)
        self.round_roots.append(bytes(root))
        return None

    def usable(self, ctx, header_value, header_proof=None) -> bool:
        """Can this header back a proof on this chain right now?"""
        digest = header_from_value(header_value).digest
        if self.mode == STANDARD:
            return digest in self.known
        if header_proof is None:
            return False
        round_index, leaf_index, siblings, tree_size = header_proof
        if not 0 <= round_index < len(self.round_roots):
            return False
        proof = merkle.MerkleProof(leaf_index, tuple(bytes(s) for s in siblings), tree_size)
        return merkle.verify(digest, proof, self.round_roots[round_index])

    def latest_timestamp(self, ctx, chain_id: str):
        return self.latest_ts.get(chain_id)


class HeaderJournal:
    """Contract on the dedicated header chain; order of record transactions
    inside a block defines that round's Merkle tree."""

    def __init__(self):
        self.count = 0

    def record(self, ctx, header_value):
        header_from_value(header_value)  # shape check
        self.count += 1
        return None


@dataclass
class RelayStats:
    inter_relay_messages: int = 0
    header_txs: int = 0
    root_txs: int = 0


@dataclass
class Relay:
    relayer_count: int = 1
    mode: str = "direct"
    variant: str = STANDARD
    threshold: int | None = None
    bhb_chain_id: str = "bhb"
    on_demand_requesters: int = 1
    stats: RelayStats = field(default_factory=RelayStats)

    def __post_init__(self):
        if self.threshold is None:
            self.threshold = self.relayer_count
        self.relayers = [f"relayer-{i}" for i in range(self.relayer_count)]
        self.secrets = {r: relayer_secret(r) for r in self.relayers}
        self._sim = None
        self._delivered: set[tuple[bytes, str]] = set()
        self._gathered: set[bytes] = set()
        self._od_gathered: set[tuple[bytes, str]] = set()
        # round bookkeeping: digest -> (round index, position), round -> leaves
        self._round_of: dict[bytes, tuple[int, int]] = {}
        self._round_leaves: dict[int, list[bytes]] = {}

    def registry_keys(self) -> dict[str, bytes]:
        return dict(self.secrets)

    def bind(self, sim) -> None:
        self._sim = sim

    # standard variant ------------------------------------------------------

    def request(self, source_chain_id: str, block_number: int, dest_chain_id: str) -> None:
        """Ask the committee to make one header usable on one chain."""
        if self.variant == SCALABLE:
            return  # every header is covered by the round pipeline
        header = self._sim.chains[source_chain_id].blocks[block_number].header
        key = (header.digest, dest_chain_id)
        if key in self._delivered:
            return
        self._delivered.add(key)
        dest = self._sim.chains[dest_chain_id]
        if self.mode == "direct":
            self._deliver_direct(dest, header)
        elif self.mode == "broadcast":
            self._deliver_broadcast(dest, header)
        elif self.mode == "on_demand":
            self._deliver_on_demand(dest, header)
        else:
            raise ValueError(f"unknown relay mode {self.mode!r}")

    def _deliver_direct(self, dest: Chain, header) -> None:
        for relayer in self.relayers:
            sig = sign(self.secrets[relayer], header.digest)
            dest.submit(relayer, "headers", "submit_header", (header.value(), relayer, sig))
            self.stats.header_txs += 1

    def _collect_sigs(self, header) -> dict[str, bytes]:
        return {r: sign(self.secrets[r], header.digest) for r in self.relayers}

    def _deliver_broadcast(self, dest: Chain, header) -> None:
        if header.digest not in self._gathered:
            self._gathered.add(header.digest)
            n = self.relayer_count
            self.stats.inter_relay_messages += n * (n - 1)
        leader = self.relayers[0]
        dest.submit(leader, "headers", "submit_header_multi", (header.value(), self._collect_sigs(header)))
        self.stats.header_txs += 1

    def _deliver_on_demand(self, dest: Chain, header) -> None:
        n = self.relayer_count
        for requester in self.relayers[: self.on_demand_requesters]:
            key = (header.digest, requester)
            if key not in self._od_gathered:
                self._od_gathered.add(key)
                self.stats.inter_relay_messages += 2 * (n - 1)
        dest.submit(self.relayers[0], "headers", "submit_header_multi", (header.value(), self._collect_sigs(header)))
        self.stats.header_txs += 1

    # scalable variant -------------------------------------------------------

    def on_blocks_sealed(self, sim, t: int, sealed) -> None:
        if self.variant != SCALABLE:
            return
        bhb = sim.chains[self.bhb_chain_id]
        leader = self.relayers[0]
        for block in sealed:
            if block.header.chain_id != self.bhb_chain_id:
                bhb.submit(leader, "records", "record", (block.header.value(),))
        for block in sealed:
            if block.header.chain_id == self.bhb_chain_id:
                self._publish_round(sim, block)

    def _publish_round(self, sim, bhb_block) -> None:
        recorded = []
        for tx, receipt in zip(bhb_block.txs, bhb_block.receipts):
            if receipt.status == "COMMITTED" and tx.function == "record":
                header = header_from_value(tx.args[0])
                recorded.append(((header.chain_id, header.number), header.digest))
        recorded.sort(key=lambda item: item[0])
        leaves = [digest for _, digest in recorded]
        round_index = bhb_block.header.number
        self._round_leaves[round_index] = leaves
        for position, digest in enumerate(leaves):
            self._round_of[digest] = (round_index, position)
        root = merkle.build_root(leaves)
        leader = self.relayers[0]
        sig = sign(self.secrets[leader], root)
        for chain in sim.chains.values():
            if chain.chain_id == self.bhb_chain_id:
                continue
            chain.submit(leader, "headers", "submit_round_root", (root, leader, sig))
            self.stats.root_txs += 1

    def header_proof(self, header_digest: bytes):
        """Proof material for the scalable registry, or None when the header
        has not been folded into a round yet (or in standard mode)."""
        place = self._round_of.get(header_digest)
        if place is None:
            return None
        round_index, position = place
        leaves = self._round_leaves[round_index]
        proof = merkle.prove(leaves, position)
        return (round_index, proof.leaf_index, tuple(proof.siblings), proof.tree_size)
