"""Binary Merkle trees over SHA-256.

Leaves and internal nodes hash under distinct domain prefixes (0x00 and
0x01) so a leaf can never be replayed as an internal node. A level with an
odd node count duplicates its last node, which keeps every proof in a tree
of n leaves exactly ceil(log2(n)) siblings long: verifiers can reject a
proof by length alone before doing any hashing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

EMPTY_ROOT = hashlib.sha256(b"").digest()


def leaf_hash(data: bytes) -> bytes:
    return hashlib.sha256(b"\x00" + data).digest()


def node_hash(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(b"\x01" + left + right).digest()


def proof_length(tree_size: int) -> int:
    """Number of siblings in any proof for a tree with this many leaves."""
    if tree_size <= 1:
        return 0
    return (tree_size - 1).bit_length()


@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    siblings: tuple[bytes, ...]
    tree_size: int


def build_root(leaves: list[bytes]) -> bytes:
    """Root digest over raw leaf payloads. Empty tree hashes to sha256(b'')."""
    if not leaves:
        return EMPTY_ROOT
    level = [leaf_hash(leaf) for leaf in leaves]
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def prove(leaves: list[bytes], index: int) -> MerkleProof:
    """Inclusion proof for leaves[index] against build_root(leaves)."""
    if not 0 <= index < len(leaves):
        raise IndexError(f"leaf index {index} outside tree of {len(leaves)}")
    siblings: list[bytes] = []
    level = [leaf_hash(leaf) for leaf in leaves]
    pos = index
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        siblings.append(level[pos ^ 1])
        level = [node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        pos //= 2
    return MerkleProof(index, tuple(siblings), len(leaves))


def verify(leaf: bytes, proof: MerkleProof, root: bytes) -> bool:
    """True when leaf sits at proof.leaf_index in a tree whose root matches.

    Length and index bounds are checked first, so malformed proofs fail
    without touching the digest.
    """
    if not 0 <= proof.leaf_index < proof.tree_size:
        return False
    if len(proof.siblings) != proof_length(proof.tree_size):
        return False
    digest = leaf_hash(leaf)
    pos = proof.leaf_index
    for sibling in proof.siblings:
        if pos % 2 == 0:
            digest = node_hash(digest, sibling)
        else:
            digest = node_hash(sibling, digest)
        pos //= 2
    return digest == root
