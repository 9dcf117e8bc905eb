import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosschain import merkle
from crosschain.merkle import MerkleProof, build_root, proof_length, prove, verify


def test_empty_tree_root_is_hash_of_nothing():
    assert build_root([]) == hashlib.sha256(b"").digest()
    assert build_root([]).hex() == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )


def test_single_leaf_root_is_leaf_hash():
    assert build_root([b"a"]) == merkle.leaf_hash(b"a")
    assert build_root([b"a"]).hex() == (
        "022a6979e6dab7aa5ae4c3e5e45f7e977112a7e63593820dbec1ec738a24f93c"
    )


def test_two_leaf_root_frozen_value():
    # hand-computed: H(01 || H(00||a) || H(00||b))
    assert build_root([b"a", b"b"]).hex() == (
        "b137985ff484fb600db93107c77b0365c80d78f5b429ded0fd97361d077999eb"
    )


def test_three_leaf_root_duplicates_last_node():
    assert build_root([b"a", b"b", b"c"]).hex() == (
        "e9636069c740c9ff51625b01a0b040396d265a9b920cc6febdfa5ecc9f58ecce"
    )
    # last leaf pairs with itself, then joins the (a,b) node
    ab = merkle.node_hash(merkle.leaf_hash(b"a"), merkle.leaf_hash(b"b"))
    cc = merkle.node_hash(merkle.leaf_hash(b"c"), merkle.leaf_hash(b"c"))
    assert build_root([b"a", b"b", b"c"]) == merkle.node_hash(ab, cc)


def test_proof_for_duplicated_position():
    leaves = [b"a", b"b", b"c"]
    proof = prove(leaves, 2)
    assert proof.tree_size == 3
    assert len(proof.siblings) == 2
    assert proof.siblings[0] == merkle.leaf_hash(b"c")  # its own duplicate
    assert verify(b"c", proof, build_root(leaves))


@pytest.mark.parametrize(
    "size,expected",
    [(0, 0), (1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (64, 6)],
)
def test_proof_length_is_ceil_log2(size, expected):
    assert proof_length(size) == expected


@pytest.mark.parametrize("size", range(1, 65))
def test_roundtrip_all_positions(size):
    leaves = [f"leaf-{i}".encode() for i in range(size)]
    root = build_root(leaves)
    for i in range(size):
        proof = prove(leaves, i)
        assert len(proof.siblings) == proof_length(size)
        assert verify(leaves[i], proof, root)


def test_prove_out_of_range():
    with pytest.raises(IndexError):
        prove([b"a", b"b"], 2)


def test_verify_rejects_wrong_leaf():
    leaves = [b"a", b"b", b"c", b"d"]
    root = build_root(leaves)
    proof = prove(leaves, 1)
    assert not verify(b"x", proof, root)


def test_verify_rejects_wrong_index():
    leaves = [b"a", b"b", b"c", b"d"]
    root = build_root(leaves)
    proof = prove(leaves, 1)
    bad = MerkleProof(2, proof.siblings, proof.tree_size)
    assert not verify(b"b", bad, root)


def test_verify_rejects_wrong_proof_length():
    leaves = [b"a", b"b", b"c", b"d"]
    root = build_root(leaves)
    proof = prove(leaves, 0)
    short = MerkleProof(0, proof.siblings[:1], 4)
    padded = MerkleProof(0, proof.siblings + (proof.siblings[0],), 4)
    assert not verify(b"a", short, root)
    assert not verify(b"a", padded, root)


def test_verify_rejects_index_outside_tree():
    leaves = [b"a", b"b"]
    proof = prove(leaves, 0)
    assert not verify(b"a", MerkleProof(5, proof.siblings, 2), build_root(leaves))
    assert not verify(b"a", MerkleProof(-1, proof.siblings, 2), build_root(leaves))


def test_leaf_cannot_pose_as_internal_node():
    # a passes as a leaf but its preimage with the internal prefix differs
    left, right = merkle.leaf_hash(b"a"), merkle.leaf_hash(b"b")
    root = merkle.node_hash(left, right)
    fake_leaf = b"\x01" + left + right  # would collide without domain tags
    assert merkle.leaf_hash(fake_leaf) != root


@settings(max_examples=200)
@given(
    st.lists(st.binary(min_size=0, max_size=40), min_size=1, max_size=40),
    st.data(),
)
def test_property_roundtrip(leaves, data):
    root = build_root(leaves)
    index = data.draw(st.integers(min_value=0, max_value=len(leaves) - 1))
    proof = prove(leaves, index)
    assert verify(leaves[index], proof, root)


@settings(max_examples=200)
@given(
    st.lists(st.binary(min_size=1, max_size=20), min_size=2, max_size=20, unique=True),
    st.data(),
)
def test_property_proof_does_not_transfer(leaves, data):
    root = build_root(leaves)
    index = data.draw(st.integers(min_value=0, max_value=len(leaves) - 1))
    other = data.draw(
        st.integers(min_value=0, max_value=len(leaves) - 1).filter(lambda i: i != index)
    )
    proof = prove(leaves, index)
    assert not verify(leaves[other], proof, root)


@settings(max_examples=200)
@given(
    st.lists(st.binary(min_size=0, max_size=20), min_size=1, max_size=20),
    st.data(),
)
def test_property_tampered_sibling_fails(leaves, data):
    root = build_root(leaves)
    index = data.draw(st.integers(min_value=0, max_value=len(leaves) - 1))
    proof = prove(leaves, index)
    if not proof.siblings:
        return
    which = data.draw(st.integers(min_value=0, max_value=len(proof.siblings) - 1))
    flipped = bytearray(proof.siblings[which])
    flipped[0] ^= 0x01
    siblings = list(proof.siblings)
    siblings[which] = bytes(flipped)
    assert not verify(leaves[index], MerkleProof(index, tuple(siblings), proof.tree_size), root)
