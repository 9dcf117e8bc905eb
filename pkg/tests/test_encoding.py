import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosschain.encoding import (
    EncodingError,
    decode_value,
    encode_args,
    encode_value,
)


def test_none():
    assert encode_value(None) == b"N"
    assert decode_value(b"N") is None


def test_bool_is_not_encoded_as_int():
    assert encode_value(True) == b"B\x01"
    assert encode_value(False) == b"B\x00"
    assert encode_value(True) != encode_value(1)
    assert decode_value(b"B\x01") is True


def test_int_fixed_width_big_endian():
    assert encode_value(0) == b"I" + bytes(8)
    assert encode_value(1) == b"I" + bytes(7) + b"\x01"
    assert encode_value(-1) == b"I" + b"\xff" * 8
    assert decode_value(encode_value(-(1 << 63))) == -(1 << 63)


def test_int_out_of_range():
    with pytest.raises(EncodingError):
        encode_value(1 << 63)
    with pytest.raises(EncodingError):
        encode_value(-(1 << 63) - 1)


def test_str_and_bytes_disambiguated():
    assert encode_value("ab") == b"S\x00\x00\x00\x02ab"
    assert encode_value(b"ab") == b"Y\x00\x00\x00\x02ab"
    assert encode_value("ab") != encode_value(b"ab")


def test_unicode_roundtrip():
    s = "café ☂"
    assert decode_value(encode_value(s)) == s


def test_list_and_tuple_encode_identically():
    assert encode_value([1, "x"]) == encode_value((1, "x"))
    assert decode_value(encode_value([1, "x"])) == (1, "x")


def test_dict_key_order_is_irrelevant():
    a = {"b": 2, "a": 1}
    b = {"a": 1, "b": 2}
    assert encode_value(a) == encode_value(b)
    assert decode_value(encode_value(a)) == {"a": 1, "b": 2}


def test_nested_structure_roundtrip():
    value = {"k": (1, None, [True, b"\x00"]), "empty": {}}
    assert decode_value(encode_value(value)) == {
        "k": (1, None, (True, b"\x00")),
        "empty": {},
    }


def test_unsupported_type():
    with pytest.raises(EncodingError):
        encode_value(1.5)
    with pytest.raises(EncodingError):
        encode_value({1, 2})


def test_trailing_garbage_rejected():
    with pytest.raises(EncodingError):
        decode_value(encode_value(1) + b"x")


def test_truncation_rejected():
    blob = encode_value(("abc", 7))
    for cut in range(len(blob)):
        with pytest.raises(EncodingError):
            decode_value(blob[:cut])


def test_unknown_tag_rejected():
    with pytest.raises(EncodingError):
        decode_value(b"Z")


def test_args_helper_wraps_in_tuple():
    assert encode_args([1, 2]) == encode_value((1, 2))
    assert encode_args(()) == encode_value(())


scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(1 << 63), max_value=(1 << 63) - 1),
    st.text(max_size=30),
    st.binary(max_size=30),
)
values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=6).map(tuple),
        st.dictionaries(st.text(max_size=8), inner, max_size=6),
    ),
    max_leaves=25,
)


@settings(max_examples=300)
@given(values)
def test_property_roundtrip(value):
    assert decode_value(encode_value(value)) == value


@settings(max_examples=300)
@given(values)
def test_property_encoding_is_stable(value):
    assert encode_value(value) == encode_value(decode_value(encode_value(value)))
