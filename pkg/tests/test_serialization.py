"""Tests for the binary dynamics format."""

import struct

import numpy as np
import pytest

from odegrad.core.exceptions import ArgumentError
from odegrad.dynamics.serialization import MAGIC, decode_dynamics, encode_dynamics
from tests.fixtures.dynamics import ARCHITECTURES, make_dynamics


@pytest.mark.parametrize("name", ARCHITECTURES)
def test_decoded_dynamics_evaluate_identically(name: str) -> None:
    """Test that a decoded function has the same architecture and outputs."""
    f = make_dynamics(name, seed=2)
    g, blocks = decode_dynamics(encode_dynamics(f))
    assert type(g) is type(f)
    assert blocks == []
    z = np.array([0.3, -1.2])
    np.testing.assert_array_equal(g.eval(z, 0.5), f.eval(z, 0.5))


def test_extra_blocks_are_preserved() -> None:
    """Test that trailing parameter blocks come back in order."""
    f = make_dynamics("linear")
    _, blocks = decode_dynamics(encode_dynamics(f, [np.arange(3.0), np.ones((2, 2))]))
    assert len(blocks) == 2
    np.testing.assert_array_equal(blocks[0], [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(blocks[1], np.ones(4))


def test_header_is_little_endian() -> None:
    """Test the magic and the first header field on the wire."""
    buf = encode_dynamics(make_dynamics("mlp"))
    assert buf[:4] == MAGIC
    assert buf[4:8] == (1).to_bytes(4, "little")


def test_bad_magic_raises() -> None:
    """Test that a foreign buffer is rejected."""
    with pytest.raises(ArgumentError, match="magic"):
        decode_dynamics(b"NOPE" + bytes(16))


def test_truncated_buffer_raises() -> None:
    """Test that a cut-off checkpoint is rejected."""
    buf = encode_dynamics(make_dynamics("planar"))
    with pytest.raises(ArgumentError):
        decode_dynamics(buf[:-5])


def patch_int(buf: bytes, offset: int, value: int) -> bytes:
    return buf[:offset] + struct.pack("<i", value) + buf[offset + 4 :]


@pytest.mark.parametrize(("offset", "message"), [(4, "tag code 99"), (12, "activation code 99")])
def test_unknown_codes_raise(offset: int, message: str) -> None:
    """Test that unknown architecture or activation codes are rejected."""
    buf = patch_int(encode_dynamics(make_dynamics("mlp")), offset, 99)
    with pytest.raises(ArgumentError, match=message):
        decode_dynamics(buf)


def test_parameter_count_must_match_header() -> None:
    """Test that a hidden width disagreeing with the stored parameters is rejected."""
    buf = encode_dynamics(make_dynamics("mlp"))
    # dims start after magic, tag, flags, activation and n_dims: [D, hidden]
    with pytest.raises(ArgumentError, match="parameters do not fit"):
        decode_dynamics(patch_int(buf, 24, 7))


def test_negative_counts_raise() -> None:
    """Test that a negative parameter count is rejected."""
    buf = encode_dynamics(make_dynamics("linear"))
    # linear header: n_dims = 1, so n_params sits after the single dimension
    with pytest.raises(ArgumentError, match="negative"):
        decode_dynamics(patch_int(buf, 24, -1))
