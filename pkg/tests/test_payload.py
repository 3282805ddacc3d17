import pytest
from hypothesis import given, strategies as st

from stegotext.errors import ConfigError
from stegotext.payload import (
    bits_to_bytes,
    bytes_to_bits,
    frame_payload,
    unframe_payload,
)


def test_frame_layout():
    framed = frame_payload(b"OZ")
    assert len(framed) == 16 + 16
    assert framed[:16] == (0,) * 11 + (1, 0, 0, 0, 0)  # declared length 16
    assert framed[16:] == bytes_to_bits(b"OZ")


def test_bytes_bits_round_trip():
    assert bytes_to_bits(b"\x4f") == (0, 1, 0, 0, 1, 1, 1, 1)
    assert bits_to_bytes((0, 1, 0, 0, 1, 1, 1, 1)) == b"\x4f"


@given(st.binary(min_size=1, max_size=64))
def test_frame_unframe_round_trip(data):
    report = unframe_payload(frame_payload(data))
    assert report.complete
    assert report.data == data
    assert report.declared_bits == 8 * len(data)


def test_unframe_partial_recovery():
    framed = frame_payload(b"OZ")
    report = unframe_payload(framed[:20])
    assert not report.complete
    assert report.data is None
    assert report.declared_bits == 16
    assert report.body_bits == framed[16:20]


def test_unframe_header_incomplete():
    report = unframe_payload((1, 0, 1))
    assert not report.complete
    assert report.declared_bits is None


def test_frame_rejects_empty_payload():
    with pytest.raises(ConfigError):
        frame_payload(b"")


def test_frame_rejects_oversized_payload():
    with pytest.raises(ConfigError):
        frame_payload(b"\x00" * 8192)
