import random
from itertools import product

import pytest
from hypothesis import given, strategies as st

from stegotext.ecc import (
    CodeSymbol,
    EccState,
    decode,
    format_trace,
    last_agree,
    next_symbol,
    potential,
    required_length,
    simulate_channel,
    suffix_len,
)
from stegotext.errors import ConfigError, TransmissionComplete

Z, O, B = CodeSymbol.ZERO, CodeSymbol.ONE, CodeSymbol.BACK
SYMS = (Z, O, B)


def naive_decode(received):
    """Literal recursive definition; reference oracle for decode()."""
    if not received:
        return ()
    head, tail = list(received)[:-1], received[-1]
    prev = naive_decode(head)
    if tail == B:
        return prev[:-1] if prev else prev
    return prev + (int(tail),)


def test_decode_examples():
    assert decode([O, Z, B, O]) == (1, 1)
    assert decode([B, B, Z]) == (0,)
    assert decode([]) == ()


def test_decode_matches_recursive_reference_exhaustively():
    for n in range(0, 9):
        for seq in product(SYMS, repeat=n):
            assert decode(seq) == naive_decode(seq)


def test_last_agree_examples():
    assert last_agree((1, 0, 1), [O, Z]) == 2
    assert last_agree((1, 0, 1), [O, O]) == 1


@given(
    st.lists(st.integers(0, 1), max_size=10).map(tuple),
    st.lists(st.sampled_from(SYMS), max_size=10),
)
def test_last_agree_matches_prefix_scan(message, received):
    decoded = decode(received)
    expected = 0
    while (
        expected < min(len(message), len(decoded))
        and message[expected] == decoded[expected]
    ):
        expected += 1
    assert last_agree(message, received) == expected
    assert suffix_len(message, received) == len(decoded) - expected


def test_next_symbol_examples():
    msg = (1, 0, 1)
    assert next_symbol(msg, []) == O
    assert next_symbol(msg, [O, O]) == B
    assert next_symbol(msg, [O, O, B]) == Z
    with pytest.raises(TransmissionComplete):
        next_symbol(msg, [O, Z, O])


def test_required_length():
    assert required_length(10, 0.25) == 20
    assert required_length(7, 0) == 7
    assert required_length(64, 0.4) == 320
    assert required_length(64, 0.25) == 128
    with pytest.raises(ConfigError):
        required_length(8, 0.5)
    with pytest.raises(ConfigError):
        required_length(8, -0.1)


@given(
    st.lists(st.integers(0, 1), max_size=12).map(tuple),
    st.lists(st.sampled_from(SYMS), max_size=16),
)
def test_incremental_state_matches_pure_functions(message, received):
    state = EccState(message)
    for s in received:
        state.push(s)
    assert tuple(state.decoded) == decode(received)
    assert state.last == last_agree(message, received)
    assert state.suff == suffix_len(message, received)
    assert state.last + state.suff == len(state.decoded)
    assert state.potential == potential(message, received)
    try:
        expected_next = next_symbol(message, received)
    except TransmissionComplete:
        expected_next = None
    assert state.next_symbol() == expected_next


@given(
    st.lists(st.integers(0, 1), min_size=1, max_size=10).map(tuple),
    st.lists(st.sampled_from(SYMS), max_size=12),
    st.sampled_from(SYMS),
)
def test_potential_step_law(message, received, symbol):
    phi = potential(message, received)
    phi2 = potential(message, list(received) + [symbol])
    try:
        nxt = next_symbol(message, received)
    except TransmissionComplete:
        nxt = None
    if nxt is not None and symbol == nxt:
        assert phi2 == phi + 1
    else:
        assert phi - 1 <= phi2 <= phi


def test_clone_is_independent():
    state = EccState((1, 0))
    state.push(O)
    twin = state.clone()
    twin.push(B)
    assert tuple(state.decoded) == (1,)
    assert tuple(twin.decoded) == ()


def _channel_sent_stream(message, deliveries):
    """Drive the protocol with a fixed received stream; returns sent symbols
    until the sender has nothing left to send."""
    state = EccState(message)
    sent = []
    for got in deliveries:
        nxt = state.next_symbol()
        if nxt is None:
            break
        sent.append(nxt)
        state.push(got)
    return sent


@given(
    st.lists(st.integers(0, 1), min_size=2, max_size=10).map(tuple),
    st.data(),
)
def test_prefix_message_sends_prefix_stream(message, data):
    # Under one fixed received trace, the stream sent for a message prefix is
    # a prefix of the stream sent for the whole message.
    k = data.draw(st.integers(1, len(message) - 1))
    deliveries = data.draw(st.lists(st.sampled_from(SYMS), min_size=4, max_size=20))
    full = _channel_sent_stream(message, deliveries)
    part = _channel_sent_stream(message[:k], deliveries)
    assert full[: len(part)] == part


def test_noiseless_channel_transmits_verbatim():
    msg = (1, 1, 0, 1, 0, 0)
    steps = simulate_channel(msg, {}, 10)
    assert [s.sent for s in steps] == [O, O, Z, O, Z, Z]
    assert steps[-1].decoded == msg
    assert [s.potential for s in steps] == [1, 2, 3, 4, 5, 6]


def test_channel_corrects_corruption():
    msg = (1, 0)
    steps = simulate_channel(msg, {0: Z}, 6)
    # wrong first bit, then backspace repairs it
    assert [s.received for s in steps] == [Z, B, O, Z]
    assert steps[-1].decoded == msg


def test_channel_end_to_end_with_random_errors():
    rng = random.Random(11)
    for _ in range(50):
        msg = tuple(rng.randrange(2) for _ in range(16))
        n = required_length(16, 0.25)
        n_err = rng.randrange(max(1, n // 4))
        corrupt = {}
        for pos in rng.sample(range(n), n_err):
            corrupt[pos] = SYMS[rng.randrange(3)]
        state = EccState(msg)
        for i in range(n):
            sent = state.next_symbol()
            if sent is None:
                break
            # a drawn corruption equal to the sent symbol is not an error, so
            # actual errors never exceed n_err < n/4
            state.push(corrupt.get(i, sent))
        assert tuple(state.decoded[:16]) == msg


def test_format_trace_layout():
    steps = simulate_channel((1, 0), {0: B}, 3)
    text = format_trace(steps)
    lines = text.splitlines()
    assert lines[0] == "0\t1\t<\t0\t"
    assert lines[1].split("\t")[:2] == ["1", "1"]
    for line in lines:
        assert len(line.split("\t")) == 5
