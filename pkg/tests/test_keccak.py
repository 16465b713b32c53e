import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saber_dse import keccak

KNOWN = [
    (keccak.sha3_256, b"", "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a"),
    (keccak.sha3_256, b"abc", "3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532"),
    (keccak.sha3_512, b"", "a69f73cca23a9ac5c8b567dc185a756e97c982164fe25859e0d1dcc1475c80a6"
                           "15b2123af1f5f94c11e3e9402c3ac558f500199d95b6d3e301758586281dcd26"),
    (keccak.sha3_512, b"abc", "b751850b1a57168a5693cd924b6b096e08f621827444f70d884f5d0240d2712e"
                              "10e116e9192af3c91a7ec57647e3934057340b4cf408d5a56592f8274eec53f0"),
]


@pytest.mark.parametrize("fn,msg,digest", KNOWN)
def test_published_digests(fn, msg, digest):
    assert fn(msg).hex() == digest


def test_shake128_empty_16():
    assert keccak.shake128(b"", 16).hex() == "7f9c2ba4e88f827d616045507605853e"


def test_shake128_abc_matches_oracle():
    assert keccak.shake128(b"abc", 32) == hashlib.shake_128(b"abc").digest(32)


@pytest.mark.parametrize("length", list(range(0, 300, 7)) + [135, 136, 137, 167, 168, 169, 200, 336])
def test_against_hashlib(length):
    msg = bytes((i * 37 + length) & 0xFF for i in range(length))
    assert keccak.sha3_256(msg) == hashlib.sha3_256(msg).digest()
    assert keccak.sha3_512(msg) == hashlib.sha3_512(msg).digest()
    assert keccak.shake128(msg, 500) == hashlib.shake_128(msg).digest(500)


def test_two_hundred_byte_message_crosses_rate_blocks():
    msg = b"\xa3" * 200
    assert keccak.sha3_256(msg) == hashlib.sha3_256(msg).digest()
    assert keccak.sha3_512(msg) == hashlib.sha3_512(msg).digest()


def test_determinism():
    rng = np.random.default_rng(3)
    msg = rng.bytes(77)
    assert keccak.sha3_256(msg) == keccak.sha3_256(msg)
    assert keccak.shake128(msg, 64) == keccak.shake128(msg, 64)


@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=400), st.integers(0, 400), st.integers(0, 400))
def test_incremental_squeeze(msg, n, m):
    sponge = keccak.shake128_sponge(msg)
    assert sponge.squeeze(n) + sponge.squeeze(m) == keccak.shake128(msg, n + m)


def test_incremental_absorb():
    sponge = keccak.shake128_sponge(b"")
    for chunk in (b"ab", b"c" * 200, b"", b"d" * 170):
        sponge.absorb(chunk)
    msg = b"ab" + b"c" * 200 + b"d" * 170
    assert sponge.squeeze(40) == hashlib.shake_128(msg).digest(40)
    with pytest.raises(RuntimeError):
        sponge.absorb(b"x")


@pytest.mark.parametrize("in_len,out_len", [(32, 32), (32, 168), (32, 169), (32, 3744), (168, 10), (400, 768), (0, 0)])
def test_permutation_counter(in_len, out_len):
    sponge = keccak.shake128_sponge(bytes(in_len))
    sponge.squeeze(out_len)
    expected = in_len // 168 + (-(-out_len // 168) if out_len else 0)
    assert sponge.permutations == expected == keccak.shake128_permutations(in_len, out_len)


def test_matrix_expansion_needs_23_permutations():
    assert keccak.shake128_permutations(32, 3 * 3 * 416) == 23


def test_compiled_and_portable_permutations_agree():
    rng = np.random.default_rng(11)
    lanes = rng.integers(0, 2**63, 25, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    a = lanes.copy()
    keccak._permute_array(a)
    b = [int(x) for x in lanes]
    keccak.keccak_f1600(b)
    assert [int(x) for x in a] == b


def test_rejects_bad_rate_and_negative_length():
    with pytest.raises(ValueError):
        keccak.SpongeState(100, 0x06)
    with pytest.raises(ValueError):
        keccak.shake128_sponge(b"").squeeze(-1)
