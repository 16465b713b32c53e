import numpy as np
import pytest

from saber_dse import kem
from saber_dse.kat import NistDrbg, load_rsp
from saber_dse.params import FIRESABER, LIGHTSABER, SABER, FormatError, get_params
from saber_dse.poly import unpack_polyvec

ALL = [LIGHTSABER, SABER, FIRESABER]


def seeds(rng, n=4):
    return [rng.bytes(32) for _ in range(n)]


def test_saber_sizes():
    assert (SABER.pk_bytes, SABER.sk_bytes, SABER.ct_bytes) == (992, 1344, 1088)
    assert SABER.kem_sk_bytes == 2304
    assert get_params("saber") is SABER


@pytest.mark.parametrize("params", ALL, ids=lambda p: p.name)
def test_artifact_sizes_match_params(params):
    rng = np.random.default_rng(params.l)
    a, s, z, m = seeds(rng)
    pk, sk = kem.kem_keygen(a, s, z, params)
    ct, ss = kem.kem_encaps(pk, m, params)
    assert len(pk.to_bytes()) == params.pk_bytes
    assert len(sk.to_bytes()) == params.kem_sk_bytes
    assert len(ct.to_bytes()) == params.ct_bytes
    assert len(ss) == 32
    assert kem.kem_decaps(sk, ct, params) == ss


def test_cbd_examples():
    assert not kem.cbd_sample(bytes(768)).any()
    coins = bytearray(768)
    coins[0] = 0x0F
    assert kem.cbd_sample(bytes(coins))[0][0] == 4
    coins[0] = 0xF0
    assert kem.cbd_sample(bytes(coins))[0][0] == (1 << 13) - 4
    with pytest.raises(FormatError):
        kem.cbd_sample(bytes(767))


@pytest.mark.parametrize("params", ALL, ids=lambda p: p.name)
def test_cbd_range(params):
    rng = np.random.default_rng(1)
    s = kem.cbd_sample(rng.bytes(params.coin_bytes), params)
    signed = np.where(s >= 4096, s - 8192, s)
    assert signed.min() >= -params.mu // 2 and signed.max() <= params.mu // 2


def test_gen_matrix_matches_reference_dump(data_dir):
    vec = load_rsp(data_dir / "PQCkemKAT_saber.rsp")[0]
    seed_A = vec.pk[-32:]
    rows = [list(map(int, line.split())) for line in (data_dir / "saber_matrix_count0.txt").read_text().splitlines()]
    A = kem.gen_matrix(seed_A)
    assert np.array_equal(A.reshape(9, 256), np.array(rows))
    assert np.array_equal(kem.gen_matrix(seed_A), A)


def test_gen_matrix_avalanche():
    seed = bytearray(32)
    A0 = kem.gen_matrix(bytes(seed))
    seed[0] ^= 1
    assert not np.array_equal(A0, kem.gen_matrix(bytes(seed)))


def test_kat_public_key_unpacks_to_round_product(data_dir):
    vec = load_rsp(data_dir / "PQCkemKAT_saber.rsp")[0]
    drbg = NistDrbg(vec.seed)
    random_a, seed_s = drbg.random_bytes(32), drbg.random_bytes(32)
    pk, s = kem.pke_keygen(kem.keccak.shake128(random_a, 32), seed_s)
    assert pk.to_bytes() == vec.pk
    b = unpack_polyvec(vec.pk[:960], 10, 3)
    assert np.array_equal(b, unpack_polyvec(pk.b_packed, 10, 3))
    assert np.array_equal(s, unpack_polyvec(vec.sk[:1248], 13, 3))


def test_pke_round_trip_and_determinism():
    rng = np.random.default_rng(2)
    for _ in range(50):
        seed_A, seed_s, m, r = seeds(rng)
        pk, s = kem.pke_keygen(seed_A, seed_s)
        ct = kem.pke_enc(pk, m, r)
        assert kem.pke_dec(s, ct) == m
        assert kem.pke_enc(pk, m, r) == ct


def test_pke_dec_total_on_zero_ciphertext():
    rng = np.random.default_rng(3)
    _, s = kem.pke_keygen(rng.bytes(32), rng.bytes(32))
    out = kem.pke_dec(s, kem.Ciphertext.from_bytes(bytes(1088)))
    assert len(out) == 32


def test_kem_round_trips_all_variants():
    rng = np.random.default_rng(4)
    for params in ALL:
        for _ in range(20):
            a, s, z, m = seeds(rng)
            pk, sk = kem.kem_keygen(a, s, z, params)
            ct, ss = kem.kem_encaps(pk, m, params)
            assert kem.kem_decaps(sk, ct, params) == ss


def test_implicit_rejection_every_byte_position():
    rng = np.random.default_rng(5)
    a, s, z, m = seeds(rng)
    pk, sk = kem.kem_keygen(a, s, z)
    ct, ss = kem.kem_encaps(pk, m)
    raw = ct.to_bytes()
    for pos in range(0, len(raw), 17):
        bad = bytearray(raw)
        bad[pos] ^= 0x01
        bad_ct = kem.Ciphertext.from_bytes(bytes(bad))
        out = kem.kem_decaps(sk, bad_ct)
        assert out != ss
        assert out == kem.keccak.sha3_256(z + kem.keccak.sha3_256(bytes(bad)))


def test_determinism_of_kem():
    a, s, z, m = (bytes([i]) * 32 for i in range(4))
    assert kem.kem_keygen(a, s, z) == kem.kem_keygen(a, s, z)
    pk, _ = kem.kem_keygen(a, s, z)
    assert kem.kem_encaps(pk, m) == kem.kem_encaps(pk, m)


def test_format_errors():
    with pytest.raises(FormatError):
        kem.PublicKey.from_bytes(bytes(991))
    with pytest.raises(FormatError):
        kem.SecretKey.from_bytes(bytes(2303))
    with pytest.raises(FormatError):
        kem.Ciphertext.from_bytes(bytes(1087))
    with pytest.raises(FormatError):
        kem.kem_keygen(bytes(31), bytes(32), bytes(32))
    with pytest.raises(FormatError):
        kem.pke_enc(kem.PublicKey(bytes(32), bytes(959)), bytes(32), bytes(32))


def test_verify_and_cmov():
    rng = np.random.default_rng(6)
    a = rng.bytes(1088)
    assert kem.verify(a, a) == 0
    b = bytearray(a)
    b[500] ^= 0x80
    assert kem.verify(a, bytes(b)) == 1
    for _ in range(20):
        x, y = rng.bytes(1088), rng.bytes(1088)
        assert kem.verify(x, y) == int(x != y)
    with pytest.raises(ValueError):
        kem.verify(b"ab", b"abc")
    dst, src = bytes(32), bytes(range(32))
    assert kem.cmov(dst, src, 0) == src
    assert kem.cmov(dst, src, 1) == dst
    with pytest.raises(ValueError):
        kem.cmov(dst, src, 2)
