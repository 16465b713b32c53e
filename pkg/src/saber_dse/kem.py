"""SABER IND-CPA encryption and the IND-CCA KEM built on it.

All randomness enters through explicit seed arguments, so every function here
is deterministic. Byte layouts follow the NIST reference implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import keccak
from .params import HASH_BYTES, KEY_BYTES, SABER, SEED_BYTES, FormatError, SaberParams
from .poly import (
    PolyMatrix,
    PolyVec,
    add_round,
    inner_prod,
    matvec_mul,
    pack_poly,
    pack_polyvec,
    unpack_poly,
    unpack_polyvec,
)

SharedSecret = bytes


def _need_len(name: str, data: bytes, size: int) -> None:
    if len(data) != size:
        raise FormatError(f"{name} must be {size} bytes, got {len(data)}")


@dataclass(frozen=True)
class PublicKey:
    seed_A: bytes
    b_packed: bytes

    def to_bytes(self) -> bytes:
        return self.b_packed + self.seed_A

    @classmethod
    def from_bytes(cls, data: bytes, params: SaberParams = SABER) -> "PublicKey":
        _need_len("public key", data, params.pk_bytes)
        cut = params.polyvec_compressed_bytes
        return cls(seed_A=bytes(data[cut:]), b_packed=bytes(data[:cut]))


@dataclass(frozen=True)
class SecretKey:
    """KEM secret key: secret vector (13-bit packed), public key, its hash and ``z``."""

    s_packed: bytes
    pk: PublicKey
    pk_hash: bytes
    z: bytes

    def to_bytes(self) -> bytes:
        return self.s_packed + self.pk.to_bytes() + self.pk_hash + self.z

    @classmethod
    def from_bytes(cls, data: bytes, params: SaberParams = SABER) -> "SecretKey":
        _need_len("secret key", data, params.kem_sk_bytes)
        a = params.cpa_sk_bytes
        b = a + params.pk_bytes
        return cls(
            s_packed=bytes(data[:a]),
            pk=PublicKey.from_bytes(data[a:b], params),
            pk_hash=bytes(data[b:b + HASH_BYTES]),
            z=bytes(data[b + HASH_BYTES:]),
        )

    def secret_vector(self, params: SaberParams = SABER) -> PolyVec:
        return unpack_polyvec(self.s_packed, params.eps_q, params.l)


@dataclass(frozen=True)
class Ciphertext:
    b_prime_packed: bytes
    c_m_packed: bytes

    def to_bytes(self) -> bytes:
        return self.b_prime_packed + self.c_m_packed

    @classmethod
    def from_bytes(cls, data: bytes, params: SaberParams = SABER) -> "Ciphertext":
        _need_len("ciphertext", data, params.ct_bytes)
        cut = params.polyvec_compressed_bytes
        return cls(b_prime_packed=bytes(data[:cut]), c_m_packed=bytes(data[cut:]))


def cbd_sample(prf_bytes: bytes, params: SaberParams = SABER) -> PolyVec:
    """Centered binomial samples: HW(low mu/2 bits) - HW(high mu/2 bits), mod 2^13."""
    _need_len("sampler input", prf_bytes, params.coin_bytes)
    bits = np.unpackbits(np.frombuffer(bytes(prf_bytes), dtype=np.uint8), bitorder="little")
    bits = bits.reshape(params.l, params.N, params.mu).astype(np.int64)
    half = params.mu // 2
    diff = bits[..., :half].sum(axis=-1) - bits[..., half:].sum(axis=-1)
    return diff & ((1 << params.eps_q) - 1)


def gen_matrix(seed: bytes, params: SaberParams = SABER) -> PolyMatrix:
    _need_len("matrix seed", seed, SEED_BYTES)
    l = params.l
    buf = keccak.shake128(seed, l * l * params.poly_bytes)
    flat = unpack_polyvec(buf, params.eps_q, l * l)
    return flat.reshape(l, l, params.N)


def gen_secret(seed: bytes, params: SaberParams = SABER) -> PolyVec:
    _need_len("noise seed", seed, SEED_BYTES)
    return cbd_sample(keccak.shake128(seed, params.coin_bytes), params)


def _round_vec(v: PolyVec, params: SaberParams) -> PolyVec:
    return np.stack([add_round(p, params.h1) for p in v])


def pke_keygen(seed_A: bytes, seed_s: bytes, params: SaberParams = SABER) -> tuple[PublicKey, PolyVec]:
    A = gen_matrix(seed_A, params)
    s = gen_secret(seed_s, params)
    b = _round_vec(matvec_mul(A, s, transpose=True, eps=params.eps_q), params)
    return PublicKey(seed_A=bytes(seed_A), b_packed=pack_polyvec(b, params.eps_p)), s


def _message_poly(m: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(m, dtype=np.uint8), bitorder="little").astype(np.int64)


def pke_enc(pk: PublicKey, m: bytes, seed_sp: bytes, params: SaberParams = SABER) -> Ciphertext:
    _need_len("message", m, KEY_BYTES)
    _need_len("public key", pk.to_bytes(), params.pk_bytes)
    A = gen_matrix(pk.seed_A, params)
    sp = gen_secret(seed_sp, params)
    b_prime = _round_vec(matvec_mul(A, sp, eps=params.eps_q), params)

    mask_p = (1 << params.eps_p) - 1
    b = unpack_polyvec(pk.b_packed, params.eps_p, params.l)
    v_prime = inner_prod(b, sp & mask_p, eps=params.eps_p)
    c_m = ((v_prime + params.h1 - (_message_poly(m) << (params.eps_p - 1))) & mask_p) >> (
        params.eps_p - params.eps_t
    )
    return Ciphertext(
        b_prime_packed=pack_polyvec(b_prime, params.eps_p),
        c_m_packed=pack_poly(c_m, params.eps_t),
    )


def pke_dec(s: PolyVec, ct: Ciphertext, params: SaberParams = SABER) -> bytes:
    _need_len("ciphertext", ct.to_bytes(), params.ct_bytes)
    mask_p = (1 << params.eps_p) - 1
    b_prime = unpack_polyvec(ct.b_prime_packed, params.eps_p, params.l)
    v = inner_prod(b_prime, np.asarray(s) & mask_p, eps=params.eps_p)
    c_m = unpack_poly(ct.c_m_packed, params.eps_t)
    bits = ((v + params.h2 - (c_m << (params.eps_p - params.eps_t))) & mask_p) >> (params.eps_p - 1)
    return np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()


def kem_keygen(
    random_a: bytes, seed_s: bytes, z: bytes, params: SaberParams = SABER
) -> tuple[PublicKey, SecretKey]:
    """Key pair from three 32-byte random strings.

    ``random_a`` is hashed with SHAKE-128 before it becomes the matrix seed,
    so raw generator output never appears in the public key.
    """
    _need_len("random_a", random_a, SEED_BYTES)
    _need_len("z", z, KEY_BYTES)
    seed_A = keccak.shake128(random_a, SEED_BYTES)
    pk, s = pke_keygen(seed_A, seed_s, params)
    sk = SecretKey(
        s_packed=pack_polyvec(s, params.eps_q),
        pk=pk,
        pk_hash=keccak.sha3_256(pk.to_bytes()),
        z=bytes(z),
    )
    return pk, sk


def kem_encaps(pk: PublicKey, m_seed: bytes, params: SaberParams = SABER) -> tuple[Ciphertext, SharedSecret]:
    _need_len("m_seed", m_seed, KEY_BYTES)
    pk_bytes = pk.to_bytes()
    _need_len("public key", pk_bytes, params.pk_bytes)
    m = keccak.sha3_256(m_seed)
    kr = keccak.sha3_512(m + keccak.sha3_256(pk_bytes))
    ct = pke_enc(pk, m, kr[32:], params)
    ss = keccak.sha3_256(kr[:32] + keccak.sha3_256(ct.to_bytes()))
    return ct, ss


def verify(a: bytes, b: bytes) -> int:
    """0 if ``a == b`` else 1, from an OR-accumulation of byte differences."""
    if len(a) != len(b):
        raise ValueError(f"verify needs equal lengths, got {len(a)} and {len(b)}")
    acc = 0
    for x, y in zip(a, b):
        acc |= x ^ y
    return (-acc >> 63) & 1


def cmov(dst: bytes, src: bytes, flag: int) -> bytes:
    """Return ``src`` when ``flag == 0`` and ``dst`` when ``flag == 1``."""
    if len(dst) != len(src):
        raise ValueError("cmov operands must have equal length")
    if flag not in (0, 1):
        raise ValueError("flag must be 0 or 1")
    keep = -flag & 0xFF
    return bytes((d & keep) | (s & ~keep & 0xFF) for d, s in zip(dst, src))


def kem_decaps(sk: SecretKey, ct: Ciphertext, params: SaberParams = SABER) -> SharedSecret:
    ct_bytes = ct.to_bytes()
    _need_len("ciphertext", ct_bytes, params.ct_bytes)
    _need_len("secret key", sk.to_bytes(), params.kem_sk_bytes)
    m = pke_dec(sk.secret_vector(params), ct, params)
    kr = keccak.sha3_512(m + sk.pk_hash)
    ct_check = pke_enc(sk.pk, m, kr[32:], params)
    fail = verify(ct_bytes, ct_check.to_bytes())
    ct_hash = keccak.sha3_256(ct_bytes)
    k = cmov(sk.z, kr[:32], fail)
    return keccak.sha3_256(k + ct_hash)
