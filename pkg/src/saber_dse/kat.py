"""NIST known-answer-test files: parsing, the AES-256 CTR DRBG, and replay."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .kem import Ciphertext, PublicKey, SecretKey, kem_decaps, kem_encaps, kem_keygen
from .params import KEY_BYTES, SEED_BYTES, FormatError, SaberParams

KAT_FIELDS = ("count", "seed", "pk", "sk", "ct", "ss")


class NistDrbg:
    """AES-256 CTR_DRBG as used by the NIST PQC ``rng.c`` (no derivation function)."""

    def __init__(self, entropy: bytes, personalization: bytes | None = None):
        if len(entropy) != 48:
            raise ValueError("DRBG entropy input must be 48 bytes")
        seed = bytearray(entropy)
        if personalization is not None:
            for i in range(48):
                seed[i] ^= personalization[i]
        self.key = bytes(32)
        self.v = bytes(16)
        self._update(bytes(seed))

    def _block(self) -> bytes:
        counter = (int.from_bytes(self.v, "big") + 1) % (1 << 128)
        self.v = counter.to_bytes(16, "big")
        enc = Cipher(algorithms.AES(self.key), modes.ECB()).encryptor()
        return enc.update(self.v) + enc.finalize()

    def _update(self, provided: bytes | None) -> None:
        temp = b"".join(self._block() for _ in range(3))
        if provided is not None:
            temp = bytes(a ^ b for a, b in zip(temp, provided))
        self.key, self.v = temp[:32], temp[32:]

    def random_bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self._block()
        self._update(None)
        return bytes(out[:n])


@dataclass
class KatVector:
    count: int
    seed: bytes
    pk: bytes
    sk: bytes
    ct: bytes
    ss: bytes


@dataclass
class KatResult:
    count: int
    ok: bool
    mismatches: list[str] = field(default_factory=list)


def parse_rsp(text: str) -> list[KatVector]:
    """Parse ``key = hex`` records separated by blank lines; ``#`` lines are comments."""
    vectors = []
    record: dict[str, str] = {}

    def flush():
        if not record:
            return
        missing = [k for k in KAT_FIELDS if k not in record]
        if missing:
            raise FormatError(f"KAT record {record.get('count', '?')} lacks {missing}")
        try:
            vectors.append(
                KatVector(
                    count=int(record["count"]),
                    **{k: bytes.fromhex(record[k]) for k in KAT_FIELDS[1:]},
                )
            )
        except ValueError as exc:
            raise FormatError(f"KAT record {record.get('count')}: {exc}") from None
        record.clear()

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            flush()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"line {lineno}: expected 'key = value'")
        key = key.strip()
        if key == "count":
            flush()
        record[key] = value.strip()
    flush()
    return vectors


def load_rsp(path: str | Path) -> list[KatVector]:
    return parse_rsp(Path(path).read_text())


def run_vector(vec: KatVector, params: SaberParams) -> KatResult:
    drbg = NistDrbg(vec.seed)
    random_a = drbg.random_bytes(SEED_BYTES)
    seed_s = drbg.random_bytes(SEED_BYTES)
    z = drbg.random_bytes(KEY_BYTES)
    pk, sk = kem_keygen(random_a, seed_s, z, params)
    ct, ss = kem_encaps(pk, drbg.random_bytes(KEY_BYTES), params)

    mismatches = []
    if pk.to_bytes() != vec.pk:
        mismatches.append("pk")
    if sk.to_bytes() != vec.sk:
        mismatches.append("sk")
    if ct.to_bytes() != vec.ct:
        mismatches.append("ct")
    if ss != vec.ss:
        mismatches.append("ss")
    # decapsulate the file's own bytes so a corrupted field shows up here too
    try:
        ss_dec = kem_decaps(SecretKey.from_bytes(vec.sk, params), Ciphertext.from_bytes(vec.ct, params), params)
    except FormatError:
        mismatches.append("decaps-format")
    else:
        if ss_dec != vec.ss:
            mismatches.append("decaps")
    return KatResult(vec.count, not mismatches, mismatches)


def first_drbg_outputs(entropy: bytes, n_seeds: int = 100) -> list[bytes]:
    """Per-vector seeds the NIST generator derives from its master entropy."""
    drbg = NistDrbg(entropy)
    return [drbg.random_bytes(48) for _ in range(n_seeds)]


__all__ = [
    "KatResult",
    "KatVector",
    "NistDrbg",
    "PublicKey",
    "first_drbg_outputs",
    "load_rsp",
    "parse_rsp",
    "run_vector",
]
