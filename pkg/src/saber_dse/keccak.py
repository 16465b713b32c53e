"""Keccak-f[1600] and the FIPS-202 sponges used by SABER.

One permutation is applied at a time; every :class:`SpongeState` counts the
permutations it performed so the cycle model can charge for them.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

SHAKE128_RATE = 168
SHA3_256_RATE = 136
SHA3_512_RATE = 72

_RC = [
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
]


def _rho_pi_table():
    # (destination index, source index, rotation) for the combined rho+pi step
    rot = [[0] * 5 for _ in range(5)]
    x, y = 1, 0
    for t in range(24):
        rot[x][y] = ((t + 1) * (t + 2) // 2) % 64
        x, y = y, (2 * x + 3 * y) % 5
    table = []
    for x in range(5):
        for y in range(5):
            # B[y, 2x+3y] = rot(A[x, y], r[x, y]); lanes indexed x + 5y
            table.append((y + 5 * ((2 * x + 3 * y) % 5), x + 5 * y, rot[x][y]))
    return table


_RHO_PI = _rho_pi_table()


def _build_permutation():
    # Straight-line round body over 25 local variables: the portable path,
    # and the cross-check for the compiled one.
    lines = ["def keccak_f1600(lanes):", "    (" + ", ".join(f"a{i}" for i in range(25)) + ") = lanes",
             "    for rc in _RC:"]
    body = []
    for x in range(5):
        body.append(f"c{x} = a{x} ^ a{x + 5} ^ a{x + 10} ^ a{x + 15} ^ a{x + 20}")
    for x in range(5):
        c1 = f"c{(x + 1) % 5}"
        body.append(f"d{x} = c{(x - 1) % 5} ^ ((({c1} << 1) | ({c1} >> 63)) & MASK64)")
    for dst, src_i, r in _RHO_PI:
        if r:
            body.append(f"t = a{src_i} ^ d{src_i % 5}")
            body.append(f"b{dst} = ((t << {r}) & MASK64) | (t >> {64 - r})")
        else:
            body.append(f"b{dst} = a{src_i} ^ d{src_i % 5}")
    for y in range(0, 25, 5):
        for x in range(5):
            body.append(f"a{y + x} = b{y + x} ^ ((b{y + (x + 1) % 5} ^ MASK64) & b{y + (x + 2) % 5})")
    body.append("a0 ^= rc")
    lines += ["        " + s for s in body]
    lines.append("    lanes[:] = [" + ", ".join(f"a{i}" for i in range(25)) + "]")
    namespace = {"_RC": _RC, "MASK64": MASK64}
    exec("\n".join(lines), namespace)
    fn = namespace["keccak_f1600"]
    fn.__doc__ = "Apply the 24-round permutation in place to 25 int lanes (index x + 5*y)."
    return fn


keccak_f1600 = _build_permutation()

_RC_ARR = np.array(_RC, dtype=np.uint64)
_DST = np.array([d for d, _, _ in _RHO_PI], dtype=np.int64)
_SRC = np.array([s for _, s, _ in _RHO_PI], dtype=np.int64)
_ROT = np.array([r for _, _, r in _RHO_PI], dtype=np.uint64)


def _permute_array_py(a: np.ndarray) -> None:
    lanes = [int(v) for v in a]
    keccak_f1600(lanes)
    a[:] = np.array(lanes, dtype=np.uint64)


try:
    import numba
except ImportError:  # pragma: no cover
    _permute_array = _permute_array_py
else:
    @numba.njit(cache=True)
    def _permute_jit(a, rc, dst, src, rot):
        c = np.empty(5, np.uint64)
        d = np.empty(5, np.uint64)
        b = np.empty(25, np.uint64)
        # keep every shift operand uint64; mixed signedness promotes to float
        one = np.uint64(1)
        s63 = np.uint64(63)
        s64 = np.uint64(64)
        for rnd in range(24):
            for x in range(5):
                c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20]
            for x in range(5):
                cc = c[(x + 1) % 5]
                d[x] = c[(x + 4) % 5] ^ ((cc << one) | (cc >> s63))
            for i in range(25):
                a[i] ^= d[i % 5]
            for k in range(25):
                v = a[src[k]]
                sh = rot[k]
                if sh == 0:
                    b[dst[k]] = v
                else:
                    b[dst[k]] = (v << sh) | (v >> (s64 - sh))
            for y in range(0, 25, 5):
                for x in range(5):
                    a[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5])
            a[0] ^= rc[rnd]

    def _permute_array(a: np.ndarray) -> None:
        _permute_jit(a, _RC_ARR, _DST, _SRC, _ROT)


class SpongeState:
    """A Keccak sponge: absorb any number of times, then squeeze incrementally.

    ``permutations`` counts every Keccak-f call made so far.
    """

    def __init__(self, rate_bytes: int, suffix: int):
        if rate_bytes not in (SHAKE128_RATE, SHA3_256_RATE, SHA3_512_RATE):
            raise ValueError(f"unsupported rate {rate_bytes}")
        self.rate_bytes = rate_bytes
        self.suffix = suffix
        self.lanes = np.zeros(25, dtype=np.uint64)
        self.permutations = 0
        self._buf = bytearray()
        self._squeezing = False
        self._out = b""
        self._out_pos = 0

    def _permute(self) -> None:
        _permute_array(self.lanes)
        self.permutations += 1

    def _xor_block(self, block: bytes) -> None:
        self.lanes[: self.rate_bytes // 8] ^= np.frombuffer(block, dtype="<u8")

    def absorb(self, data: bytes) -> "SpongeState":
        if self._squeezing:
            raise RuntimeError("cannot absorb after squeezing has started")
        buf = self._buf
        buf += data
        rate = self.rate_bytes
        full = len(buf) // rate
        for k in range(full):
            self._xor_block(bytes(buf[k * rate:(k + 1) * rate]))
            self._permute()
        del buf[: full * rate]
        return self

    def _finalize(self) -> None:
        rate = self.rate_bytes
        block = bytearray(self._buf) + bytes(rate - len(self._buf))
        block[len(self._buf)] ^= self.suffix
        block[rate - 1] ^= 0x80
        self._xor_block(bytes(block))
        self._permute()
        self._buf = bytearray()
        self._squeezing = True
        self._load_output()

    def _load_output(self) -> None:
        self._out = self.lanes.astype("<u8").tobytes()[: self.rate_bytes]
        self._out_pos = 0

    def squeeze(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("output length must be non-negative")
        if n == 0:
            return b""
        if not self._squeezing:
            self._finalize()
        chunks = []
        while n > 0:
            if self._out_pos == self.rate_bytes:
                self._permute()
                self._load_output()
            take = min(n, self.rate_bytes - self._out_pos)
            chunks.append(self._out[self._out_pos:self._out_pos + take])
            self._out_pos += take
            n -= take
        return b"".join(chunks)


def shake128_sponge(data: bytes = b"") -> SpongeState:
    return SpongeState(SHAKE128_RATE, 0x1F).absorb(data)


def shake128(data: bytes, out_len: int) -> bytes:
    return shake128_sponge(data).squeeze(out_len)


def sha3_256(data: bytes) -> bytes:
    return SpongeState(SHA3_256_RATE, 0x06).absorb(data).squeeze(32)


def sha3_512(data: bytes) -> bytes:
    return SpongeState(SHA3_512_RATE, 0x06).absorb(data).squeeze(64)


def shake128_permutations(in_len: int, out_len: int) -> int:
    """Permutations a SHAKE-128 call performs: full absorb blocks plus output blocks."""
    if out_len == 0:
        return in_len // SHAKE128_RATE
    return in_len // SHAKE128_RATE + -(-out_len // SHAKE128_RATE)
