"""Arithmetic in Z_{2^e}[x]/(x^256 + 1), rounding and bit packing.

Polynomials are numpy ``int64`` arrays of shape ``(256,)`` holding unsigned
residues. A vector of ``l`` polynomials has shape ``(l, 256)`` and an ``l x l``
matrix has shape ``(l, l, 256)``.
"""

from __future__ import annotations

import numpy as np

from .params import EPS_P, EPS_Q, N, SECRET_PACK_BITS, ConfigurationError, FormatError

Poly = np.ndarray
PolyVec = np.ndarray
PolyMatrix = np.ndarray

SUPPORTED_WIDTHS = frozenset({1, 3, 4, 6, 10, 13, 14})


def zero_poly() -> Poly:
    return np.zeros(N, dtype=np.int64)


def as_poly(coeffs, eps: int = EPS_Q) -> Poly:
    """Copy ``coeffs`` into a Poly, checking length and range."""
    p = np.asarray(coeffs, dtype=np.int64).copy()
    if p.shape != (N,):
        raise ConfigurationError(f"polynomial must have {N} coefficients, got shape {p.shape}")
    if p.size and (p.min() < 0 or p.max() >= (1 << eps)):
        raise ConfigurationError(f"coefficients out of range for modulus 2^{eps}")
    return p


def poly_mul(a: Poly, b: Poly, eps: int = EPS_Q) -> Poly:
    """Negacyclic schoolbook product ``a*b mod (x^N + 1, 2^eps)``."""
    full = np.convolve(a, b)
    # x^N = -1: the upper half folds back with a sign flip
    low = full[:N].copy()
    low[: N - 1] -= full[N:]
    return low & ((1 << eps) - 1)


def poly_add(a: Poly, b: Poly, eps: int = EPS_Q) -> Poly:
    return (a + b) & ((1 << eps) - 1)


def _check_vec(v: PolyVec, name: str) -> None:
    if v.ndim != 2 or v.shape[1] != N:
        raise ConfigurationError(f"{name} must have shape (l, {N}), got {v.shape}")


def matvec_mul(A: PolyMatrix, s: PolyVec, transpose: bool = False, eps: int = EPS_Q) -> PolyVec:
    """``A s`` (or ``A^T s``) over the ring; every entry is a sum of ``l`` products."""
    A = np.asarray(A)
    s = np.asarray(s)
    _check_vec(s, "s")
    l = s.shape[0]
    if A.shape != (l, l, N):
        raise ConfigurationError(f"matrix shape {A.shape} does not match vector length {l}")
    mask = (1 << eps) - 1
    out = np.zeros((l, N), dtype=np.int64)
    for i in range(l):
        acc = zero_poly()
        for j in range(l):
            a = A[j][i] if transpose else A[i][j]
            acc = (acc + poly_mul(a, s[j], eps)) & mask
        out[i] = acc
    return out


def inner_prod(u: PolyVec, v: PolyVec, eps: int = EPS_Q) -> Poly:
    u = np.asarray(u)
    v = np.asarray(v)
    _check_vec(u, "u")
    _check_vec(v, "v")
    if u.shape != v.shape:
        raise ConfigurationError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    mask = (1 << eps) - 1
    acc = zero_poly()
    for a, b in zip(u, v):
        acc = (acc + poly_mul(a, b, eps)) & mask
    return acc


def add_round(x: Poly, h: int = 1 << (EPS_Q - EPS_P - 1)) -> Poly:
    """Add ``h`` and drop the low ``eps_q - eps_p`` bits: mod 2^13 -> mod 2^10."""
    return ((np.asarray(x) + h) >> (EPS_Q - EPS_P)) & ((1 << EPS_P) - 1)


def _check_width(eps: int) -> None:
    if eps not in SUPPORTED_WIDTHS:
        raise FormatError(f"unsupported bit width {eps}; supported: {sorted(SUPPORTED_WIDTHS)}")


def pack_poly(p: Poly, eps: int) -> bytes:
    """Dense little-endian packing, ``eps`` bits per coefficient."""
    _check_width(eps)
    p = np.asarray(p, dtype=np.int64)
    if p.shape != (N,):
        raise ConfigurationError(f"polynomial must have {N} coefficients")
    if p.min() < 0 or p.max() >= (1 << eps):
        raise ConfigurationError(f"coefficients do not fit in {eps} bits")
    bits = (p[:, None] >> np.arange(eps)) & 1
    return np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()


def unpack_poly(bs: bytes, eps: int) -> Poly:
    _check_width(eps)
    expected = N * eps // 8
    if len(bs) != expected:
        raise FormatError(f"expected {expected} bytes for {eps}-bit polynomial, got {len(bs)}")
    bits = np.unpackbits(np.frombuffer(bytes(bs), dtype=np.uint8), bitorder="little")
    weights = np.int64(1) << np.arange(eps, dtype=np.int64)
    return bits.reshape(N, eps).astype(np.int64) @ weights


def pack_polyvec(v: PolyVec, eps: int) -> bytes:
    return b"".join(pack_poly(p, eps) for p in v)


def unpack_polyvec(bs: bytes, eps: int, l: int) -> PolyVec:
    size = N * eps // 8
    if len(bs) != l * size:
        raise FormatError(f"expected {l * size} bytes for {l} polynomials, got {len(bs)}")
    return np.stack([unpack_poly(bs[i * size:(i + 1) * size], eps) for i in range(l)])


def pack_secret(s: PolyVec) -> bytes:
    """Pack a small secret vector at 14 bits/coefficient, sign-extended from mod 2^13."""
    s = np.asarray(s, dtype=np.int64)
    signed = np.where(s >= (1 << (EPS_Q - 1)), s - (1 << EPS_Q), s)
    return pack_polyvec(signed & ((1 << SECRET_PACK_BITS) - 1), SECRET_PACK_BITS)


def unpack_secret(bs: bytes, l: int) -> PolyVec:
    return unpack_polyvec(bs, SECRET_PACK_BITS, l) & ((1 << EPS_Q) - 1)
