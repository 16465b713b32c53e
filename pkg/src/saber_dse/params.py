"""Parameter sets for the three SABER variants."""

from __future__ import annotations

from dataclasses import dataclass

N = 256
EPS_Q = 13
EPS_P = 10
Q = 1 << EPS_Q
P = 1 << EPS_P

SEED_BYTES = 32
KEY_BYTES = 32
HASH_BYTES = 32

# width used for the standalone packed secret vector (sign-extended residues)
SECRET_PACK_BITS = 14


class ConfigurationError(ValueError):
    """Operands or parameters do not agree in shape."""


class FormatError(ValueError):
    """A byte string has the wrong length or encoding."""


@dataclass(frozen=True)
class SaberParams:
    name: str
    l: int
    mu: int
    eps_t: int
    N: int = N
    eps_q: int = EPS_Q
    eps_p: int = EPS_P

    @property
    def poly_bytes(self) -> int:
        return self.eps_q * self.N // 8

    @property
    def polyvec_bytes(self) -> int:
        return self.l * self.poly_bytes

    @property
    def polyvec_compressed_bytes(self) -> int:
        return self.l * self.eps_p * self.N // 8

    @property
    def scale_bytes(self) -> int:
        return self.eps_t * self.N // 8

    @property
    def coin_bytes(self) -> int:
        """Pseudorandom bytes consumed by the sampler for one secret vector."""
        return self.l * self.mu * self.N // 8

    @property
    def pk_bytes(self) -> int:
        return self.polyvec_compressed_bytes + SEED_BYTES

    @property
    def sk_bytes(self) -> int:
        """Secret vector packed at 14 bits per coefficient."""
        return self.l * SECRET_PACK_BITS * self.N // 8

    @property
    def ct_bytes(self) -> int:
        return self.polyvec_compressed_bytes + self.scale_bytes

    @property
    def cpa_sk_bytes(self) -> int:
        """Secret vector as serialized inside the KEM secret key (13 bits/coeff)."""
        return self.polyvec_bytes

    @property
    def kem_sk_bytes(self) -> int:
        return self.cpa_sk_bytes + self.pk_bytes + HASH_BYTES + KEY_BYTES

    @property
    def h1(self) -> int:
        return 1 << (self.eps_q - self.eps_p - 1)

    @property
    def h2(self) -> int:
        return (
            (1 << (self.eps_p - 2))
            - (1 << (self.eps_p - self.eps_t - 1))
            + (1 << (self.eps_q - self.eps_p - 1))
        )


LIGHTSABER = SaberParams("LightSaber", l=2, mu=10, eps_t=3)
SABER = SaberParams("Saber", l=3, mu=8, eps_t=4)
FIRESABER = SaberParams("FireSaber", l=4, mu=6, eps_t=6)

VARIANTS = {
    "light": LIGHTSABER,
    "saber": SABER,
    "fire": FIRESABER,
}


def get_params(variant: str) -> SaberParams:
    try:
        return VARIANTS[variant.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown variant {variant!r}; expected one of {sorted(VARIANTS)}"
        ) from None
