"""Per-block cycle costs for the three timing classes.

A block's charge is ``base + per_unit * units`` plus memory cycles. ``units``
are polynomial products for the multiplier and Keccak-f calls for the hash
blocks. Memory cycles depend on how the block uses its access stream:

* ``exposed``: the block waits for every access, so the whole scheduled stream counts;
* ``hidden``: accesses overlap the datapath, so only stalls count, i.e. cycles
  beyond what the same stream costs on an ideal dual-port, unregistered memory.
"""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field
from pathlib import Path

from ..params import ConfigurationError
from .isa import Opcode, Operation

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

POLYMUL_CYCLES = 256
KECCAK_BLOCK_CYCLES = 28
KECCAK_BLOCK_BITS = 1344

TIMING_DIR = Path(__file__).resolve().parent.parent / "data" / "timing"


class TimingClass(enum.Enum):
    BASELINE_DP = "BASELINE_DP"
    PIP_DP = "PIP_DP"
    PIP_SP = "PIP_SP"


class MemoryMode(enum.Enum):
    EXPOSED = "exposed"
    HIDDEN = "hidden"


@dataclass(frozen=True)
class BlockCost:
    base: int
    memory: MemoryMode = MemoryMode.EXPOSED


@dataclass(frozen=True)
class BlockTiming:
    timing_class: TimingClass
    blocks: dict[Opcode, BlockCost]
    controller: dict[Operation, int] = field(default_factory=dict)
    polymul_cycles: int = POLYMUL_CYCLES
    keccak_block_cycles: int = KECCAK_BLOCK_CYCLES

    def __post_init__(self):
        missing = [op.value for op in Opcode if op not in self.blocks]
        if missing:
            raise ConfigurationError(f"{self.timing_class.value}: no cost for {missing}")
        if any(c.base < 0 for c in self.blocks.values()) or any(v < 0 for v in self.controller.values()):
            raise ConfigurationError(f"{self.timing_class.value}: negative cycle constant")

    def cost(self, opcode: Opcode) -> BlockCost:
        return self.blocks[opcode]

    def controller_cycles(self, operation: Operation) -> int:
        try:
            return self.controller[operation]
        except KeyError:
            raise ConfigurationError(
                f"{self.timing_class.value}: no controller constant for {operation.value}"
            ) from None

    @classmethod
    def from_dict(cls, data: dict) -> "BlockTiming":
        try:
            tclass = TimingClass(data["name"])
            blocks = {}
            for key, entry in data["blocks"].items():
                blocks[Opcode(key)] = BlockCost(int(entry["base"]), MemoryMode(entry.get("memory", "exposed")))
            controller = {Operation(k): int(v) for k, v in data.get("controller", {}).items()}
        except KeyError as exc:
            raise ConfigurationError(f"timing table missing {exc}") from None
        except ValueError as exc:
            raise ConfigurationError(f"bad timing table: {exc}") from None
        return cls(
            timing_class=tclass,
            blocks=blocks,
            controller=controller,
            polymul_cycles=int(data.get("polymul_cycles", POLYMUL_CYCLES)),
            keccak_block_cycles=int(data.get("keccak_block_cycles", KECCAK_BLOCK_CYCLES)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "BlockTiming":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))


_CACHE: dict[TimingClass, BlockTiming] = {}


def builtin_timing(tclass: TimingClass | str) -> BlockTiming:
    tclass = TimingClass(tclass)
    if tclass not in _CACHE:
        _CACHE[tclass] = BlockTiming.load(TIMING_DIR / f"{tclass.value.lower()}.toml")
    return _CACHE[tclass]


def polymul_cycles(count: int, wrapper: int = 0, per_product: int = POLYMUL_CYCLES) -> int:
    """Multiplier cycles for ``count`` products plus the wrapper's fixed overhead."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return 0
    return per_product * count + wrapper


def keccak_cycles(bits_squeezed: int, absorb_blocks: int = 0, per_block: int = KECCAK_BLOCK_CYCLES) -> int:
    """Sponge cycles: one permutation per 1344 squeezed bits and per extra absorbed block."""
    if bits_squeezed < 0 or absorb_blocks < 0:
        raise ValueError("bit and block counts must be non-negative")
    return per_block * (-(-bits_squeezed // KECCAK_BLOCK_BITS) + absorb_blocks)
