"""Data-memory subsystem: geometry, address mapping, port timing and the shift buffer.

A geometry ``i(m x n)`` is ``i`` compiled instances of ``m`` rows by ``n`` bits.
A 64-bit logical word is striped across ``64/n`` instances that share a row;
when the instances outnumber one stripe, the remaining stripes extend the
address space in depth (DP_8 and PIP_SP_4 do this).
"""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LOGICAL_WORDS = 1024
WORD_BITS = 64
CAPACITY_BITS = LOGICAL_WORDS * WORD_BITS

# blocks whose read data passes through the output pipeline register
PIPELINED_READERS = frozenset({"sampler"})


class MemoryError_(Exception):
    pass


class AddressError(MemoryError_, IndexError):
    pass


class MemoryConfigError(MemoryError_, ValueError):
    pass


class BufferExclusivityError(RuntimeError):
    """Two blocks tried to own the shared shift buffer at once."""


class PortType(enum.Enum):
    DUAL = "dual"
    SINGLE = "single"


@dataclass(frozen=True)
class MemoryConfig:
    name: str
    port_type: PortType
    instances: int
    depth: int
    width: int
    pipelined: bool = False

    def __post_init__(self):
        if self.width <= 0 or WORD_BITS % self.width:
            raise MemoryConfigError(f"{self.name}: width {self.width} must divide {WORD_BITS}")
        if self.instances % self.stripe:
            raise MemoryConfigError(f"{self.name}: {self.instances} instances do not form whole stripes")
        if self.stripes * self.depth != LOGICAL_WORDS:
            raise MemoryConfigError(
                f"{self.name}: geometry holds {self.stripes * self.depth} words, need {LOGICAL_WORDS}"
            )

    @property
    def stripe(self) -> int:
        """Instances that together hold one 64-bit word."""
        return WORD_BITS // self.width

    @property
    def stripes(self) -> int:
        return self.instances // self.stripe

    @property
    def capacity_bits(self) -> int:
        return self.instances * self.depth * self.width

    @property
    def geometry(self) -> str:
        return f"{self.instances}({self.depth}x{self.width})"

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryConfig":
        try:
            return cls(
                name=d["name"],
                port_type=PortType(d["port_type"]),
                instances=int(d["instances"]),
                depth=int(d["depth"]),
                width=int(d["width"]),
                pipelined=bool(d.get("pipelined", False)),
            )
        except KeyError as exc:
            raise MemoryConfigError(f"memory config missing field {exc}") from None
        except ValueError as exc:
            raise MemoryConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "MemoryConfig":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        return cls.from_dict(data.get("memory", data))


@dataclass(frozen=True)
class Placement:
    addr: int
    row: int
    slices: tuple[tuple[int, int, int], ...]
    """(instance, low bit, high bit) for each piece of the word, LSB first."""

    @property
    def instances(self) -> tuple[int, ...]:
        return tuple(s[0] for s in self.slices)


@lru_cache(maxsize=None)
def map_logical(addr: int, cfg: MemoryConfig) -> Placement:
    if not 0 <= addr < LOGICAL_WORDS:
        raise AddressError(f"logical address {addr} outside 0..{LOGICAL_WORDS - 1}")
    stripe_idx, row = divmod(addr, cfg.depth)
    first = stripe_idx * cfg.stripe
    slices = tuple(
        (first + k, k * cfg.width, (k + 1) * cfg.width - 1) for k in range(cfg.stripe)
    )
    return Placement(addr=addr, row=row, slices=slices)


class MemImage:
    """Contents of every physical instance, addressed through logical words."""

    def __init__(self, cfg: MemoryConfig):
        self.cfg = cfg
        self.banks = [np.zeros(cfg.depth, dtype=np.uint64) for _ in range(cfg.instances)]
        self._placements = [map_logical(a, cfg) for a in range(LOGICAL_WORDS)]
        self._mask = np.uint64((1 << cfg.width) - 1)

    def read_word(self, addr: int) -> int:
        if not 0 <= addr < LOGICAL_WORDS:
            raise AddressError(f"read from {addr}")
        pl = self._placements[addr]
        value = 0
        for inst, lo, _ in pl.slices:
            value |= int(self.banks[inst][pl.row]) << lo
        return value

    def write_word(self, addr: int, value: int) -> None:
        if not 0 <= addr < LOGICAL_WORDS:
            raise AddressError(f"write to {addr}")
        pl = self._placements[addr]
        for inst, lo, _ in pl.slices:
            self.banks[inst][pl.row] = np.uint64((value >> lo) & int(self._mask))

    def read_bytes(self, addr: int, n_words: int) -> bytes:
        self._check_range(addr, n_words)
        return b"".join(self.read_word(a).to_bytes(8, "little") for a in range(addr, addr + n_words))

    def write_bytes(self, addr: int, data: bytes) -> None:
        if len(data) % 8:
            raise ValueError("data must be a whole number of 64-bit words")
        self._check_range(addr, len(data) // 8)
        for k in range(len(data) // 8):
            self.write_word(addr + k, int.from_bytes(data[8 * k:8 * k + 8], "little"))

    @staticmethod
    def _check_range(addr: int, n_words: int) -> None:
        if addr < 0 or n_words < 0 or addr + n_words > LOGICAL_WORDS:
            raise AddressError(f"word range {addr}..{addr + n_words - 1} outside memory")


class Access(enum.Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class AccessRequest:
    kind: Access
    addr: int
    block: str = "host"
    width: int = WORD_BITS
    data: int | None = None
    dependent: bool = False
    """The issuer waits for all earlier read data before sending this request."""

    def __post_init__(self):
        if not 0 < self.width <= WORD_BITS:
            raise ValueError(f"access width {self.width} outside 1..{WORD_BITS}")
        if not 0 <= self.addr < LOGICAL_WORDS:
            raise AddressError(f"request address {self.addr} outside memory")


Bundle = Sequence[AccessRequest]
Stream = Iterable[Union[AccessRequest, Bundle]]


@dataclass
class ScheduleResult:
    cycles: int
    data: list[int | None]
    issue: list[int]
    ready: list[int]
    """Per request, in stream order: issue cycle and cycle its data is valid/committed."""


def _bundle_cycles(bundle: Bundle, cfg: MemoryConfig) -> int:
    per_inst: dict[int, list[int]] = {}
    for req in bundle:
        for inst in map_logical(req.addr, cfg).instances:
            counts = per_inst.setdefault(inst, [0, 0])
            counts[0 if req.kind is Access.READ else 1] += 1
    if not per_inst:
        return 0
    if cfg.port_type is PortType.DUAL:
        return max(max(r, w) for r, w in per_inst.values())
    return max(r + w for r, w in per_inst.values())


def schedule(stream: Stream, cfg: MemoryConfig, image: MemImage | None = None) -> ScheduleResult:
    """Issue a request stream in order and count memory cycles.

    Requests grouped in a tuple/list are offered in the same cycle. Per instance,
    a dual-port memory serves one read and one write per cycle; a single-port
    memory serializes them (reads first). Reads issued by a block behind the
    pipeline register return one cycle later, which lengthens the stream by one
    cycle unless the issuer waits on that data.
    """
    t = 0
    last_ready = 0
    data: list[int | None] = []
    issue: list[int] = []
    ready: list[int] = []
    for item in stream:
        bundle = (item,) if isinstance(item, AccessRequest) else tuple(item)
        if not bundle:
            continue
        if any(req.dependent for req in bundle):
            t = max(t, last_ready)
        span = _bundle_cycles(bundle, cfg)
        ordered = sorted(bundle, key=lambda r: r.kind is not Access.READ)
        for req in ordered:
            if req.kind is Access.READ:
                latency = 1 if (cfg.pipelined and req.block in PIPELINED_READERS) else 0
                done = t + span + latency
                data.append(image.read_word(req.addr) if image is not None else None)
            else:
                done = t + span
                if image is not None:
                    if req.data is None:
                        raise ValueError(f"write to {req.addr} carries no data")
                    mask = (1 << req.width) - 1
                    old = image.read_word(req.addr)
                    image.write_word(req.addr, (old & ~mask) | (req.data & mask))
                data.append(None)
            issue.append(t)
            ready.append(done)
            last_ready = max(last_ready, done)
        t += span
    return ScheduleResult(cycles=max(t, last_ready), data=data, issue=issue, ready=ready)


class SharedShiftBuffer:
    """The single 676-bit serial register time-shared by the streaming blocks."""

    CAPACITY = 676

    def __init__(self):
        self.owner: str | None = None
        self.fill = 0
        self.bits = 0

    def acquire(self, block: str) -> None:
        if self.owner is not None:
            raise BufferExclusivityError(f"{block} requested the shift buffer while {self.owner} owns it")
        self.owner = block
        self.fill = 0
        self.bits = 0

    def shift(self, n_bits: int, value: int = 0, block: str | None = None) -> None:
        if self.owner is None or (block is not None and block != self.owner):
            raise BufferExclusivityError(f"shift by {block or 'unknown'} without ownership")
        if n_bits < 0 or self.fill + n_bits > self.CAPACITY:
            raise OverflowError(f"shift of {n_bits} bits overflows the {self.CAPACITY}-bit buffer")
        self.bits |= (value & ((1 << n_bits) - 1)) << self.fill
        self.fill += n_bits

    def drain(self, block: str) -> int:
        """Hand the accumulated bits to the owner's output side and empty the register."""
        if self.owner != block:
            raise BufferExclusivityError(f"{block} drained a buffer owned by {self.owner}")
        bits = self.bits
        self.fill = 0
        self.bits = 0
        return bits

    def release(self, block: str) -> None:
        if self.owner != block:
            raise BufferExclusivityError(f"{block} released a buffer owned by {self.owner}")
        self.owner = None
        self.fill = 0
        self.bits = 0


def sequential_stream(block: str, reads: Iterable[int] = (), writes: Iterable[int] = (),
                      dependent_reads: bool = False) -> list[AccessRequest]:
    """All reads one per cycle, then all writes one per cycle."""
    out = [AccessRequest(Access.READ, a, block, dependent=dependent_reads) for a in reads]
    out += [AccessRequest(Access.WRITE, a, block) for a in writes]
    return out


def copy_stream(block: str, src: int, dst: int, n: int, cfg: MemoryConfig) -> list:
    """Word copy: overlapped read/write on dual port, strictly alternating on single port."""
    if cfg.port_type is PortType.SINGLE:
        out: list = []
        for k in range(n):
            out.append(AccessRequest(Access.READ, src + k, block))
            out.append(AccessRequest(Access.WRITE, dst + k, block))
        return out
    out = []
    for k in range(n + 1):
        bundle = []
        if k < n:
            bundle.append(AccessRequest(Access.READ, src + k, block))
        if k > 0:
            bundle.append(AccessRequest(Access.WRITE, dst + k - 1, block))
        out.append(tuple(bundle))
    return out
