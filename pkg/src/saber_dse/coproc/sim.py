"""Transaction-level simulator of the SABER coprocessor.

The FSM fetches one instruction at a time, activates a building block, and
charges the block's cycles to a :class:`CycleLedger`. Every block really
computes its result through the memory image, so outputs can be compared
byte-for-byte with the golden model in :mod:`saber_dse.kem`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import keccak
from ..kem import cbd_sample, cmov, verify
from ..memsys import (
    Access,
    AccessRequest,
    MemImage,
    MemoryConfig,
    PortType,
    SharedShiftBuffer,
    copy_stream,
    schedule,
    sequential_stream,
)
from ..params import SABER, SaberParams
from ..poly import pack_poly, poly_mul, unpack_poly
from .isa import Instruction, Opcode, Operation, Program
from .timing import BlockTiming, MemoryMode

WORD_BYTES = 8

# reference memory for "hidden" streams: what the datapath overlap was designed around
IDEAL_MEMORY = MemoryConfig("ideal", PortType.DUAL, 1, 1024, 64, False)

# shift-buffer width each streaming block uses
BUFFER_WIDTHS = {
    Opcode.VVMUL: 676,
    Opcode.ADDPACK: 320,
    Opcode.BS2POLVECP: 320,
    Opcode.ADDROUND: 64,
}


class ContractError(ValueError):
    """Program inputs do not match the program's declared regions."""


@dataclass
class LedgerEntry:
    index: int
    instruction: str
    opcode: Opcode
    base: int
    compute: int
    memory: int

    @property
    def cycles(self) -> int:
        return self.base + self.compute + self.memory


@dataclass
class CycleLedger:
    operation: str = ""
    architecture: str = ""
    entries: list[LedgerEntry] = field(default_factory=list)

    def add(self, entry: LedgerEntry) -> None:
        if entry.cycles < 0:
            raise ValueError("negative cycle charge")
        self.entries.append(entry)

    @property
    def total(self) -> int:
        return sum(e.cycles for e in self.entries)

    def per_opcode(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[e.opcode.value] = out.get(e.opcode.value, 0) + e.cycles
        return out

    def cycles_of(self, opcode: Opcode) -> list[int]:
        """Charges of every instance of ``opcode``, in program order."""
        return [e.cycles for e in self.entries if e.opcode is opcode]

    def format(self) -> str:
        lines = [f"{self.operation} on {self.architecture}"]
        for e in self.entries:
            lines.append(
                f"  {e.index:3d} {e.instruction:<44} base={e.base:<4d} compute={e.compute:<5d}"
                f" mem={e.memory:<4d} total={e.cycles}"
            )
        lines.append("  per block:")
        for name, cycles in sorted(self.per_opcode().items()):
            lines.append(f"    {name:<12} {cycles}")
        lines.append(f"  total cycles: {self.total}")
        return "\n".join(lines)


_STALL_CACHE: dict = {}


def _stream_cycles(stream_key, build: Callable[[MemoryConfig], list], cfg: MemoryConfig, mode: MemoryMode) -> int:
    key = (stream_key, cfg, mode)
    if key not in _STALL_CACHE:
        cycles = schedule(build(cfg), cfg).cycles
        if mode is MemoryMode.HIDDEN:
            cycles = max(0, cycles - schedule(build(IDEAL_MEMORY), IDEAL_MEMORY).cycles)
        _STALL_CACHE[key] = cycles
    return _STALL_CACHE[key]


class Coprocessor:
    """Memory image, shift buffer, comparison flag and the block implementations."""

    def __init__(self, memory: MemoryConfig, timing: BlockTiming, params: SaberParams = SABER):
        self.cfg = memory
        self.timing = timing
        self.params = params
        self.mem = MemImage(memory)
        self.buffer = SharedShiftBuffer()
        self.flag = 0
        p = params
        self.poly_words = p.poly_bytes // WORD_BYTES
        self.ppoly_words = p.N * p.eps_p // 8 // WORD_BYTES
        self.msg_words = p.N // 8 // WORD_BYTES
        self.cm_words = p.scale_bytes // WORD_BYTES
        self.coin_words = p.coin_bytes // WORD_BYTES

    # memory helpers -------------------------------------------------------
    def load(self, addr: int, data: bytes) -> None:
        self.mem.write_bytes(addr, data)

    def dump(self, addr: int, words: int) -> bytes:
        return self.mem.read_bytes(addr, words)

    def _poly(self, addr: int, eps: int = 13) -> np.ndarray:
        words = self.poly_words if eps == 13 else self.params.N * eps // 64
        return unpack_poly(self.mem.read_bytes(addr, words), eps)

    def _through_buffer(self, block: Opcode, coeffs: np.ndarray, bits: int) -> np.ndarray:
        """Stream coefficients serially through the shared shift register."""
        width = BUFFER_WIDTHS[block]
        per_chunk = width // bits
        tag = block.value
        mask = (1 << bits) - 1
        out = np.empty_like(coeffs)
        self.buffer.acquire(tag)
        try:
            for start in range(0, len(coeffs), per_chunk):
                chunk = coeffs[start:start + per_chunk]
                for c in chunk:
                    self.buffer.shift(bits, int(c), tag)
                word = self.buffer.drain(tag)
                for k in range(len(chunk)):
                    out[start + k] = (word >> (k * bits)) & mask
        finally:
            self.buffer.release(tag)
        return out

    # blocks ---------------------------------------------------------------
    def _hash(self, ins: Instruction, rate: int, suffix: int, out_words: int) -> int:
        sponge = keccak.SpongeState(rate, suffix).absorb(self.mem.read_bytes(ins.src, ins.length))
        self.mem.write_bytes(ins.dst, sponge.squeeze(out_words * WORD_BYTES))
        return sponge.permutations

    def execute(self, ins: Instruction) -> tuple[int, int, int]:
        """Run one instruction; return its (base, compute, memory) cycle split."""
        op = ins.opcode
        cost = self.timing.cost(op)
        p = self.params
        units_cycles = 0
        pw, vw = self.poly_words, self.ppoly_words
        l = p.l

        if op is Opcode.SHAKE128:
            out_words = ins.arg("out", ins.length)
            perms = self._hash(ins, keccak.SHAKE128_RATE, 0x1F, out_words)
            units_cycles = perms * self.timing.keccak_block_cycles
            build = lambda c: sequential_stream("keccak", range(ins.src, ins.src + ins.length),
                                                range(ins.dst, ins.dst + out_words))
        elif op in (Opcode.SHA3_256, Opcode.SHA3_512):
            rate, out_words = (keccak.SHA3_256_RATE, 4) if op is Opcode.SHA3_256 else (keccak.SHA3_512_RATE, 8)
            perms = self._hash(ins, rate, 0x06, out_words)
            units_cycles = perms * self.timing.keccak_block_cycles
            build = lambda c: sequential_stream("keccak", range(ins.src, ins.src + ins.length),
                                                range(ins.dst, ins.dst + out_words))
        elif op is Opcode.GEN_MATRIX:
            out_words = l * l * pw
            sponge = keccak.shake128_sponge(self.mem.read_bytes(ins.src, 4))
            self.mem.write_bytes(ins.dst, sponge.squeeze(out_words * WORD_BYTES))
            units_cycles = sponge.permutations * self.timing.keccak_block_cycles
            build = lambda c: sequential_stream("keccak", range(ins.src, ins.src + 4),
                                                range(ins.dst, ins.dst + out_words))
        elif op is Opcode.CBD_SAMPLE:
            coins = self.mem.read_bytes(ins.src, self.coin_words)
            s = cbd_sample(coins, p)
            self.mem.write_bytes(ins.dst, b"".join(pack_poly(x, p.eps_q) for x in s))
            # the sampler consumes each coin word before asking for the next
            build = lambda c: [
                AccessRequest(Access.READ, a, "sampler", dependent=True)
                for a in range(ins.src, ins.src + self.coin_words)
            ] + [
                AccessRequest(Access.WRITE, a, "sampler", dependent=True)
                for a in range(ins.dst, ins.dst + l * pw)
            ]
        elif op is Opcode.VVMUL:
            a0, b0 = ins.src, ins.arg("b")
            stride = ins.arg("stride", pw)
            a_polys = [self._poly(a0 + j * stride) for j in range(l)]
            b_polys = [self._poly(b0 + j * pw) for j in range(l)]
            acc = np.zeros(p.N, dtype=np.int64)
            for a, b in zip(a_polys, b_polys):
                acc = (acc + poly_mul(a, b, p.eps_q)) & ((1 << p.eps_q) - 1)
            acc = self._through_buffer(op, acc, p.eps_q)
            self.mem.write_bytes(ins.dst, pack_poly(acc, p.eps_q))
            units_cycles = l * self.timing.polymul_cycles
            reads = [a for j in range(l) for a in list(range(a0 + j * stride, a0 + j * stride + pw))
                     + list(range(b0 + j * pw, b0 + (j + 1) * pw))]
            build = lambda c: sequential_stream("multiplier", reads, range(ins.dst, ins.dst + pw))
        elif op is Opcode.ADDROUND:
            stride = ins.arg("stride", pw)
            chunks = []
            for i in range(l):
                rounded = ((self._poly(ins.src + i * stride) + p.h1) >> (p.eps_q - p.eps_p)) & ((1 << p.eps_p) - 1)
                chunks.append(pack_poly(self._through_buffer(op, rounded, p.eps_p), p.eps_p))
            self.mem.write_bytes(ins.dst, b"".join(chunks))
            reads = [a for i in range(l) for a in range(ins.src + i * stride, ins.src + i * stride + pw)]
            build = lambda c: sequential_stream("addround", reads, range(ins.dst, ins.dst + l * vw))
        elif op is Opcode.BS2POLVECP:
            chunks = []
            for i in range(l):
                poly = unpack_poly(self.mem.read_bytes(ins.src + i * vw, vw), p.eps_p)
                chunks.append(pack_poly(self._through_buffer(op, poly, p.eps_p), p.eps_q))
            self.mem.write_bytes(ins.dst, b"".join(chunks))
            build = lambda c: sequential_stream("bs2polvecp", range(ins.src, ins.src + l * vw),
                                                range(ins.dst, ins.dst + l * pw))
        elif op is Opcode.ADDPACK:
            m_addr = ins.arg("m")
            v = self._poly(ins.src) & ((1 << p.eps_p) - 1)
            m_bits = unpack_poly(self.mem.read_bytes(m_addr, self.msg_words), 1)
            c_m = ((v + p.h1 - (m_bits << (p.eps_p - 1))) & ((1 << p.eps_p) - 1)) >> (p.eps_p - p.eps_t)
            c_m = self._through_buffer(op, c_m, p.eps_t)
            self.mem.write_bytes(ins.dst, pack_poly(c_m, p.eps_t))
            reads = list(range(ins.src, ins.src + pw)) + list(range(m_addr, m_addr + self.msg_words))
            build = lambda c: sequential_stream("addpack", reads, range(ins.dst, ins.dst + self.cm_words))
        elif op is Opcode.UNPACK:
            cm_addr = ins.arg("cm")
            v = self._poly(ins.src) & ((1 << p.eps_p) - 1)
            c_m = unpack_poly(self.mem.read_bytes(cm_addr, self.cm_words), p.eps_t)
            bits = ((v + p.h2 - (c_m << (p.eps_p - p.eps_t))) & ((1 << p.eps_p) - 1)) >> (p.eps_p - 1)
            self.mem.write_bytes(ins.dst, pack_poly(bits, 1))
            reads = list(range(ins.src, ins.src + pw)) + list(range(cm_addr, cm_addr + self.cm_words))
            build = lambda c: sequential_stream("unpack", reads, range(ins.dst, ins.dst + self.msg_words))
        elif op is Opcode.COPYWORDS:
            self.mem.write_bytes(ins.dst, self.mem.read_bytes(ins.src, ins.length))
            build = lambda c: copy_stream("copywords", ins.src, ins.dst, ins.length, c)
        elif op is Opcode.VERIFY:
            self.flag = verify(self.mem.read_bytes(ins.dst, ins.length), self.mem.read_bytes(ins.src, ins.length))
            reads = [a for k in range(ins.length) for a in (ins.dst + k, ins.src + k)]
            build = lambda c: sequential_stream("verify", reads)
        elif op is Opcode.CMOV:
            merged = cmov(self.mem.read_bytes(ins.dst, ins.length), self.mem.read_bytes(ins.src, ins.length), self.flag)
            self.mem.write_bytes(ins.dst, merged)
            reads = [a for k in range(ins.length) for a in (ins.dst + k, ins.src + k)]
            build = lambda c: sequential_stream("cmov", reads, range(ins.dst, ins.dst + ins.length))
        elif op is Opcode.HALT:
            return cost.base, 0, 0
        else:  # pragma: no cover
            raise NotImplementedError(op)

        stream_key = (op, ins.dst, ins.src, ins.length, ins.args, self.params.name)
        memory = _stream_cycles(stream_key, build, self.cfg, cost.memory)
        return cost.base, units_cycles, memory


def exec_instruction(ins: Instruction, state: Coprocessor) -> int:
    """Execute one instruction on ``state`` and return the cycles it costs."""
    return sum(state.execute(ins))


def run_program(program: Program, arch, inputs: dict[str, bytes],
                params: SaberParams = SABER) -> tuple[dict[str, bytes], CycleLedger]:
    """Load ``inputs``, run ``program`` to HALT and read back its outputs.

    ``arch`` is anything with ``name``, ``memory`` (a MemoryConfig) and
    ``timing`` (a BlockTiming), normally an ArchitectureProfile.
    """
    expected = set(program.inputs)
    if set(inputs) != expected:
        raise ContractError(f"{program.label} expects inputs {sorted(expected)}, got {sorted(inputs)}")
    core = Coprocessor(arch.memory, arch.timing, params)
    for name, region in program.inputs.items():
        data = inputs[name]
        if len(data) != region.words * WORD_BYTES:
            raise ContractError(f"input {name} must be {region.words * WORD_BYTES} bytes, got {len(data)}")
        core.load(region.addr, data)

    ledger = CycleLedger(operation=program.label, architecture=arch.name)
    for idx, ins in enumerate(program.instructions):
        base, compute, memory = core.execute(ins)
        if ins.opcode is Opcode.HALT:
            base += arch.timing.controller_cycles(program.operation)
        ledger.add(LedgerEntry(idx, str(ins), ins.opcode, base, compute, memory))
    outputs = {name: core.dump(r.addr, r.words) for name, r in program.outputs.items()}
    return outputs, ledger


def simulate(operation: Operation | str, arch, inputs: dict[str, bytes],
             program: Program | None = None) -> tuple[dict[str, bytes], CycleLedger]:
    from .isa import builtin_program

    op = Operation(operation) if isinstance(operation, str) else operation
    return run_program(program or builtin_program(op), arch, inputs)
