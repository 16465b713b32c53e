"""Coprocessor instruction set and the ``.sasm`` program text format.

One instruction per line::

    OPCODE dst src len [key=value ...]   # comment

Addresses and lengths count 64-bit words. Directives start with a dot:
``.program keygen``, ``.input name addr words`` and ``.output name addr words``
declare the operation and the memory regions the host loads and reads back.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from ..memsys import LOGICAL_WORDS
from ..params import FormatError


class Opcode(enum.Enum):
    GEN_MATRIX = "GEN_MATRIX"
    SHA3_256 = "SHA3_256"
    SHA3_512 = "SHA3_512"
    SHAKE128 = "SHAKE128"
    CBD_SAMPLE = "CBD_SAMPLE"
    VVMUL = "VVMUL"
    ADDROUND = "ADDROUND"
    ADDPACK = "ADDPACK"
    BS2POLVECP = "BS2POLVECP"
    UNPACK = "UNPACK"
    COPYWORDS = "COPYWORDS"
    VERIFY = "VERIFY"
    CMOV = "CMOV"
    HALT = "HALT"


class Operation(enum.Enum):
    KEYGEN = "keygen"
    ENCAPS = "encaps"
    DECAPS = "decaps"

    @property
    def label(self) -> str:
        return {"keygen": "KeyGen", "encaps": "Encaps", "decaps": "Decaps"}[self.value]


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    dst: int = 0
    src: int = 0
    length: int = 0
    args: tuple[tuple[str, int], ...] = ()
    line: int = 0

    def __post_init__(self):
        for name, value in (("dst", self.dst), ("src", self.src)):
            if not 0 <= value < LOGICAL_WORDS:
                raise FormatError(f"line {self.line}: {name} address {value} outside memory")
        if self.length < 0 or self.src + self.length > LOGICAL_WORDS:
            raise FormatError(f"line {self.line}: length {self.length} runs past memory")
        for key, value in self.args:
            if not 0 <= value < LOGICAL_WORDS:
                raise FormatError(f"line {self.line}: {key}={value} outside memory")

    def arg(self, key: str, default: int | None = None) -> int:
        for k, v in self.args:
            if k == key:
                return v
        if default is None:
            raise FormatError(f"line {self.line}: {self.opcode.value} needs {key}=")
        return default

    def __str__(self) -> str:
        extra = "".join(f" {k}={v}" for k, v in self.args)
        return f"{self.opcode.value} {self.dst} {self.src} {self.length}{extra}"


@dataclass(frozen=True)
class Region:
    name: str
    addr: int
    words: int

    @property
    def end(self) -> int:
        return self.addr + self.words


@dataclass
class Program:
    operation: Operation
    instructions: list[Instruction]
    inputs: dict[str, Region] = field(default_factory=dict)
    outputs: dict[str, Region] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if not self.instructions or self.instructions[-1].opcode is not Opcode.HALT:
            raise FormatError(f"program {self.name or self.operation.value} must end with HALT")
        if any(ins.opcode is Opcode.HALT for ins in self.instructions[:-1]):
            raise FormatError("HALT may only appear as the last instruction")
        for region in list(self.inputs.values()) + list(self.outputs.values()):
            if region.addr < 0 or region.end > LOGICAL_WORDS:
                raise FormatError(f"region {region.name} outside memory")

    @property
    def label(self) -> str:
        return self.operation.label

    def __len__(self) -> int:
        return len(self.instructions)


def _int(token: str, lineno: int) -> int:
    try:
        return int(token, 0)
    except ValueError:
        raise FormatError(f"line {lineno}: expected an integer, got {token!r}") from None


def parse_program(text: str, name: str = "") -> Program:
    operation = None
    inputs: dict[str, Region] = {}
    outputs: dict[str, Region] = {}
    instructions: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head.startswith("."):
            if head == ".program":
                if len(tokens) != 2:
                    raise FormatError(f"line {lineno}: .program takes one name")
                try:
                    operation = Operation(tokens[1].lower())
                except ValueError:
                    raise FormatError(f"line {lineno}: unknown operation {tokens[1]!r}") from None
            elif head in (".input", ".output"):
                if len(tokens) != 4:
                    raise FormatError(f"line {lineno}: {head} takes name, address and word count")
                region = Region(tokens[1], _int(tokens[2], lineno), _int(tokens[3], lineno))
                (inputs if head == ".input" else outputs)[region.name] = region
            else:
                raise FormatError(f"line {lineno}: unknown directive {head}")
            continue

        try:
            opcode = Opcode(head.upper())
        except ValueError:
            raise FormatError(f"line {lineno}: unknown opcode {head!r}") from None
        positional = [t for t in tokens[1:] if "=" not in t]
        keyed = [t for t in tokens[1:] if "=" in t]
        if len(positional) > 3:
            raise FormatError(f"line {lineno}: at most three positional operands")
        values = [_int(t, lineno) for t in positional] + [0] * (3 - len(positional))
        args = []
        for tok in keyed:
            key, _, value = tok.partition("=")
            args.append((key, _int(value, lineno)))
        instructions.append(
            Instruction(opcode, values[0], values[1], values[2], tuple(args), line=lineno)
        )

    if operation is None:
        raise FormatError("program lacks a .program directive")
    return Program(operation, instructions, inputs, outputs, name=name)


def load_program(path: str | Path) -> Program:
    path = Path(path)
    return parse_program(path.read_text(), name=path.stem)


PROGRAM_DIR = Path(__file__).resolve().parent.parent / "data" / "programs"


def builtin_program(operation: Operation | str) -> Program:
    op = Operation(operation) if isinstance(operation, str) else operation
    return load_program(PROGRAM_DIR / f"{op.value}.sasm")
