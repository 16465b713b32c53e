"""Instruction-driven, cycle-accounted model of the SABER coprocessor."""

from .isa import Instruction, Opcode, Operation, Program, builtin_program, load_program, parse_program
from .sim import Coprocessor, CycleLedger, exec_instruction, run_program, simulate
from .timing import BlockTiming, TimingClass, builtin_timing, keccak_cycles, polymul_cycles

__all__ = [
    "BlockTiming",
    "Coprocessor",
    "CycleLedger",
    "Instruction",
    "Opcode",
    "Operation",
    "Program",
    "TimingClass",
    "builtin_program",
    "builtin_timing",
    "exec_instruction",
    "keccak_cycles",
    "load_program",
    "parse_program",
    "polymul_cycles",
    "run_program",
    "simulate",
]
