"""Design-space sweep over the memory/pipeline architectures.

Every (architecture, operation) pair is simulated, checked against the golden
model, turned into a latency with ``cycles / f_MHz`` and compared with the
published cycle and latency tables.
"""

from __future__ import annotations

import csv
import io
import os
import sys
from dataclasses import dataclass, field
from decimal import ROUND_FLOOR, Decimal
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kem
from .coproc.isa import Operation, builtin_program
from .coproc.sim import CycleLedger, run_program
from .coproc.timing import BlockTiming, TimingClass, builtin_timing
from .memsys import MemoryConfig
from .params import KEY_BYTES, SABER, SEED_BYTES, ConfigurationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DATA_DIR = Path(__file__).resolve().parent / "data"
PROFILE_ENV = "SABER_DSE_PROFILE_DIR"
SHIPPED = ("DP_1", "DP_2", "DP_4", "DP_8", "PIP_DP_4", "PIP_SP_4")
OPERATIONS = (Operation.KEYGEN, Operation.ENCAPS, Operation.DECAPS)


@dataclass(frozen=True)
class ArchitectureProfile:
    name: str
    memory: MemoryConfig
    timing_class: TimingClass
    freq_mhz: float
    timing: BlockTiming

    @classmethod
    def from_dict(cls, data: dict, timing: BlockTiming | None = None) -> "ArchitectureProfile":
        try:
            tclass = TimingClass(data["timing_class"])
            freq = float(data["freq_mhz"])
            memory = MemoryConfig.from_dict(data["memory"])
            name = data["name"]
        except KeyError as exc:
            raise ConfigurationError(f"profile missing field {exc}") from None
        except ValueError as exc:
            raise ConfigurationError(f"bad profile: {exc}") from None
        if freq <= 0:
            raise ConfigurationError(f"{name}: frequency must be positive")
        return cls(name, memory, tclass, freq, timing or builtin_timing(tclass))

    @classmethod
    def load(cls, path: str | Path) -> "ArchitectureProfile":
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"profile file {path} not found")
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        timing = None
        if "timing_file" in data:
            timing = BlockTiming.load(path.parent / data["timing_file"])
        return cls.from_dict(data, timing)


def profile_dir() -> Path:
    override = os.environ.get(PROFILE_ENV)
    return Path(override) if override else DATA_DIR / "profiles"


def load_profile(name_or_path: str | Path) -> ArchitectureProfile:
    """A shipped profile by name (case-insensitive) or any profile file by path."""
    candidate = Path(name_or_path)
    if candidate.suffix == ".toml":
        return ArchitectureProfile.load(candidate)
    path = profile_dir() / f"{str(name_or_path).lower()}.toml"
    if not path.is_file():
        raise ConfigurationError(f"unknown architecture {name_or_path!r} (looked for {path})")
    return ArchitectureProfile.load(path)


def shipped_profiles() -> list[ArchitectureProfile]:
    return [load_profile(name) for name in SHIPPED]


def load_expectations(path: str | Path | None = None) -> dict:
    with open(path or DATA_DIR / "expectations.toml", "rb") as fh:
        return tomllib.load(fh)


def latency(total_cycles: int, freq_mhz: float) -> float:
    """Microseconds for ``total_cycles`` at ``freq_mhz``."""
    if freq_mhz <= 0:
        raise ValueError("frequency must be positive")
    if total_cycles < 0:
        raise ValueError("cycle count must be non-negative")
    return total_cycles / freq_mhz


def truncate(value: float, decimals: int = 1) -> Decimal:
    """Round toward zero at ``decimals`` places, the convention of the published table."""
    return Decimal(repr(value)).quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_FLOOR)


def reported_latency(total_cycles: int, freq_mhz: float, decimals: int = 1) -> Decimal:
    return truncate(latency(total_cycles, freq_mhz), decimals)


# -- inputs -----------------------------------------------------------------

def random_inputs(operation: Operation, seed: int) -> tuple[dict[str, bytes], dict[str, bytes]]:
    """Program inputs drawn from ``seed`` and the golden-model outputs they must produce."""
    rng = np.random.default_rng(seed)
    random_a, seed_s, z = (rng.bytes(SEED_BYTES) for _ in range(3))
    pk, sk = kem.kem_keygen(random_a, seed_s, z, SABER)
    if operation is Operation.KEYGEN:
        return {"random_a": random_a, "seed_s": seed_s, "z": z}, {"pk": pk.to_bytes(), "sk": sk.to_bytes()}
    m_seed = rng.bytes(KEY_BYTES)
    ct, ss = kem.kem_encaps(pk, m_seed, SABER)
    if operation is Operation.ENCAPS:
        return {"pk": pk.to_bytes(), "m_seed": m_seed}, {"ct": ct.to_bytes(), "ss": ss}
    # every third decapsulation gets a tampered ciphertext to exercise rejection
    ct_bytes = bytearray(ct.to_bytes())
    if seed % 3 == 2:
        ct_bytes[rng.integers(len(ct_bytes))] ^= 1 << int(rng.integers(8))
    ss_ref = kem.kem_decaps(sk, kem.Ciphertext.from_bytes(bytes(ct_bytes), SABER), SABER)
    return {"sk": sk.to_bytes(), "ct": bytes(ct_bytes)}, {"ss": ss_ref}


# -- report -----------------------------------------------------------------

@dataclass
class DseRow:
    architecture: str
    operation: str
    cycles: int
    freq_mhz: float
    outputs_match: bool
    cycles_stable: bool
    expected_cycles: int | None = None
    expected_latency: str | None = None
    ledger: CycleLedger | None = field(default=None, repr=False)

    @property
    def latency_us(self) -> float:
        return latency(self.cycles, self.freq_mhz)

    @property
    def latency_reported(self) -> Decimal:
        return truncate(self.latency_us, 1)

    @property
    def cycle_delta(self) -> int | None:
        return None if self.expected_cycles is None else self.cycles - self.expected_cycles

    @property
    def latency_delta(self) -> float | None:
        if self.expected_latency is None:
            return None
        return float(self.latency_reported - Decimal(self.expected_latency))

    @property
    def latency_matches(self) -> bool | None:
        """Computed latency, truncated to the printed precision, equals the printed value."""
        if self.expected_latency is None:
            return None
        printed = Decimal(self.expected_latency)
        return truncate(self.latency_us, -printed.as_tuple().exponent) == printed


@dataclass
class DseReport:
    rows: list[DseRow] = field(default_factory=list)

    COLUMNS = ("architecture", "operation", "cycles", "expected_cycles", "cycle_delta", "freq_mhz",
               "latency_us", "latency_reported", "expected_latency", "latency_delta", "outputs_match")

    def _values(self, row: DseRow) -> list:
        def fmt(v):
            return "" if v is None else v
        return [row.architecture, row.operation, row.cycles, fmt(row.expected_cycles), fmt(row.cycle_delta),
                f"{row.freq_mhz:g}", f"{row.latency_us:.4f}", str(row.latency_reported),
                fmt(row.expected_latency),
                "" if row.latency_delta is None else f"{row.latency_delta:+.2f}", row.outputs_match]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for row in self.rows:
            writer.writerow(self._values(row))
        return buf.getvalue()

    def to_text(self) -> str:
        table = [list(self.COLUMNS)] + [[str(v) for v in self._values(r)] for r in self.rows]
        widths = [max(len(line[i]) for line in table) for i in range(len(self.COLUMNS))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in table) + "\n"

    def cycles(self, architecture: str, operation: str) -> int:
        for row in self.rows:
            if row.architecture == architecture and row.operation == operation:
                return row.cycles
        raise KeyError((architecture, operation))


def sweep(profiles: Sequence[ArchitectureProfile] | None = None,
          operations: Iterable[Operation | str] | None = None,
          seeds: Sequence[int] = (0,),
          expectations: dict | None = None) -> DseReport:
    """Simulate every (profile, operation) pair for each seed."""
    profiles = list(profiles) if profiles is not None else shipped_profiles()
    if not profiles:
        raise ConfigurationError("sweep needs at least one profile")
    ops = [Operation(o) if isinstance(o, str) else o for o in (operations or OPERATIONS)]
    if not seeds:
        raise ConfigurationError("sweep needs at least one seed")
    exp = expectations if expectations is not None else load_expectations()
    programs = {op: builtin_program(op) for op in ops}
    cases = {op: [random_inputs(op, s) for s in seeds] for op in ops}

    report = DseReport()
    for prof in profiles:
        for op in ops:
            totals = set()
            match = True
            ledger = None
            for inputs, golden in cases[op]:
                outputs, ledger = run_program(programs[op], prof, inputs)
                totals.add(ledger.total)
                match = match and all(outputs[k] == v for k, v in golden.items())
            report.rows.append(DseRow(
                architecture=prof.name,
                operation=op.value,
                cycles=ledger.total,
                freq_mhz=prof.freq_mhz,
                outputs_match=match,
                cycles_stable=len(totals) == 1,
                expected_cycles=exp.get("cycles", {}).get(prof.name, {}).get(op.value),
                expected_latency=exp.get("latency_us", {}).get(prof.name, {}).get(op.value),
                ledger=ledger,
            ))
    return report


@dataclass(frozen=True)
class Discrepancy:
    architecture: str
    operation: str
    kind: str
    expected: str
    actual: str
    known: bool = False

    def __str__(self) -> str:
        tag = " (known)" if self.known else ""
        return f"{self.architecture} {self.operation} {self.kind}: expected {self.expected}, got {self.actual}{tag}"


def compare_to_reference(report: DseReport, expectations: dict | None = None) -> list[Discrepancy]:
    """Cycle mismatches (tolerance 0), latency mismatches at printed precision, and functional faults."""
    exp = expectations if expectations is not None else load_expectations()
    known = {(k["architecture"], k["operation"], k["kind"]) for k in exp.get("known_flags", [])}
    out = []
    for row in report.rows:
        def flag(kind, expected, actual):
            out.append(Discrepancy(row.architecture, row.operation, kind, str(expected), str(actual),
                                   (row.architecture, row.operation, kind) in known))
        cyc = exp.get("cycles", {}).get(row.architecture, {}).get(row.operation)
        if cyc is not None and row.cycles != cyc:
            flag("cycles", cyc, row.cycles)
        lat = exp.get("latency_us", {}).get(row.architecture, {}).get(row.operation)
        if lat is not None:
            printed = Decimal(lat)
            computed = truncate(latency(row.cycles, row.freq_mhz), -printed.as_tuple().exponent)
            if computed != printed:
                flag("latency", lat, computed)
        if not row.outputs_match:
            flag("outputs", "golden-model bytes", "mismatch")
        if not row.cycles_stable:
            flag("cycles", "input-independent total", "varies with inputs")
    return out


def unexpected(discrepancies: Iterable[Discrepancy]) -> list[Discrepancy]:
    return [d for d in discrepancies if not d.known]


def calibrate_controller(profile: ArchitectureProfile, operation: Operation | str, target: int,
                         seed: int = 0) -> int:
    """Controller constant that makes ``operation`` on ``profile`` total ``target`` cycles."""
    op = Operation(operation) if isinstance(operation, str) else operation
    inputs, _ = random_inputs(op, seed)
    _, ledger = run_program(builtin_program(op), profile, inputs)
    current = profile.timing.controller_cycles(op)
    residual = target - (ledger.total - current)
    if residual < 0:
        raise ConfigurationError(f"{profile.name} {op.value}: blocks already exceed {target} cycles")
    return residual


def fastest_is(report: DseReport, architecture: str = "PIP_SP_4") -> bool:
    """``architecture`` has the lowest (or tied) latency for every operation in the report."""
    for op in {r.operation for r in report.rows}:
        rows = [r for r in report.rows if r.operation == op]
        ref = [r for r in rows if r.architecture == architecture]
        if not ref or any(r.latency_us < ref[0].latency_us for r in rows):
            return False
    return True
