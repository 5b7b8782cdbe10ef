"""Instruction sets, assembler and disassembler.

Every instruction encodes to a fixed 4-byte word ``[opcode, op1, op2, op3]``
with unused operand bytes zero. Two ISAs are defined: the 12-instruction
custom FPGA CPU (``FPGA12``) and a 13-instruction ATmega328P subset
(``ATMEGA``; the 11 classification targets plus CPI and RJMP).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import AssemblyError, CorruptProgramError

REG = "REG"
IMM8 = "IMM8"  # unsigned 0..255
REL8 = "REL8"  # signed branch offset, stored two's complement


class ISA(str, Enum):
    FPGA12 = "FPGA12"
    ATMEGA = "ATMEGA"

    @property
    def register_count(self) -> int:
        return 8 if self is ISA.FPGA12 else 32


@dataclass(frozen=True)
class InstructionSpec:
    mnemonic: str
    isa: ISA
    opcode: int
    operands: tuple = ()
    semantics: str = ""


def _table(isa, rows):
    return {m: InstructionSpec(m, isa, op, tuple(ops), sem) for m, op, ops, sem in rows}


FPGA12_SPECS = _table(ISA.FPGA12, [
    ("LOAD", 0x01, (REG, REG, IMM8), "load"),
    ("STORE", 0x02, (REG, REG, IMM8), "store"),
    ("SET", 0x03, (REG, IMM8), "set"),
    ("ADD", 0x04, (REG, REG, REG), "add"),
    ("SUB", 0x05, (REG, REG, REG), "sub"),
    ("AND", 0x06, (REG, REG, REG), "and"),
    ("OR", 0x07, (REG, REG, REG), "or"),
    ("XOR", 0x08, (REG, REG, REG), "xor"),
    ("SHL", 0x09, (REG, REG, REG), "shl"),
    ("SHR", 0x0A, (REG, REG, REG), "shr"),
    ("BEQ", 0x0B, (REG, IMM8), "beq"),
    ("BNEQ", 0x0C, (REG, IMM8), "bneq"),
])

ATMEGA_SPECS = _table(ISA.ATMEGA, [
    ("MOV", 0x81, (REG, REG), "mov"),
    ("LDI", 0x82, (REG, IMM8), "set"),
    ("ADD", 0x83, (REG, REG), "add"),
    ("SUB", 0x84, (REG, REG), "sub"),
    ("AND", 0x85, (REG, REG), "and"),
    ("OR", 0x86, (REG, REG), "or"),
    ("EOR", 0x87, (REG, REG), "xor"),
    ("LSL", 0x88, (REG,), "lsl"),
    ("LSR", 0x89, (REG,), "lsr"),
    ("BREQ", 0x8A, (REL8,), "breq"),
    ("BRNE", 0x8B, (REL8,), "brne"),
    ("CPI", 0x8C, (REG, IMM8), "cpi"),
    ("RJMP", 0x8D, (REL8,), "rjmp"),
])

SPECS = {ISA.FPGA12: FPGA12_SPECS, ISA.ATMEGA: ATMEGA_SPECS}
BY_OPCODE = {isa: {s.opcode: s for s in table.values()} for isa, table in SPECS.items()}

# Classification targets: all of FPGA12, and the Table-1 rows of the ATmega
# subset (CPI and RJMP only steer control flow).
CLASS_MNEMONICS = {
    ISA.FPGA12: tuple(FPGA12_SPECS),
    ISA.ATMEGA: tuple(m for m in ATMEGA_SPECS if m not in ("CPI", "RJMP")),
}


def as_isa(isa) -> ISA:
    if isinstance(isa, ISA):
        return isa
    try:
        return ISA(str(isa).upper())
    except ValueError:
        raise ValueError(f"unknown ISA {isa!r}; expected FPGA12 or ATMEGA") from None


def spec_for(isa, mnemonic: str) -> InstructionSpec:
    return SPECS[as_isa(isa)][mnemonic.upper()]


@dataclass(frozen=True)
class Program:
    isa: ISA
    words: tuple = ()
    source_map: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.words)

    def to_bytes(self) -> bytes:
        return b"".join(bytes(w) for w in self.words)

    @classmethod
    def from_bytes(cls, data: bytes, isa) -> "Program":
        if len(data) % 4:
            raise CorruptProgramError(len(data) // 4, "truncated word (length not a multiple of 4)")
        words = tuple(tuple(data[i:i + 4]) for i in range(0, len(data), 4))
        program = cls(as_isa(isa), words)
        for i, _ in enumerate(words):
            decode(program, i)
        return program


_REG_RE = re.compile(r"^R(\d+)$", re.IGNORECASE)


def _parse_int(text):
    text = text.strip()
    try:
        return int(text, 0)
    except ValueError:
        return None


def _encode_operand(kind, text, isa, lineno):
    if kind == REG:
        m = _REG_RE.match(text.strip())
        if not m:
            raise AssemblyError(lineno, f"expected register, got {text!r}")
        index = int(m.group(1))
        if index >= isa.register_count:
            raise AssemblyError(
                lineno, f"register R{index} out of range (R0-R{isa.register_count - 1})")
        return index
    value = _parse_int(text)
    if value is None:
        raise AssemblyError(lineno, f"expected integer, got {text!r}")
    if kind == IMM8:
        if not 0 <= value <= 255:
            raise AssemblyError(lineno, f"immediate {value} outside [0, 255]")
        return value
    if not -128 <= value <= 127:
        raise AssemblyError(lineno, f"branch offset {value} outside [-128, 127]")
    return value & 0xFF


def assemble(source: str, isa="FPGA12") -> Program:
    """Translate assembly text into a :class:`Program`.

    One instruction per line, operands comma separated, ``;`` starts a
    comment. Errors carry the 1-based line number.
    """
    isa = as_isa(isa)
    table = SPECS[isa]
    words = []
    source_map = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        mnemonic = parts[0].upper()
        spec = table.get(mnemonic)
        if spec is None:
            raise AssemblyError(lineno, f"unknown mnemonic {parts[0]!r} for {isa.value}")
        args = [a.strip() for a in parts[1].split(",")] if len(parts) > 1 else []
        if len(args) != len(spec.operands):
            raise AssemblyError(
                lineno, f"{mnemonic} takes {len(spec.operands)} operand(s), got {len(args)}")
        encoded = [_encode_operand(k, a, isa, lineno) for k, a in zip(spec.operands, args)]
        encoded += [0] * (3 - len(encoded))
        source_map[len(words)] = lineno
        words.append((spec.opcode, *encoded))
    return Program(isa, tuple(words), source_map)


def decode(program: Program, index: int):
    """Return ``(spec, operand_values)`` for word ``index``; REL8 operands come back signed."""
    word = program.words[index]
    if len(word) != 4 or any(not 0 <= b <= 255 for b in word):
        raise CorruptProgramError(index, f"malformed word {word!r}")
    spec = BY_OPCODE[program.isa].get(word[0])
    if spec is None:
        raise CorruptProgramError(index, f"opcode 0x{word[0]:02X} not in {program.isa.value}")
    values = []
    for pos, kind in enumerate(spec.operands):
        b = word[1 + pos]
        if kind == REG and b >= program.isa.register_count:
            raise CorruptProgramError(index, f"register R{b} out of range")
        values.append(b - 256 if kind == REL8 and b > 127 else b)
    if any(word[1 + len(spec.operands):]):
        raise CorruptProgramError(index, "non-zero unused operand byte")
    return spec, values


def format_instruction(spec: InstructionSpec, values) -> str:
    rendered = [f"R{v}" if k == REG else str(v) for k, v in zip(spec.operands, values)]
    return f"{spec.mnemonic} {', '.join(rendered)}".rstrip()


def disassemble(program: Program) -> str:
    lines = [format_instruction(*decode(program, i)) for i in range(len(program.words))]
    return "".join(line + "\n" for line in lines)


def listing(program: Program) -> str:
    """Address, hex word and canonical source, one line per word."""
    out = []
    for i, word in enumerate(program.words):
        text = format_instruction(*decode(program, i))
        hexword = " ".join(f"{b:02X}" for b in word)
        src = program.source_map.get(i)
        suffix = f"  ; line {src}" if src is not None else ""
        out.append(f"{i:04d}  {hexword}  {text}{suffix}")
    return "".join(line + "\n" for line in out)


# Instruction flows exercised during trace collection: one of each FPGA
# instruction, and an ATmega count-down loop using all 13 subset mnemonics.
SAMPLE_FPGA_SOURCE = """\
; straight-line walk through every FPGA12 instruction
SET R2, 16          ; base address
STORE R2, R2, 4     ; mem[20] <- 16
LOAD R3, R2, 4      ; R3 <- mem[20]
ADD R4, R2, R3
SUB R5, R4, R2
AND R6, R4, R5
OR R7, R6, R2
XOR R1, R7, R3
SHL R6, R1, R0      ; shift by R0 = 0
SHR R5, R4, R0
BNEQ R3, 16         ; equal, no skip
BEQ R3, 16          ; equal, skip past the end
"""

SAMPLE_ATMEGA_SOURCE = """\
; count-down loop over the ATmega subset
LDI R16, 3          ; loop counter
LDI R20, 1
MOV R17, R16        ; loop body starts here (index 2)
ADD R17, R16
SUB R17, R20
AND R17, R16
OR R17, R16
EOR R18, R17
LSL R17
LSR R17
SUB R16, R20        ; decrement, sets Z on zero
CPI R16, 0
BRNE 1              ; not done: to RJMP
BREQ 1              ; done: past the end
RJMP -13            ; back to index 2
"""
