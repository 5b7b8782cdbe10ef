"""Instruction-level simulator for both ISAs.

``MachineState`` is an immutable value; :func:`step` returns a new state
together with an :class:`ExecutionEvent` describing the switching activity
of that step.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import MachineFault
from .isa import ISA, Program, decode

MEMORY_SIZE = 256


@dataclass(frozen=True)
class MachineState:
    registers: tuple
    pc: int = 0
    zero_flag: int = 0
    memory: bytes = bytes(MEMORY_SIZE)
    halted: bool = False

    @classmethod
    def reset(cls, isa, program: Program | None = None) -> "MachineState":
        isa = ISA(isa)
        state = cls(registers=(0,) * isa.register_count)
        if program is not None and len(program) == 0:
            state = replace(state, halted=True)
        return state

    def packed(self) -> int:
        """Registers, data memory and Z flag as one integer (pc and halt excluded)."""
        blob = bytes(self.registers) + self.memory + bytes([self.zero_flag])
        return int.from_bytes(blob, "little")


@dataclass(frozen=True)
class ExecutionEvent:
    step_index: int
    mnemonic: str
    pc_before: int
    pc_after: int
    register_write: tuple | None
    hamming_toggle: int


def _alu(sem, a, b):
    if sem == "add":
        return (a + b) & 0xFF
    if sem == "sub":
        return (a - b) & 0xFF
    if sem == "and":
        return a & b
    if sem == "or":
        return a | b
    if sem == "xor":
        return a ^ b
    if sem == "shl":
        return (a << (b % 8)) & 0xFF
    if sem == "shr":
        return a >> (b % 8)
    raise AssertionError(sem)


def step(state: MachineState, program: Program, step_index: int = 0):
    if state.halted:
        raise MachineFault("step called on a halted machine")
    if not 0 <= state.pc < len(program):
        raise MachineFault(f"pc {state.pc} outside program of length {len(program)}")
    spec, ops = decode(program, state.pc)
    regs = list(state.registers)
    memory = state.memory
    z = state.zero_flag
    pc = state.pc + 1
    write = None
    sem = spec.semantics

    def set_reg(i, value):
        nonlocal write
        write = (i, regs[i], value)
        regs[i] = value

    if program.isa is ISA.FPGA12:
        if sem in ("load", "store"):
            addr = regs[ops[1]] + ops[2]
            if addr >= MEMORY_SIZE:
                raise MachineFault(f"address fault: {addr} at pc {state.pc}")
            if sem == "load":
                set_reg(ops[0], memory[addr])
            else:
                memory = memory[:addr] + bytes([regs[ops[0]]]) + memory[addr + 1:]
        elif sem == "set":
            set_reg(ops[0], ops[1])
        elif sem in ("beq", "bneq"):
            equal = regs[ops[0]] == ops[1]
            if equal == (sem == "beq"):
                pc = state.pc + 2
        else:
            set_reg(ops[0], _alu(sem, regs[ops[1]], regs[ops[2]]))
    else:
        if sem == "mov":
            set_reg(ops[0], regs[ops[1]])
        elif sem == "set":
            set_reg(ops[0], ops[1])
        elif sem == "lsl":
            set_reg(ops[0], (regs[ops[0]] << 1) & 0xFF)
            z = int(regs[ops[0]] == 0)
        elif sem == "lsr":
            set_reg(ops[0], regs[ops[0]] >> 1)
            z = int(regs[ops[0]] == 0)
        elif sem == "cpi":
            z = int((regs[ops[0]] - ops[1]) & 0xFF == 0)
        elif sem in ("breq", "brne", "rjmp"):
            taken = sem == "rjmp" or (z == 1) == (sem == "breq")
            if taken:
                pc = state.pc + ops[0] + 1
        else:
            set_reg(ops[0], _alu(sem, regs[ops[0]], regs[ops[1]]))
            z = int(regs[ops[0]] == 0)

    if pc < 0:
        raise MachineFault(f"branch target {pc} before program start at pc {state.pc}")
    halted = pc >= len(program)
    if halted:
        pc = len(program)
    new = MachineState(tuple(regs), pc, z, memory, halted)
    toggle = bin(state.packed() ^ new.packed()).count("1")
    event = ExecutionEvent(step_index, spec.mnemonic, state.pc, pc, write, toggle)
    return new, event


def run(state: MachineState, program: Program, max_steps: int = 10_000):
    """Step until halted or ``max_steps``; returns ``(final_state, events)``."""
    events = []
    if len(program) == 0:
        return replace(state, halted=True), events
    while not state.halted and len(events) < max_steps:
        try:
            state, event = step(state, program, len(events))
        except MachineFault as exc:
            raise MachineFault(f"step {len(events)}: {exc}") from exc
        events.append(event)
    return state, events
