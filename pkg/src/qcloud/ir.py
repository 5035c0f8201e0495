"""Quil-subset program representation, parser and printer.

The accepted language is a small, strict subset of Quil::

    DECLARE beta REAL[1]
    DECLARE ro BIT[2]
    RESET
    H 0
    CNOT 0 1
    RZ(beta[0]) 1
    MEASURE 0 ro[0]
    LABEL @loop
    JUMP-WHEN @loop ro[0]
    HALT

Gate arguments are either literal expressions over numbers and ``pi``
(evaluated at parse time) or bare memory references into ``REAL`` regions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping
from typing import Iterable, Union

__all__ = [
    "MEMORY_KINDS",
    "GATE_SIGNATURES",
    "QuilError",
    "QuilSyntaxError",
    "UndeclaredMemoryError",
    "DuplicateLabelError",
    "UnknownGateError",
    "ProgramValidationError",
    "MemoryDeclaration",
    "MemoryRef",
    "Gate",
    "Measure",
    "Reset",
    "Label",
    "Jump",
    "JumpWhen",
    "JumpUnless",
    "Halt",
    "Program",
    "parse",
    "to_quil",
    "format_angle",
]

MEMORY_KINDS = ("BIT", "OCTET", "INTEGER", "REAL")

# name -> (number of angle parameters, number of qubits)
GATE_SIGNATURES = {
    "RX": (1, 1),
    "RY": (1, 1),
    "RZ": (1, 1),
    "H": (0, 1),
    "X": (0, 1),
    "Y": (0, 1),
    "Z": (0, 1),
    "CNOT": (0, 2),
    "CZ": (0, 2),
    "SWAP": (0, 2),
}


class QuilError(ValueError):
    """Base class for every program-level error."""


class QuilSyntaxError(QuilError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UndeclaredMemoryError(QuilError):
    pass


class DuplicateLabelError(QuilError):
    pass


class UnknownGateError(QuilError):
    pass


class ProgramValidationError(QuilError):
    pass


@dataclass(frozen=True)
class MemoryDeclaration:
    name: str
    kind: str
    length: int = 1

    def __post_init__(self):
        if self.kind not in MEMORY_KINDS:
            raise ProgramValidationError(f"unknown memory kind {self.kind!r}")
        if self.length < 1:
            raise ProgramValidationError(f"region {self.name!r} must have length >= 1")


@dataclass(frozen=True)
class MemoryRef:
    name: str
    index: int = 0

    def __str__(self) -> str:
        return f"{self.name}[{self.index}]"


Argument = Union[float, MemoryRef]


@dataclass(frozen=True)
class Gate:
    name: str
    params: tuple[Argument, ...]
    qubits: tuple[int, ...]

    @property
    def is_parametric(self) -> bool:
        return any(isinstance(p, MemoryRef) for p in self.params)


@dataclass(frozen=True)
class Measure:
    qubit: int
    target: MemoryRef


@dataclass(frozen=True)
class Reset:
    """Program-level active-reset directive; only ever stored as ``Program.reset_requested``."""


@dataclass(frozen=True)
class Label:
    name: str


@dataclass(frozen=True)
class Jump:
    target: str


@dataclass(frozen=True)
class JumpWhen:
    target: str
    condition: MemoryRef


@dataclass(frozen=True)
class JumpUnless:
    target: str
    condition: MemoryRef


@dataclass(frozen=True)
class Halt:
    pass


Instruction = Union[Gate, Measure, Label, Jump, JumpWhen, JumpUnless, Halt]
CONTROL_FLOW = (Label, Jump, JumpWhen, JumpUnless, Halt)


@dataclass(frozen=True)
class Program:
    """An immutable, fully resolved program.

    Construction validates the program: memory names are unique, every memory
    reference resolves to an in-bounds slot of the right kind, gate arities
    match and every jump targets a label defined exactly once.
    """

    declarations: tuple[MemoryDeclaration, ...] = ()
    body: tuple[Instruction, ...] = ()
    reset_requested: bool = False

    def __post_init__(self):
        object.__setattr__(self, "declarations", tuple(self.declarations))
        object.__setattr__(self, "body", tuple(self.body))
        _validate(self)

    def declaration(self, name: str) -> MemoryDeclaration:
        for decl in self.declarations:
            if decl.name == name:
                return decl
        raise UndeclaredMemoryError(f"memory region {name!r} is not declared")

    @property
    def qubits(self) -> tuple[int, ...]:
        used: set[int] = set()
        for instr in self.body:
            if isinstance(instr, Gate):
                used.update(instr.qubits)
            elif isinstance(instr, Measure):
                used.add(instr.qubit)
        return tuple(sorted(used))

    @property
    def has_control_flow(self) -> bool:
        return any(isinstance(i, CONTROL_FLOW) for i in self.body)

    @property
    def has_measurement(self) -> bool:
        return any(isinstance(i, Measure) for i in self.body)

    def with_body(self, body: Iterable[Instruction]) -> "Program":
        return Program(self.declarations, tuple(body), self.reset_requested)

    def bind(self, values: Mapping[MemoryRef, float]) -> "Program":
        """Replace memory-referenced gate arguments with literal values.

        Slots missing from ``values`` bind to 0.0; the declarations are kept.
        """
        body = []
        for instr in self.body:
            if isinstance(instr, Gate) and instr.is_parametric:
                params = tuple(float(values.get(p, 0.0)) if isinstance(p, MemoryRef) else p for p in instr.params)
                instr = Gate(instr.name, params, instr.qubits)
            body.append(instr)
        return self.with_body(body)

    def __str__(self) -> str:
        return to_quil(self)


def _validate(program: Program) -> None:
    kinds: dict[str, MemoryDeclaration] = {}
    for decl in program.declarations:
        if decl.name in kinds:
            raise ProgramValidationError(f"memory region {decl.name!r} declared twice")
        kinds[decl.name] = decl

    def resolve(ref: MemoryRef, allowed: tuple[str, ...], what: str) -> None:
        decl = kinds.get(ref.name)
        if decl is None:
            raise UndeclaredMemoryError(f"memory region {ref.name!r} is not declared")
        if decl.kind not in allowed:
            raise ProgramValidationError(
                f"{what} {ref} must reference a {'/'.join(allowed)} region, not {decl.kind}"
            )
        if not 0 <= ref.index < decl.length:
            raise ProgramValidationError(f"{ref} is out of bounds for {decl.kind}[{decl.length}]")

    labels: set[str] = set()
    targets: list[str] = []
    for instr in program.body:
        if isinstance(instr, Gate):
            sig = GATE_SIGNATURES.get(instr.name)
            if sig is None:
                raise UnknownGateError(f"unknown gate {instr.name!r}")
            if (len(instr.params), len(instr.qubits)) != sig:
                raise ProgramValidationError(
                    f"{instr.name} takes {sig[0]} parameter(s) and {sig[1]} qubit(s)"
                )
            if len(set(instr.qubits)) != len(instr.qubits):
                raise ProgramValidationError(f"{instr.name} applied to duplicate qubits {instr.qubits}")
            for q in instr.qubits:
                if q < 0:
                    raise ProgramValidationError(f"negative qubit index {q}")
            for p in instr.params:
                if isinstance(p, MemoryRef):
                    resolve(p, ("REAL",), "gate argument")
                elif not math.isfinite(p):
                    raise ProgramValidationError(f"non-finite angle {p}")
        elif isinstance(instr, Measure):
            if instr.qubit < 0:
                raise ProgramValidationError(f"negative qubit index {instr.qubit}")
            resolve(instr.target, ("BIT",), "measurement target")
        elif isinstance(instr, Label):
            if instr.name in labels:
                raise DuplicateLabelError(f"label @{instr.name} defined more than once")
            labels.add(instr.name)
        elif isinstance(instr, Jump):
            targets.append(instr.target)
        elif isinstance(instr, (JumpWhen, JumpUnless)):
            targets.append(instr.target)
            resolve(instr.condition, ("BIT",), "jump condition")
    for target in targets:
        if target not in labels:
            raise ProgramValidationError(f"jump to undefined label @{target}")


# ---------------------------------------------------------------------------
# printing

_PI_DENOMINATORS = (1, 2, 3, 4, 6, 8, 12, 16)


def format_angle(value: float) -> str:
    """Render an angle so that parsing the text gives back the identical float."""
    for d in _PI_DENOMINATORS:
        for n in range(-2 * d, 2 * d + 1):
            if n == 0 or math.gcd(n, d) != 1:
                continue
            if value == (n * math.pi) / d:
                num = {1: "pi", -1: "-pi"}.get(n, f"{n}*pi")
                return num if d == 1 else f"{num}/{d}"
    text = repr(float(value))
    return text


def _format_instruction(instr: Instruction) -> str:
    if isinstance(instr, Gate):
        head = instr.name
        if instr.params:
            args = ", ".join(str(p) if isinstance(p, MemoryRef) else format_angle(p) for p in instr.params)
            head = f"{head}({args})"
        return " ".join([head, *map(str, instr.qubits)])
    if isinstance(instr, Measure):
        return f"MEASURE {instr.qubit} {instr.target}"
    if isinstance(instr, Label):
        return f"LABEL @{instr.name}"
    if isinstance(instr, Jump):
        return f"JUMP @{instr.target}"
    if isinstance(instr, JumpWhen):
        return f"JUMP-WHEN @{instr.target} {instr.condition}"
    if isinstance(instr, JumpUnless):
        return f"JUMP-UNLESS @{instr.target} {instr.condition}"
    if isinstance(instr, Halt):
        return "HALT"
    raise TypeError(f"not an instruction: {instr!r}")


def to_quil(program: Program) -> str:
    """Print ``program`` in canonical form (declarations, then RESET, then body)."""
    lines = [f"DECLARE {d.name} {d.kind}[{d.length}]" for d in program.declarations]
    if program.reset_requested:
        lines.append("RESET")
    lines.extend(_format_instruction(i) for i in program.body)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# parsing

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")
_INT = re.compile(r"[0-9]+")
_NUMBER = re.compile(r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


class _Cursor:
    """Character cursor over one source line, with 1-based column reporting."""

    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, message: str, pos: int | None = None) -> QuilSyntaxError:
        return QuilSyntaxError(message, self.lineno, (self.pos if pos is None else pos) + 1)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str) -> None:
        if self.peek() != char:
            raise self.error(f"expected {char!r}")
        self.pos += 1

    def match(self, pattern: re.Pattern, what: str) -> str:
        self.skip_ws()
        m = pattern.match(self.text, self.pos)
        if not m:
            raise self.error(f"expected {what}")
        self.pos = m.end()
        return m.group(0)

    def integer(self, what: str) -> int:
        return int(self.match(_INT, what))

    def memory_ref(self) -> MemoryRef:
        name = self.match(_IDENT, "memory region name")
        index = 0
        if self.peek() == "[":
            self.pos += 1
            index = self.integer("index")
            self.expect("]")
        return MemoryRef(name, index)

    def label(self) -> str:
        self.expect("@")
        return self.match(_IDENT, "label name")

    def finish(self) -> None:
        if not self.at_end():
            raise self.error("unexpected trailing text")


def _parse_argument(cur: _Cursor) -> Argument:
    """A bare memory reference, or a literal expression over numbers and ``pi``."""
    cur.skip_ws()
    m = _IDENT.match(cur.text, cur.pos)
    if m and m.group(0) != "pi":
        ref = cur.memory_ref()
        if cur.peek() not in (",", ")"):
            raise cur.error("memory references may not take part in arithmetic")
        return ref
    return _Expr(cur).parse()


class _Expr:
    """Recursive-descent evaluator for literal angle expressions."""

    def __init__(self, cur: _Cursor):
        self.cur = cur

    def parse(self) -> float:
        return self.sum()

    def sum(self) -> float:
        value = self.product()
        while self.cur.peek() in ("+", "-"):
            op = self.cur.peek()
            self.cur.pos += 1
            rhs = self.product()
            value = value + rhs if op == "+" else value - rhs
        return value

    def product(self) -> float:
        value = self.unary()
        while self.cur.peek() in ("*", "/"):
            op = self.cur.peek()
            self.cur.pos += 1
            at = self.cur.pos
            rhs = self.unary()
            if op == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise self.cur.error("division by zero", at)
                value = value / rhs
        return value

    def unary(self) -> float:
        if self.cur.peek() == "-":
            self.cur.pos += 1
            return -self.unary()
        if self.cur.peek() == "+":
            self.cur.pos += 1
            return self.unary()
        return self.atom()

    def atom(self) -> float:
        cur = self.cur
        ch = cur.peek()
        if ch == "(":
            cur.pos += 1
            value = self.sum()
            cur.expect(")")
            return value
        m = _IDENT.match(cur.text, cur.pos)
        if m:
            if m.group(0) != "pi":
                raise cur.error("memory references may not take part in arithmetic")
            cur.pos = m.end()
            return math.pi
        return float(cur.match(_NUMBER, "number"))


def _parse_line(cur: _Cursor):
    start = cur.pos
    name = cur.match(_NAME, "instruction")
    if name == "DECLARE":
        region = cur.match(_IDENT, "memory region name")
        kind_at = cur.pos
        kind = cur.match(_IDENT, "memory kind")
        if kind not in MEMORY_KINDS:
            raise cur.error(f"unknown memory kind {kind!r}", kind_at + 1)
        length = 1
        if cur.peek() == "[":
            cur.pos += 1
            length = cur.integer("region length")
            cur.expect("]")
            if length < 1:
                raise cur.error("region length must be at least 1")
        cur.finish()
        return MemoryDeclaration(region, kind, length)
    if name == "RESET":
        cur.finish()
        return Reset()
    if name == "HALT":
        cur.finish()
        return Halt()
    if name == "LABEL":
        label = cur.label()
        cur.finish()
        return Label(label)
    if name == "JUMP":
        target = cur.label()
        cur.finish()
        return Jump(target)
    if name in ("JUMP-WHEN", "JUMP-UNLESS"):
        target = cur.label()
        cond = cur.memory_ref()
        cur.finish()
        return (JumpWhen if name == "JUMP-WHEN" else JumpUnless)(target, cond)
    if name == "MEASURE":
        qubit = cur.integer("qubit index")
        target = cur.memory_ref()
        cur.finish()
        return Measure(qubit, target)
    if name not in GATE_SIGNATURES:
        if "-" in name or name in ("DEFGATE", "DEFCIRCUIT", "PRAGMA"):
            raise cur.error(f"unsupported instruction {name!r}", start)
        raise UnknownGateError(f"line {cur.lineno}: unknown gate {name!r}")
    n_params, n_qubits = GATE_SIGNATURES[name]
    params: list[Argument] = []
    if cur.peek() == "(":
        cur.pos += 1
        params.append(_parse_argument(cur))
        while cur.peek() == ",":
            cur.pos += 1
            params.append(_parse_argument(cur))
        cur.expect(")")
    if len(params) != n_params:
        raise cur.error(f"{name} takes {n_params} parameter(s), got {len(params)}", start)
    qubits: list[int] = []
    while not cur.at_end():
        qubits.append(cur.integer("qubit index"))
    if len(qubits) != n_qubits:
        raise cur.error(f"{name} acts on {n_qubits} qubit(s), got {len(qubits)}", start)
    if len(set(qubits)) != len(qubits):
        raise cur.error(f"{name} applied to duplicate qubits", start)
    return Gate(name, tuple(params), tuple(qubits))


def parse(source: str) -> Program:
    """Parse Quil-subset text into a validated :class:`Program`.

    Raises
    ------
    QuilSyntaxError
        Malformed text; carries ``line`` and ``column``.
    UndeclaredMemoryError, DuplicateLabelError, UnknownGateError
        Resolution failures.
    """
    declarations: list[MemoryDeclaration] = []
    declared: dict[str, MemoryDeclaration] = {}
    body: list[Instruction] = []
    labels: set[str] = set()
    reset = False
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].rstrip()
        cur = _Cursor(text, lineno)
        if cur.at_end():
            continue
        item = _parse_line(cur)
        if isinstance(item, MemoryDeclaration):
            if item.name in declared:
                raise QuilSyntaxError(f"memory region {item.name!r} declared twice", lineno, 1)
            declared[item.name] = item
            declarations.append(item)
        elif isinstance(item, Reset):
            if body or reset:
                raise QuilSyntaxError("RESET is only allowed once, at the head of the program", lineno, 1)
            reset = True
        else:
            if isinstance(item, Label):
                if item.name in labels:
                    raise DuplicateLabelError(f"line {lineno}: label @{item.name} defined more than once")
                labels.add(item.name)
            body.append(item)
    return Program(tuple(declarations), tuple(body), reset)
