import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcloud.ir import (
    DuplicateLabelError,
    Gate,
    Halt,
    Jump,
    JumpUnless,
    JumpWhen,
    Label,
    Measure,
    MemoryDeclaration,
    MemoryRef,
    Program,
    ProgramValidationError,
    QuilError,
    QuilSyntaxError,
    UndeclaredMemoryError,
    UnknownGateError,
    parse,
    to_quil,
)

FIG2 = """DECLARE ro BIT[2]
DECLARE beta REAL[1]
DECLARE gamma REAL[1]
H 0
H 1
CNOT 0 1
RZ(gamma[0]) 1
CNOT 0 1
RX(pi/2) 0
RZ(beta[0]) 0
RX(-pi/2) 0
RX(pi/2) 1
RZ(beta[0]) 1
RX(-pi/2) 1
MEASURE 0 ro[0]
MEASURE 1 ro[1]
"""


def test_minimal_program():
    p = parse("DECLARE ro BIT[1]\nH 0\nMEASURE 0 ro[0]")
    assert len(p.declarations) == 1
    assert p.body == (Gate("H", (), (0,)), Measure(0, MemoryRef("ro", 0)))


def test_parametric_program_keeps_memory_reference():
    p = parse(FIG2)
    assert {d.name for d in p.declarations} == {"beta", "gamma", "ro"}
    rz = [g for g in p.body if isinstance(g, Gate) and g.name == "RZ"]
    assert MemoryRef("gamma", 0) in rz[0].params


def test_undeclared_reference():
    with pytest.raises(UndeclaredMemoryError):
        parse("RZ(alpha[0]) 0")


def test_error_kinds():
    with pytest.raises(UnknownGateError):
        parse("FOO 0")
    with pytest.raises(DuplicateLabelError):
        parse("LABEL @a\nLABEL @a")
    with pytest.raises(ProgramValidationError):
        parse("JUMP @nowhere")
    with pytest.raises(QuilError):
        parse("CNOT 0 0")
    with pytest.raises(ProgramValidationError):
        parse("DECLARE ro BIT[1]\nMEASURE 0 ro[1]")
    with pytest.raises(ProgramValidationError):
        parse("DECLARE ro BIT[1]\nRZ(ro[0]) 0")


def test_syntax_error_has_position():
    with pytest.raises(QuilSyntaxError) as info:
        parse("H 0\nRZ(pi/2 0")
    assert "line 2" in str(info.value)


def test_arithmetic_on_memory_rejected():
    with pytest.raises(QuilSyntaxError):
        parse("DECLARE g REAL[1]\nRZ(2*g[0]) 0")


def test_literal_pi_expressions():
    p = parse("RX(pi/2) 0\nRX(-pi/2) 0\nRZ(2*pi) 0\nRZ(3*pi/4) 0")
    assert [g.params[0] for g in p.body] == [math.pi / 2, -math.pi / 2, 2 * math.pi, 3 * math.pi / 4]


def test_angles_not_reduced_at_parse_time():
    assert parse("RZ(7.5) 0").body[0].params == (7.5,)


def test_print_examples():
    assert to_quil(Program()) == ""
    p = Program((MemoryDeclaration("ro", "BIT", 1),), (Measure(0, MemoryRef("ro", 0)),))
    assert to_quil(p) == "DECLARE ro BIT[1]\nMEASURE 0 ro[0]"


def test_symmetrization_line_verbatim():
    text = "DECLARE symmetrization REAL[1]\nRX(symmetrization[0]) 0"
    assert to_quil(parse(text)) == text


def test_comments_and_reset():
    p = parse("# header\nRESET\nH 0  # trailing\n\n")
    assert p.reset_requested and p.body == (Gate("H", (), (0,)),)
    assert to_quil(p) == "RESET\nH 0"


def test_reset_only_at_head():
    with pytest.raises(QuilError):
        parse("H 0\nRESET")


def test_bind_substitutes():
    p = parse("DECLARE t REAL[2]\nRZ(t[1]) 0\nRX(t[0]) 0")
    bound = p.bind({MemoryRef("t", 1): 0.25})
    assert [g.params for g in bound.body] == [(0.25,), (0.0,)]


# -- round trip property ----------------------------------------------------------

_ONE = ("H", "X", "Y", "Z")
_ROT = ("RX", "RY", "RZ")
_TWO = ("CNOT", "CZ", "SWAP")


@st.composite
def programs(draw):
    n_real = draw(st.integers(0, 3))
    n_bits = draw(st.integers(1, 3))
    decls = [MemoryDeclaration("ro", "BIT", n_bits)]
    if n_real:
        decls.append(MemoryDeclaration("theta", "REAL", n_real))
    if draw(st.booleans()):
        decls.append(MemoryDeclaration("count", draw(st.sampled_from(("OCTET", "INTEGER"))), draw(st.integers(1, 4))))
    labels = draw(st.lists(st.sampled_from(("a", "b", "loop", "end_1")), unique=True, max_size=3))
    body = []
    angle = st.one_of(
        st.floats(-10, 10, allow_nan=False, allow_infinity=False),
        st.sampled_from((math.pi, -math.pi / 2, math.pi / 4, 2 * math.pi)),
    )
    for _ in range(draw(st.integers(0, 15))):
        kind = draw(st.sampled_from(("one", "rot", "two", "measure", "jump", "halt")))
        q = draw(st.integers(0, 5))
        if kind == "one":
            body.append(Gate(draw(st.sampled_from(_ONE)), (), (q,)))
        elif kind == "rot":
            arg = MemoryRef("theta", draw(st.integers(0, n_real - 1))) if n_real and draw(st.booleans()) else draw(angle)
            body.append(Gate(draw(st.sampled_from(_ROT)), (arg,), (q,)))
        elif kind == "two":
            body.append(Gate(draw(st.sampled_from(_TWO)), (), (q, q + 1 + draw(st.integers(0, 3)))))
        elif kind == "measure":
            body.append(Measure(q, MemoryRef("ro", draw(st.integers(0, n_bits - 1)))))
        elif kind == "jump" and labels:
            target = draw(st.sampled_from(labels))
            cond = MemoryRef("ro", draw(st.integers(0, n_bits - 1)))
            body.append(draw(st.sampled_from((Jump(target), JumpWhen(target, cond), JumpUnless(target, cond)))))
        elif kind == "halt":
            body.append(Halt())
    for name in labels:
        body.insert(draw(st.integers(0, len(body))), Label(name))
    return Program(tuple(decls), tuple(body), draw(st.booleans()))


@settings(max_examples=300, deadline=None)
@given(programs())
def test_parse_print_round_trip(program):
    text = to_quil(program)
    again = parse(text)
    assert again == program
    assert to_quil(again) == text


@settings(max_examples=100, deadline=None)
@given(programs())
def test_references_resolve(program):
    declared = {d.name: d for d in program.declarations}
    labels = {i.name for i in program.body if isinstance(i, Label)}
    for instr in program.body:
        refs = []
        if isinstance(instr, Gate):
            refs = [p for p in instr.params if isinstance(p, MemoryRef)]
        elif isinstance(instr, Measure):
            refs = [instr.target]
        elif isinstance(instr, (JumpWhen, JumpUnless)):
            refs = [instr.condition]
        for ref in refs:
            assert 0 <= ref.index < declared[ref.name].length
        if isinstance(instr, (Jump, JumpWhen, JumpUnless)):
            assert instr.target in labels
