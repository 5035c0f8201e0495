"""Program families for volumetric latency benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from ..ir import Gate, Measure, MemoryDeclaration, MemoryRef, Program

__all__ = [
    "RPGSpec",
    "generate_rpg",
    "rpg_program",
    "ghz_line",
    "maxcut_qaoa_program",
    "maxcut_qaoa_complete",
    "Workload",
    "PROGRAM_FAMILIES",
    "literal_program",
]


def _uniform_angles(rng: np.random.Generator, shape) -> np.ndarray:
    # pi - U[0, 2pi) lies in (-pi, pi]
    return math.pi - rng.uniform(0.0, 2 * math.pi, size=shape)


@dataclass(frozen=True)
class RPGSpec:
    """Random-phase-gadget circuit description: ``d`` layers over ``m`` qubits."""

    m: int
    d: int
    permutations: tuple[tuple[int, ...], ...]
    alphas: tuple[tuple[float, ...], ...]
    seed: int | None

    def __post_init__(self):
        for perm in self.permutations:
            if sorted(perm) != list(range(self.m)):
                raise ValueError(f"{perm} is not a permutation of 0..{self.m - 1}")
        if len(self.permutations) != self.d or len(self.alphas) != self.d:
            raise ValueError("need one permutation and one row of angles per layer")
        for row in self.alphas:
            if len(row) != self.gadgets_per_layer:
                raise ValueError(f"each layer needs {self.gadgets_per_layer} angles")
            if any(not -math.pi < a <= math.pi for a in row):
                raise ValueError("angles must lie in (-pi, pi]")

    @property
    def gadgets_per_layer(self) -> int:
        return self.m // 2

    @property
    def slot_count(self) -> int:
        return self.d * self.gadgets_per_layer

    def memory(self, alphas: np.ndarray | None = None) -> dict[MemoryRef, float]:
        """Assignments for the ``alpha`` region, row-major over (layer, gadget)."""
        values = np.asarray(self.alphas if alphas is None else alphas, dtype=float).reshape(-1)
        return {MemoryRef("alpha", i): float(v) for i, v in enumerate(values)}

    def with_alphas(self, alphas: np.ndarray) -> "RPGSpec":
        rows = tuple(tuple(float(a) for a in row) for row in np.asarray(alphas).reshape(self.d, -1))
        return RPGSpec(self.m, self.d, self.permutations, rows, self.seed)

    def random_alphas(self, rng: np.random.Generator) -> np.ndarray:
        return _uniform_angles(rng, (self.d, self.gadgets_per_layer))


def rpg_program(spec: RPGSpec, parametric: bool = True, reset: bool = False) -> Program:
    """Each layer: Hadamards on every qubit, then a CNOT-RZ-CNOT gadget per permuted pair."""
    h = spec.gadgets_per_layer
    decls = [MemoryDeclaration("ro", "BIT", spec.m)]
    if parametric and spec.slot_count:
        decls.insert(0, MemoryDeclaration("alpha", "REAL", spec.slot_count))
    body: list = []
    for i, perm in enumerate(spec.permutations):
        body.extend(Gate("H", (), (q,)) for q in range(spec.m))
        for j in range(h):
            a, b = perm[2 * j], perm[2 * j + 1]
            angle = MemoryRef("alpha", i * h + j) if parametric else spec.alphas[i][j]
            body += [Gate("CNOT", (), (a, b)), Gate("RZ", (angle,), (b,)), Gate("CNOT", (), (a, b))]
    body.extend(Measure(q, MemoryRef("ro", q)) for q in range(spec.m))
    return Program(tuple(decls), tuple(body), reset_requested=reset)


def generate_rpg(m: int, seed: int | None = None, parametric: bool = True, reset: bool = False) -> tuple[Program, RPGSpec]:
    """Random phase gadgets on ``m`` qubits with ``d = m`` layers.

    With odd ``m`` the last qubit of each permutation is left without a gadget.
    """
    if m < 2:
        raise ValueError("RPG needs at least two qubits")
    rng = np.random.default_rng(seed)
    perms = tuple(tuple(int(x) for x in rng.permutation(m)) for _ in range(m))
    alphas = _uniform_angles(rng, (m, m // 2))
    spec = RPGSpec(m, m, perms, tuple(tuple(float(a) for a in row) for row in alphas), seed)
    return rpg_program(spec, parametric, reset), spec


def ghz_line(m: int, reset: bool = False) -> Program:
    if m < 2:
        raise ValueError("GHZ_LINE needs at least two qubits")
    body = [Gate("H", (), (0,))]
    body += [Gate("CNOT", (), (q, q + 1)) for q in range(m - 1)]
    body += [Measure(q, MemoryRef("ro", q)) for q in range(m)]
    return Program((MemoryDeclaration("ro", "BIT", m),), tuple(body), reset_requested=reset)


def maxcut_qaoa_program(edges: Sequence[tuple[int, int]], n_qubits: int | None = None, reset: bool = False,
                        measure: bool = True) -> Program:
    """Depth-one QAOA ansatz with one ``gamma`` and one ``beta`` slot.

    Prepares |+...+> on the graph's nodes (or on ``0..n_qubits-1``),
    applies ``exp(-i gamma[0]/2 Z_a Z_b)`` per edge as a CNOT-RZ-CNOT gadget,
    then the mixer ``exp(-i beta[0]/2 X)`` per node. Slot values are
    therefore twice the angles of ``exp(-i gamma ZZ)`` and ``exp(-i beta X)``.
    """
    edges = [tuple(e) for e in edges]
    if not edges:
        raise ValueError("the graph has no edges")
    nodes = sorted({q for e in edges for q in e}) if n_qubits is None else list(range(n_qubits))
    gamma, beta = MemoryRef("gamma", 0), MemoryRef("beta", 0)
    body: list = [Gate("H", (), (q,)) for q in nodes]
    for a, b in edges:
        body += [Gate("CNOT", (), (a, b)), Gate("RZ", (gamma,), (b,)), Gate("CNOT", (), (a, b))]
    for q in nodes:
        body += [Gate("H", (), (q,)), Gate("RZ", (beta,), (q,)), Gate("H", (), (q,))]
    decls = [MemoryDeclaration("beta", "REAL", 1), MemoryDeclaration("gamma", "REAL", 1)]
    if measure:
        decls.append(MemoryDeclaration("ro", "BIT", len(nodes)))
        body += [Measure(q, MemoryRef("ro", j)) for j, q in enumerate(nodes)]
    return Program(tuple(decls), tuple(body), reset_requested=reset)


def maxcut_qaoa_complete(m: int, reset: bool = False) -> Program:
    if m < 2:
        raise ValueError("MAXCUTQAOA_COMPLETE needs at least two qubits")
    return maxcut_qaoa_program(list(combinations(range(m), 2)), m, reset)


def literal_program(program: Program, values) -> Program:
    """Bind ``values`` and drop the REAL regions that no longer have references."""
    bound = program.bind(values)
    used = {p.name for i in bound.body if isinstance(i, Gate) for p in i.params if isinstance(p, MemoryRef)}
    decls = tuple(d for d in bound.declarations if d.kind != "REAL" or d.name in used)
    return Program(decls, bound.body, bound.reset_requested)


@dataclass(frozen=True)
class Workload:
    """A parametric program plus a sampler of fresh parameter assignments."""

    name: str
    program: Program
    sample: Callable[[np.random.Generator], dict[MemoryRef, float]]


def _rpg_workload(m: int, seed, reset: bool) -> Workload:
    program, spec = generate_rpg(m, seed, True, reset)
    return Workload("RPG", program, lambda rng: spec.memory(spec.random_alphas(rng)))


def _qaoa_workload(m: int, seed, reset: bool) -> Workload:
    def sample(rng):
        g, b = _uniform_angles(rng, 2)
        return {MemoryRef("gamma", 0): float(g), MemoryRef("beta", 0): float(b)}

    return Workload("MAXCUTQAOA_COMPLETE", maxcut_qaoa_complete(m, reset), sample)


PROGRAM_FAMILIES: dict[str, Callable[[int, int | None, bool], Workload]] = {
    "RPG": _rpg_workload,
    "GHZ_LINE": lambda m, seed, reset: Workload("GHZ_LINE", ghz_line(m, reset), lambda rng: {}),
    "MAXCUTQAOA_COMPLETE": _qaoa_workload,
}
