"""End-to-end drivers: Bell-state tomography, H2 VQE scan and Max-Cut QAOA sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ..benchmark.circuits import maxcut_qaoa_program
from ..compiler import compile_count
from ..device import DeviceModel
from ..ir import MemoryRef, Program, parse
from .framework import Experiment, ExperimentSetting, ExperimentSpec, ExpectationEstimate
from .pauli import PauliObservable, pauli_matrix, two_qubit_pauli_labels
from .tomography import LinearInversionTomography, pauli_label_observable

__all__ = [
    "BELL_PROGRAM",
    "H2_ANSATZ",
    "H2_COLUMNS",
    "TomographyResult",
    "bell_tomography",
    "H2Coefficients",
    "load_h2_coefficients",
    "h2_hamiltonian",
    "VQECurve",
    "vqe_h2",
    "QAOAResult",
    "maxcut_qaoa",
]

BELL_PROGRAM = "H 0\nCNOT 0 1"

# exp(-i theta X0 Y1)|01>: rotate X0 Y1 onto Z0 Z1, apply a ZZ phase gadget, rotate back.
# theta[0] carries 2*theta.
H2_ANSATZ = """DECLARE theta REAL[1]
X 1
H 0
RX(pi/2) 1
CNOT 0 1
RZ(theta[0]) 1
CNOT 0 1
H 0
RX(-pi/2) 1"""

H2_COLUMNS = ("R_angstrom", "g0", "g1", "g2", "g3", "g4", "g5")


# -- tomography ---------------------------------------------------------------


@dataclass
class TomographyResult:
    density_matrix: np.ndarray
    fidelity: float
    min_eigenvalue: float
    estimates: dict[str, ExpectationEstimate]
    compiles: int


def bell_tomography(device: DeviceModel, shots: int | None = 10_000, seed=None, correct: bool = True,
                    reset_mode: str = "passive") -> TomographyResult:
    """Reconstruct the state of ``H 0; CNOT 0 1`` from its 15 Pauli expectations."""
    labels = two_qubit_pauli_labels()
    settings = tuple(ExperimentSetting(pauli_label_observable(lab)) for lab in labels)
    spec = ExperimentSpec(parse(BELL_PROGRAM), settings, shots=shots, reset_mode=reset_mode,
                          calibration="plus_eigenstate" if correct else "none")
    before = compile_count()
    estimates = Experiment(spec, device, seed).run(seed=seed)
    compiles = compile_count() - before
    by_label = dict(zip(labels, estimates))
    tomo = LinearInversionTomography(2).fit({lab: e.corrected_mean for lab, e in by_label.items()})
    bell = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    return TomographyResult(tomo.density_matrix_, tomo.fidelity(bell), tomo.min_eigenvalue_, by_label, compiles)


# -- H2 VQE -------------------------------------------------------------------


@dataclass(frozen=True)
class H2Coefficients:
    bond_length: float
    g: tuple[float, float, float, float, float, float]


def load_h2_coefficients(path: str | Path | None = None) -> list[H2Coefficients]:
    """Read a ``R_angstrom,g0..g5`` CSV; ``#`` lines are comments. Defaults to the bundled sample."""
    if path is None:
        text = resources.files("qcloud.data").joinpath("h2_coefficients_sample.csv").read_text()
    else:
        text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != H2_COLUMNS:
        raise ValueError(f"coefficient file header must be {','.join(H2_COLUMNS)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(H2_COLUMNS):
            raise ValueError(f"row {lineno}: expected {len(H2_COLUMNS)} columns, got {len(row)}")
        try:
            values = [float(v) for v in row]
        except ValueError:
            raise ValueError(f"row {lineno}: non-numeric entry in {row}") from None
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"row {lineno}: non-finite entry")
        rows.append(H2Coefficients(values[0], tuple(values[1:])))
    if not rows:
        raise ValueError("coefficient file has no data rows")
    return rows


_H2_TERMS = ("Z0", "Z1", "Z0*Z1", "Y0*Y1", "X0*X1")


def h2_hamiltonian(g: Sequence[float]) -> np.ndarray:
    terms = [np.eye(4)] + [PauliObservable.parse(t).matrix(2) for t in _H2_TERMS]
    return sum(c * m for c, m in zip(g, terms))


@dataclass
class VQECurve:
    bond_length: float
    thetas: np.ndarray
    energies: np.ndarray
    energy_se: np.ndarray
    grid_min: float
    grid_argmin: float
    fit_min: float
    fit_argmin: float
    exact_ground: float
    compiles: int = 1

    @property
    def error(self) -> float:
        return self.fit_min - self.exact_ground


def _trig_fit(thetas: np.ndarray, energies: np.ndarray) -> tuple[float, float]:
    # E(theta) = a + b cos 2theta + c sin 2theta for this ansatz
    design = np.column_stack([np.ones_like(thetas), np.cos(2 * thetas), np.sin(2 * thetas)])
    (a, b, c), *_ = np.linalg.lstsq(design, energies, rcond=None)
    return float(a - math.hypot(b, c)), float(math.atan2(-c, -b) / 2)


def vqe_h2(coefficients: Sequence[H2Coefficients], device: DeviceModel, shots: int | None = 10_000, seed=None,
           n_theta: int = 250, theta_range: tuple[float, float] = (-math.pi / 2, math.pi / 2),
           correct: bool = True, reset_mode: str = "passive") -> list[VQECurve]:
    """Grid-scan the UCC ansatz and evaluate every bond length from the same measurements.

    Three settings per angle: Z0Z1 (also yielding Z0 and Z1), Y0Y1 and X0X1.
    Besides the grid minimum, each curve reports the minimum of the exact
    ``a + b cos 2theta + c sin 2theta`` least-squares fit over the grid.
    """
    settings = (
        ExperimentSetting.parse("Z0*Z1", ["Z0", "Z1"]),
        ExperimentSetting.parse("Y0*Y1"),
        ExperimentSetting.parse("X0*X1"),
    )
    spec = ExperimentSpec(parse(H2_ANSATZ), settings, shots=shots, reset_mode=reset_mode,
                          calibration="plus_eigenstate" if correct else "none")
    thetas = np.linspace(*theta_range, n_theta)
    before = compile_count()
    experiment = Experiment(spec, device, seed)
    points = [{MemoryRef("theta", 0): 2 * float(t)} for t in thetas]
    sweep = experiment.sweep(points, seed)
    compiles = compile_count() - before
    order = ("Z0", "Z1", "Z0*Z1", "Y0*Y1", "X0*X1")
    means = np.array([[{e.observable: e for e in point}[o].corrected_mean for o in order] for point in sweep])
    errors = np.array([[{e.observable: e for e in point}[o].corrected_se for o in order] for point in sweep])

    curves = []
    for row in coefficients:
        g = np.asarray(row.g)
        energies = g[0] + means @ g[1:]
        se = np.sqrt((errors**2) @ (g[1:] ** 2))
        i = int(np.argmin(energies))
        fit_min, fit_arg = _trig_fit(thetas, energies)
        exact = float(np.linalg.eigvalsh(h2_hamiltonian(g))[0])
        curves.append(VQECurve(row.bond_length, thetas, energies, se, float(energies[i]), float(thetas[i]),
                               fit_min, fit_arg, exact, compiles))
    return curves


# -- Max-Cut QAOA ---------------------------------------------------------------


@dataclass
class QAOAResult:
    edges: tuple[tuple[int, int], ...]
    betas: np.ndarray
    gammas: np.ndarray
    # zz[edge][beta_index, gamma_index]
    zz: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    zz_se: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    compiles: int = 1

    def cost(self) -> np.ndarray:
        """Expected cut size ``sum_edges (1 - <ZZ>)/2``."""
        return sum(0.5 * (1 - v) for v in self.zz.values())


def maxcut_qaoa(edges: Sequence[tuple[int, int]], device: DeviceModel, shots: int | None = 10_000, seed=None,
                betas: float | Sequence[float] = math.pi / 8, gammas: Sequence[float] | None = None,
                correct: bool = True, reset_mode: str = "passive") -> QAOAResult:
    """Depth-one QAOA for Max-Cut: corrected ``<Z_a Z_b>`` per edge over a (beta, gamma) grid.

    The cost unitary is ``exp(-i gamma Z_a Z_b)`` per edge and the mixer
    ``exp(-i beta X)`` per node.
    """
    edges = tuple(tuple(int(q) for q in e) for e in edges)
    if not edges:
        raise ValueError("the graph has no edges")
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    gammas = np.linspace(-math.pi / 2, math.pi / 2, 100) if gammas is None else np.asarray(gammas, dtype=float)
    program: Program = maxcut_qaoa_program(edges, measure=False)
    settings = tuple(ExperimentSetting(PauliObservable({a: "Z", b: "Z"})) for a, b in edges)
    spec = ExperimentSpec(program, settings, shots=shots, reset_mode=reset_mode,
                          calibration="plus_eigenstate" if correct else "none")
    before = compile_count()
    experiment = Experiment(spec, device, seed)
    points = [{MemoryRef("beta", 0): 2 * float(b), MemoryRef("gamma", 0): 2 * float(g)} for b in betas for g in gammas]
    sweep = experiment.sweep(points, seed)
    result = QAOAResult(edges, betas, gammas, compiles=compile_count() - before)
    shape = (betas.size, gammas.size)
    for j, edge in enumerate(edges):
        result.zz[edge] = np.array([p[j].corrected_mean for p in sweep]).reshape(shape)
        result.zz_se[edge] = np.array([p[j].corrected_se for p in sweep]).reshape(shape)
    return result
