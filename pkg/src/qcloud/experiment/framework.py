"""Pauli-setting experiments over a single parametric binary.

One binary serves every setting, flip pattern and parameter value::

    DECLARE <user regions>
    DECLARE measurement_alpha REAL[k]     # per measured qubit Euler basis change
    DECLARE measurement_beta REAL[k]
    DECLARE measurement_gamma REAL[k]
    DECLARE symmetrization REAL[k]        # 0 or pi: pre-measurement bit flip
    DECLARE calibration BIT[1]            # 1 skips the body (ground-state run)
    DECLARE ro BIT[k]
    JUMP-WHEN @experiment_readout calibration[0]
    <body>
    LABEL @experiment_readout
    RZ(measurement_alpha[j]) q; RX(pi/2) q; RZ(measurement_beta[j]) q; RX(-pi/2) q; RZ(measurement_gamma[j]) q
    RX(symmetrization[j]) q
    MEASURE q ro[j]
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..compiler import compile_program, euler_decompose
from ..device import DeviceModel
from ..executor import MemoryMap, execute, outcome_distribution, patch
from ..executor.execute import RESET_MODES
from ..gates import I2, rx, ry
from ..ir import Gate, JumpWhen, Label, Measure, MemoryDeclaration, MemoryRef, Program, QuilError, parse, to_quil
from .pauli import PauliObservable, parity
from .readout import ReadoutCalibration, binomial_standard_error

__all__ = [
    "BASIS_ROTATIONS",
    "basis_angles",
    "basis_change_suffix",
    "ExperimentSetting",
    "ExperimentSpec",
    "ExpectationEstimate",
    "Experiment",
    "ExperimentError",
    "run_experiment",
    "symmetrize_and_estimate",
    "calibrate",
    "RESERVED_REGIONS",
]

# rotation applied before a Z measurement to measure the given Pauli
BASIS_ROTATIONS = {"X": ry(-math.pi / 2), "Y": rx(math.pi / 2), "Z": I2}
RESERVED_REGIONS = (
    "measurement_alpha",
    "measurement_beta",
    "measurement_gamma",
    "symmetrization",
    "calibration",
    "ro",
)
_READOUT_LABEL = "experiment_readout"


class ExperimentError(ValueError):
    pass


def basis_angles(pauli: str) -> tuple[float, float, float]:
    """Euler angles (alpha, beta, gamma) of the basis change for one Pauli."""
    return euler_decompose(BASIS_ROTATIONS[pauli])


def _euler_gates(q: int, j: int) -> list[Gate]:
    a, b, g = (MemoryRef(f"measurement_{s}", j) for s in ("alpha", "beta", "gamma"))
    return [
        Gate("RZ", (a,), (q,)),
        Gate("RX", (math.pi / 2,), (q,)),
        Gate("RZ", (b,), (q,)),
        Gate("RX", (-math.pi / 2,), (q,)),
        Gate("RZ", (g,), (q,)),
    ]


def basis_change_suffix(observable: PauliObservable, qubits: Sequence[int] | None = None):
    """Parametric basis-change fragment and the slot values measuring ``observable``.

    ``qubits`` lists the qubits that get an Euler block (slot ``j`` serves
    ``qubits[j]``); by default only the non-Z part of the support, so a pure
    Z observable yields an empty fragment. Returns ``(gates, assignments)``.
    """
    bases = observable.bases
    if qubits is None:
        qubits = [q for q, p in observable.terms if p != "Z"]
    gates: list[Gate] = []
    values: dict[MemoryRef, float] = {}
    for j, q in enumerate(qubits):
        gates.extend(_euler_gates(q, j))
        for name, angle in zip(("alpha", "beta", "gamma"), basis_angles(bases.get(q, "Z"))):
            values[MemoryRef(f"measurement_{name}", j)] = angle
    return tuple(gates), values


@dataclass(frozen=True)
class ExperimentSetting:
    """One measurement basis; ``derived`` observables reuse its outcomes."""

    observable: PauliObservable
    derived: tuple[PauliObservable, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "derived", tuple(self.derived))
        bases = self.observable.bases
        for obs in self.derived:
            for q, p in obs.terms:
                if bases.get(q) != p:
                    raise ExperimentError(f"{obs} is not measurable in the {self.observable} basis")

    @classmethod
    def parse(cls, text: str, derived: Sequence[str] = ()) -> "ExperimentSetting":
        return cls(PauliObservable.parse(text), tuple(PauliObservable.parse(d) for d in derived))

    @property
    def observables(self) -> tuple[PauliObservable, ...]:
        return (self.observable, *self.derived)

    @property
    def support(self) -> tuple[int, ...]:
        return self.observable.support


@dataclass(frozen=True)
class ExperimentSpec:
    """Main body program, settings and acquisition options.

    ``shots`` is the budget per setting, split evenly over flip patterns;
    ``None`` selects exact outcome distributions instead of sampling.
    """

    program: Program
    settings: tuple[ExperimentSetting, ...]
    shots: int | None = 10_000
    symmetrization: str = "exhaustive"
    reset_mode: str = "passive"
    calibration: str = "plus_eigenstate"
    exhaustive_limit: int = 12

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(self.settings))
        if self.shots is not None and self.shots < 1:
            raise ExperimentError("shots must be >= 1")
        if self.symmetrization not in ("none", "exhaustive"):
            raise ExperimentError("symmetrization must be 'none' or 'exhaustive'")
        if self.calibration not in ("none", "plus_eigenstate"):
            raise ExperimentError("calibration must be 'none' or 'plus_eigenstate'")
        if self.reset_mode not in RESET_MODES:
            raise ExperimentError(f"reset_mode must be one of {RESET_MODES}")
        if not self.settings:
            raise ExperimentError("an experiment needs at least one setting")
        used = set(self.program.qubits)
        for s in self.settings:
            if not set(s.support) <= used:
                raise ExperimentError(f"setting {s.observable} acts on qubits the program does not use")

    @property
    def measured_qubits(self) -> tuple[int, ...]:
        return tuple(sorted({q for s in self.settings for q in s.support}))

    def to_dict(self) -> dict:
        return {
            "program": to_quil(self.program),
            "settings": [
                {"observable": str(s.observable), "derived": [str(d) for d in s.derived]} for s in self.settings
            ],
            "shots": self.shots,
            "symmetrization": self.symmetrization,
            "reset": self.reset_mode,
            "calibration": self.calibration,
            "exhaustive_limit": self.exhaustive_limit,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentSpec":
        try:
            settings = []
            for s in data["settings"]:
                if isinstance(s, str):
                    settings.append(ExperimentSetting.parse(s))
                else:
                    settings.append(ExperimentSetting.parse(s["observable"], s.get("derived", ())))
            return cls(
                program=parse(data["program"]),
                settings=tuple(settings),
                shots=data.get("shots", 10_000),
                symmetrization=data.get("symmetrization", "exhaustive"),
                reset_mode=data.get("reset", "passive"),
                calibration=data.get("calibration", "plus_eigenstate"),
                exhaustive_limit=int(data.get("exhaustive_limit", 12)),
            )
        except QuilError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ExperimentError(f"malformed experiment spec: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ExpectationEstimate:
    observable: str
    raw_mean: float
    raw_se: float
    symmetrized_mean: float
    symmetrized_se: float
    calibration: float | None
    calibration_se: float | None
    corrected_mean: float
    corrected_se: float
    shots: int | None
    patterns: int
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def build_experiment_program(spec: ExperimentSpec) -> Program:
    program = spec.program
    names = {d.name for d in program.declarations}
    clash = names.intersection(RESERVED_REGIONS)
    if clash:
        raise ExperimentError(f"region names reserved by the experiment framework: {sorted(clash)}")
    if program.has_measurement or program.has_control_flow:
        raise ExperimentError("the main body must be free of measurements and control flow")
    qubits = spec.measured_qubits
    k = len(qubits)
    decls = list(program.declarations)
    decls += [MemoryDeclaration(f"measurement_{s}", "REAL", k) for s in ("alpha", "beta", "gamma")]
    decls += [
        MemoryDeclaration("symmetrization", "REAL", k),
        MemoryDeclaration("calibration", "BIT", 1),
        MemoryDeclaration("ro", "BIT", k),
    ]
    body: list = [JumpWhen(_READOUT_LABEL, MemoryRef("calibration", 0)), *program.body, Label(_READOUT_LABEL)]
    for j, q in enumerate(qubits):
        body.extend(_euler_gates(q, j))
    for j, q in enumerate(qubits):
        body.append(Gate("RX", (MemoryRef("symmetrization", j),), (q,)))
    for j, q in enumerate(qubits):
        body.append(Measure(q, MemoryRef("ro", j)))
    reset = program.reset_requested or spec.reset_mode == "active"
    return Program(tuple(decls), tuple(body), reset_requested=reset)


@dataclass
class _Acquisition:
    """Flip-corrected outcomes for one basis: sampled rows or exact distributions."""

    columns: tuple[int, ...]  # readout column per support qubit
    patterns: list[int] = field(default_factory=list)
    bits: list[np.ndarray] = field(default_factory=list)
    dists: list[np.ndarray] = field(default_factory=list)

    def parity_stats(self, cols: Sequence[int], pattern_index: int | None = None) -> tuple[float, float, int | None]:
        """Mean and standard error of the parity over readout columns ``cols``."""
        picks = range(len(self.patterns)) if pattern_index is None else [pattern_index]
        if self.dists:
            mask = sum(1 << c for c in cols)
            vals = [
                float(np.dot(self.dists[i], _parity_table(self.dists[i].size, mask)))
                * _flip_sign(self.patterns[i], self.columns, cols)
                for i in picks
            ]
            return float(np.mean(vals)), 0.0, None
        rows = [parity(self.bits[i][:, list(cols)]) * _flip_sign(self.patterns[i], self.columns, cols) for i in picks]
        samples = np.concatenate(rows)
        mean = float(samples.mean())
        return mean, binomial_standard_error(mean, samples.size), int(samples.size)


def _parity_table(size: int, mask: int) -> np.ndarray:
    idx = np.arange(size)
    ones = np.array([bin(x).count("1") for x in (idx & mask)])
    return 1 - 2 * (ones % 2)


def _flip_sign(pattern: int, columns: tuple[int, ...], cols: Sequence[int]) -> int:
    flipped = sum(1 for j, c in enumerate(columns) if (pattern >> j) & 1 and c in cols)
    return -1 if flipped % 2 else 1


class Experiment:
    """Compiles the experiment program once; everything afterwards is patching.

    Calibration factors are measured lazily per setting support and cached,
    so a parameter sweep pays for them once.
    """

    def __init__(self, spec: ExperimentSpec, device: DeviceModel, seed=None, compiler=compile_program):
        self.spec = spec
        self.device = device
        self.program = build_experiment_program(spec)
        self.binary = compiler(self.program, device)
        self._seed = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
        self._calibrations: dict[tuple[int, ...], _Acquisition] = {}
        self._column = {q: j for j, q in enumerate(spec.measured_qubits)}

    # -- acquisition ------------------------------------------------------

    def _patterns(self, support: Sequence[int]) -> list[int]:
        if self.spec.symmetrization == "none":
            return [0]
        if len(support) > self.spec.exhaustive_limit:
            raise ExperimentError(
                f"exhaustive symmetrisation over {len(support)} qubits exceeds the limit of {self.spec.exhaustive_limit}"
            )
        return list(range(2 ** len(support)))

    def _memory(self, user: Mapping[MemoryRef, float], bases: Mapping[int, str], flips: Sequence[int], calibrating: bool):
        values = dict(user)
        for q, j in self._column.items():
            for name, angle in zip(("alpha", "beta", "gamma"), basis_angles(bases.get(q, "Z"))):
                values[MemoryRef(f"measurement_{name}", j)] = angle
            values[MemoryRef("symmetrization", j)] = math.pi if q in flips else 0.0
        values[MemoryRef("calibration", 0)] = int(calibrating)
        return values

    def _acquire(self, user, bases, support, calibrating, seed) -> _Acquisition:
        patterns = self._patterns(support)
        columns = tuple(self._column[q] for q in support)
        acq = _Acquisition(columns)
        shots = self.spec.shots
        seeds = _seed_sequence(seed).spawn(len(patterns))
        for pattern, child in zip(patterns, seeds):
            flips = [q for j, q in enumerate(support) if (pattern >> j) & 1]
            patched = patch(self.binary, self._memory(user, bases, flips, calibrating))
            acq.patterns.append(pattern)
            if shots is None:
                acq.dists.append(outcome_distribution(patched, self.device, self.spec.reset_mode))
            else:
                per_pattern = max(shots // len(patterns), 1)
                report = execute(patched, self.device, per_pattern, child, self.spec.reset_mode)
                acq.bits.append(report.bits)
        return acq

    def calibration_data(self, support: tuple[int, ...]) -> _Acquisition:
        if support not in self._calibrations:
            base = _seed_sequence(self._seed)
            seed = np.random.SeedSequence(base.entropy, spawn_key=(*base.spawn_key, 0x0CA1, *support))
            self._calibrations[support] = self._acquire({}, {}, support, True, seed)
        return self._calibrations[support]

    def calibrate(self, observable: PauliObservable, support: tuple[int, ...] | None = None) -> ReadoutCalibration:
        """Fit lambda for ``observable``'s support from ground-state runs over ``support``."""
        acq = self.calibration_data(tuple(support or observable.support))
        cols = [self._column[q] for q in observable.support]
        mean, se, _ = acq.parity_stats(cols)
        return ReadoutCalibration().fit_mean(mean, se)

    # -- estimation -------------------------------------------------------

    def estimate(self, setting: ExperimentSetting, memory=None, seed=None) -> list[ExpectationEstimate]:
        user = _as_assignments(memory)
        acq = self._acquire(user, setting.observable.bases, setting.support, False, seed)
        out = []
        for obs in setting.observables:
            cols = [self._column[q] for q in obs.support]
            raw, raw_se, _ = acq.parity_stats(cols, 0)
            sym, sym_se, n = acq.parity_stats(cols)
            flags: list[str] = []
            lam = lam_se = None
            corrected, corrected_se = sym, sym_se
            if self.spec.calibration == "plus_eigenstate":
                cal = self.calibrate(obs, setting.support)
                lam, lam_se = cal.lambda_, cal.lambda_se_
                if cal.usable_:
                    corrected, corrected_se = (float(v) for v in cal.transform([[sym, sym_se]])[0])
                else:
                    flags.append("lambda_zero")
            bound = 3 * corrected_se if corrected_se > 0 else 1e-9
            if abs(corrected) > 1 + bound:
                flags.append("outside_physical_range")
            out.append(ExpectationEstimate(
                observable=str(obs), raw_mean=raw, raw_se=raw_se, symmetrized_mean=sym, symmetrized_se=sym_se,
                calibration=lam, calibration_se=lam_se, corrected_mean=corrected, corrected_se=corrected_se,
                shots=n, patterns=len(acq.patterns), flags=tuple(flags),
            ))
        return out

    def run(self, memory=None, seed=None) -> list[ExpectationEstimate]:
        """Estimates for every observable of every setting, settings in spec order."""
        children = _seed_sequence(seed).spawn(len(self.spec.settings))
        out = []
        for setting, child in zip(self.spec.settings, children):
            out.extend(self.estimate(setting, memory, child))
        return out

    def sweep(self, points: Sequence, seed=None) -> list[list[ExpectationEstimate]]:
        children = _seed_sequence(seed).spawn(len(points))
        return [self.run(point, child) for point, child in zip(points, children)]


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _as_assignments(memory) -> dict[MemoryRef, float]:
    if memory is None:
        return {}
    if isinstance(memory, MemoryMap):
        return dict(memory.assignments)
    first = next(iter(memory), None)
    if first is None or isinstance(first, MemoryRef):
        return dict(memory)
    return dict(MemoryMap.from_dict(memory).assignments)


def run_experiment(spec: ExperimentSpec, device: DeviceModel, seed=None, memory=None) -> list[ExpectationEstimate]:
    return Experiment(spec, device, seed).run(memory, seed)


def symmetrize_and_estimate(spec: ExperimentSpec, setting: ExperimentSetting, device: DeviceModel, seed=None,
                            memory=None) -> ExpectationEstimate:
    if spec.symmetrization != "exhaustive":
        raise ExperimentError("symmetrize_and_estimate needs exhaustive symmetrisation")
    return Experiment(spec, device, seed).estimate(setting, memory, seed)[0]


def calibrate(setting: ExperimentSetting, device: DeviceModel, shots: int | None, seed=None,
              reset_mode: str = "passive") -> ReadoutCalibration:
    """Lambda for ``setting``'s Z-tensor on |0...0>, symmetrised over its support."""
    support = setting.support
    body = tuple(Gate("RZ", (0.0,), (q,)) for q in support)  # marks the qubits as used
    program = Program((), body)
    spec = ExperimentSpec(program, (setting,), shots=shots, reset_mode=reset_mode)
    cal = Experiment(spec, device, seed).calibrate(setting.observable)
    if not cal.usable_:
        raise ZeroDivisionError("lambda is zero; readout correction is impossible")
    return cal
