"""Simulated QPU description: topology, timing budget and readout noise."""

from __future__ import annotations

import configparser
import copy
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx

__all__ = ["DeviceModel", "DeviceModelError", "load_device", "default_device", "DURATION_KEYS", "OVERHEAD_KEYS"]

DURATION_KEYS = ("rx_pulse", "cz", "readout_capture", "feedback_latency")
OVERHEAD_KEYS = ("compile", "awg_load_arm", "awg_trigger", "network")


class DeviceModelError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceModel:
    """Topology, native-gate timing and per-qubit noise for one simulated QPU.

    ``readout_confusion[q] = (eps0, eps1)`` where ``eps0`` is the probability
    of reporting 1 for a qubit truly in |0> and ``eps1`` the probability of
    reporting 0 for a qubit truly in |1>.
    """

    qubit_count: int
    topology: tuple[tuple[int, int], ...]
    durations: dict[str, float]
    t1: tuple[float, ...]
    readout_confusion: tuple[tuple[float, float], ...]
    reset_ground_population: tuple[float, ...]
    step_overheads: dict[str, float]
    log2_quantum_volume: int = 3
    name: str = "device"
    _graph: nx.Graph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(sorted(tuple(sorted((int(a), int(b)))) for a, b in self.topology))
        object.__setattr__(self, "topology", tuple(dict.fromkeys(edges)))
        object.__setattr__(self, "t1", tuple(float(x) for x in self.t1))
        object.__setattr__(self, "readout_confusion", tuple((float(a), float(b)) for a, b in self.readout_confusion))
        object.__setattr__(self, "reset_ground_population", tuple(float(x) for x in self.reset_ground_population))
        object.__setattr__(self, "durations", {k: float(self.durations[k]) for k in DURATION_KEYS})
        object.__setattr__(self, "step_overheads", {k: float(self.step_overheads[k]) for k in OVERHEAD_KEYS})
        self._check()
        graph = nx.Graph()
        graph.add_nodes_from(range(self.qubit_count))
        graph.add_edges_from(self.topology)
        object.__setattr__(self, "_graph", graph)

    def _check(self) -> None:
        n = self.qubit_count
        if n < 1:
            raise DeviceModelError("qubit_count must be positive")
        for a, b in self.topology:
            if a == b:
                raise DeviceModelError(f"self-loop on qubit {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise DeviceModelError(f"edge ({a}, {b}) references a qubit outside 0..{n - 1}")
        for label, values in (("t1", self.t1), ("readout_confusion", self.readout_confusion),
                              ("reset_ground_population", self.reset_ground_population)):
            if len(values) != n:
                raise DeviceModelError(f"{label} needs {n} entries, got {len(values)}")
        if any(t <= 0 for t in self.t1):
            raise DeviceModelError("t1 values must be positive")
        for e0, e1 in self.readout_confusion:
            if not (0 <= e0 <= 1 and 0 <= e1 <= 1):
                raise DeviceModelError("readout error rates must lie in [0, 1]")
        if any(not 0 <= p <= 1 for p in self.reset_ground_population):
            raise DeviceModelError("reset_ground_population must lie in [0, 1]")
        for key, value in {**self.durations, **self.step_overheads}.items():
            if value < 0:
                raise DeviceModelError(f"{key} must be non-negative")
        if self.log2_quantum_volume < 1:
            raise DeviceModelError("log2_quantum_volume must be positive")

    # -- topology -------------------------------------------------------

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    def are_connected(self, a: int, b: int) -> bool:
        return self._graph.has_edge(a, b)

    def shortest_path(self, a: int, b: int) -> list[int]:
        try:
            return nx.shortest_path(self._graph, a, b)
        except nx.NetworkXNoPath:
            raise DeviceModelError(f"no path between qubits {a} and {b}") from None

    # -- timing ---------------------------------------------------------

    def passive_reset_time(self, qubits: Iterable[int]) -> float:
        qubits = list(qubits)
        if not qubits:
            return 0.0
        return 5.0 * max(self.t1[q] for q in qubits)

    @property
    def step_overhead(self) -> float:
        """Per-execution overhead excluding compilation."""
        s = self.step_overheads
        return s["awg_load_arm"] + s["awg_trigger"] + s["network"]

    # -- derived models -------------------------------------------------

    def with_readout(self, confusion: Sequence[tuple[float, float]] | tuple[float, float]) -> "DeviceModel":
        if confusion and isinstance(confusion[0], (int, float)):
            confusion = [tuple(confusion)] * self.qubit_count
        return replace(self, readout_confusion=tuple(tuple(c) for c in confusion))

    def noiseless(self) -> "DeviceModel":
        return replace(
            self,
            readout_confusion=((0.0, 0.0),) * self.qubit_count,
            reset_ground_population=(1.0,) * self.qubit_count,
        )

    def with_ground_population(self, p: float | Sequence[float]) -> "DeviceModel":
        if isinstance(p, (int, float)):
            p = [p] * self.qubit_count
        return replace(self, reset_ground_population=tuple(p))

    # -- serialisation --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "qubit_count": self.qubit_count,
            "log2_quantum_volume": self.log2_quantum_volume,
            "topology": [list(e) for e in self.topology],
            "durations": dict(self.durations),
            "step_overheads": dict(self.step_overheads),
            "t1": list(self.t1),
            "readout_confusion": [list(c) for c in self.readout_confusion],
            "reset_ground_population": list(self.reset_ground_population),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceModel":
        data = copy.deepcopy(data)
        try:
            return cls(
                qubit_count=int(data["qubit_count"]),
                topology=tuple(tuple(e) for e in data["topology"]),
                durations=data["durations"],
                t1=data["t1"],
                readout_confusion=data["readout_confusion"],
                reset_ground_population=data["reset_ground_population"],
                step_overheads=data["step_overheads"],
                log2_quantum_volume=int(data.get("log2_quantum_volume", 3)),
                name=data.get("name", "device"),
            )
        except KeyError as exc:
            raise DeviceModelError(f"device description is missing {exc.args[0]!r}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace("\n", " ").replace(",", " ").split()]


def _per_qubit(section: configparser.SectionProxy, key: str, n: int) -> list[float]:
    values = _floats(section[key])
    if len(values) == 1:
        values = values * n
    return values


def load_device(path: str | Path | None = None) -> DeviceModel:
    """Read a device profile.

    The profile is an INI document with ``[device]``, ``[durations]``,
    ``[step_overheads]`` and ``[qubits]`` sections; per-qubit entries are
    whitespace or comma separated lists, or a single value broadcast to
    every qubit. Durations are in seconds.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is None:
        text = resources.files("qcloud.data").joinpath("aspen4_like.ini").read_text()
        parser.read_string(text)
    else:
        with open(path) as fh:
            parser.read_file(fh)
    try:
        dev = parser["device"]
        n = dev.getint("qubit_count")
        edges = []
        for tok in dev["topology"].replace(",", " ").split():
            a, b = tok.split("-")
            edges.append((int(a), int(b)))
        qubits = parser["qubits"]
        eps0 = _per_qubit(qubits, "readout_epsilon0", n)
        eps1 = _per_qubit(qubits, "readout_epsilon1", n)
        return DeviceModel(
            qubit_count=n,
            topology=tuple(edges),
            durations={k: parser["durations"].getfloat(k) for k in DURATION_KEYS},
            step_overheads={k: parser["step_overheads"].getfloat(k) for k in OVERHEAD_KEYS},
            t1=_per_qubit(qubits, "t1", n),
            readout_confusion=tuple(zip(eps0, eps1)),
            reset_ground_population=_per_qubit(qubits, "reset_ground_population", n),
            log2_quantum_volume=dev.getint("log2_quantum_volume", 3),
            name=dev.get("name", "device"),
        )
    except (KeyError, ValueError, configparser.Error) as exc:
        if isinstance(exc, DeviceModelError):
            raise
        raise DeviceModelError(f"malformed device profile: {exc}") from None


_DEFAULT: DeviceModel | None = None


def default_device() -> DeviceModel:
    """The bundled ``aspen4-like`` profile."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_device()
    return _DEFAULT
