"""Runtime memory maps and data-memory patching."""

from __future__ import annotations

import json
import math
import numbers
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..compiler.binary import DataMemoryLayout, LayoutEntry, ParametricBinary
from ..ir import MemoryRef

__all__ = ["MemoryMap", "MemoryMapError", "PatchedBinary", "patch", "read_slot", "write_slot"]

_FORMATS = {"REAL": "<d", "INTEGER": "<q", "OCTET": "<B"}


class MemoryMapError(ValueError):
    pass


@dataclass(frozen=True)
class MemoryMap:
    """Assignments ``MemoryRef -> value`` applied to a binary's data memory."""

    assignments: Mapping[MemoryRef, float | int] = None

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments or {}))

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "MemoryMap":
        """Build from ``{region: [values...]}``; a bare scalar means ``[scalar]``."""
        if not isinstance(data, Mapping):
            raise MemoryMapError("a memory map must be an object of region -> list of values")
        out: dict[MemoryRef, float | int] = {}
        for name, values in data.items():
            if not isinstance(name, str):
                raise MemoryMapError(f"region names must be strings, got {name!r}")
            if not isinstance(values, (list, tuple)):
                values = [values]
            for i, v in enumerate(values):
                out[MemoryRef(name, i)] = v
        return cls(out)

    @classmethod
    def from_json(cls, text: str) -> "MemoryMap":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise MemoryMapError(f"memory map is not valid JSON: {exc}") from None

    def to_dict(self) -> dict[str, list]:
        regions: dict[str, dict[int, float | int]] = {}
        for ref, value in self.assignments.items():
            regions.setdefault(ref.name, {})[ref.index] = value
        return {name: [slots.get(i, 0) for i in range(max(slots) + 1)] for name, slots in sorted(regions.items())}

    def merged(self, other: "MemoryMap | Mapping[MemoryRef, float]") -> "MemoryMap":
        extra = other.assignments if isinstance(other, MemoryMap) else other
        return MemoryMap({**self.assignments, **extra})

    def __len__(self) -> int:
        return len(self.assignments)


def _check_value(entry: LayoutEntry, ref: MemoryRef, value):
    if isinstance(value, bool) and entry.kind != "BIT":
        raise MemoryMapError(f"{ref}: boolean given for a {entry.kind} region")
    if entry.kind == "REAL":
        if not isinstance(value, numbers.Real) or not math.isfinite(value):
            raise MemoryMapError(f"{ref}: REAL slots take finite numbers, got {value!r}")
        return float(value)
    if not isinstance(value, numbers.Integral):
        if isinstance(value, numbers.Real) and float(value).is_integer():
            value = int(value)
        else:
            raise MemoryMapError(f"{ref}: {entry.kind} slots take integers, got {value!r}")
    value = int(value)
    limits = {"BIT": (0, 1), "OCTET": (0, 255), "INTEGER": (-(2**63), 2**63 - 1)}[entry.kind]
    if not limits[0] <= value <= limits[1]:
        raise MemoryMapError(f"{ref}: value {value} out of range for {entry.kind}")
    return value


def write_slot(image: bytearray, entry: LayoutEntry, index: int, value) -> None:
    if entry.kind == "BIT":
        byte, bit = entry.offset + index // 8, index % 8
        image[byte] = (image[byte] & ~(1 << bit)) | (int(value) << bit)
    else:
        fmt = _FORMATS[entry.kind]
        struct.pack_into(fmt, image, entry.offset + index * struct.calcsize(fmt), value)


def read_slot(image: bytes, entry: LayoutEntry, index: int):
    if entry.kind == "BIT":
        return (image[entry.offset + index // 8] >> (index % 8)) & 1
    fmt = _FORMATS[entry.kind]
    return struct.unpack_from(fmt, image, entry.offset + index * struct.calcsize(fmt))[0]


@dataclass(frozen=True)
class PatchedBinary:
    """A binary plus a concrete data-memory image; the binary itself is never modified."""

    binary: ParametricBinary
    data_memory: bytes
    defaulted: tuple[MemoryRef, ...] = ()

    def __post_init__(self):
        if len(self.data_memory) != self.binary.data_layout.total_size:
            raise MemoryMapError("data memory image does not match the layout size")

    def read(self, ref: MemoryRef):
        return read_slot(self.data_memory, self.binary.data_layout.entry(ref.name), ref.index)

    def values(self) -> dict[MemoryRef, float | int]:
        return {
            MemoryRef(e.name, i): read_slot(self.data_memory, e, i)
            for e in self.binary.data_layout.entries
            for i in range(e.length)
        }


def _all_slots(layout: DataMemoryLayout) -> Iterable[MemoryRef]:
    for e in layout.entries:
        for i in range(e.length):
            yield MemoryRef(e.name, i)


def patch(binary: ParametricBinary, memory: MemoryMap | Mapping | None = None) -> PatchedBinary:
    """Write ``memory`` into a fresh zeroed data-memory image for ``binary``.

    Every slot not assigned keeps its default of zero; those slots, other
    than measurement targets, are listed in ``PatchedBinary.defaulted``.
    """
    if memory is None:
        memory = MemoryMap()
    elif not isinstance(memory, MemoryMap):
        first = next(iter(memory), None)
        memory = MemoryMap(memory) if isinstance(first, MemoryRef) else MemoryMap.from_dict(memory)
    layout = binary.data_layout
    image = bytearray(layout.total_size)
    for ref, value in memory.assignments.items():
        try:
            entry = layout.entry(ref.name)
        except KeyError:
            raise MemoryMapError(f"unknown memory region {ref.name!r}") from None
        if not 0 <= ref.index < entry.length:
            raise MemoryMapError(f"{ref} is out of bounds for {entry.name}[{entry.length}]")
        write_slot(image, entry, ref.index, _check_value(entry, ref, value))
    outputs = {entry.target for entry in binary.readout_layout}
    defaulted = tuple(ref for ref in _all_slots(layout) if ref not in memory.assignments and ref not in outputs)
    return PatchedBinary(binary, bytes(image), defaulted)
