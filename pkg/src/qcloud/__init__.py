"""Simulated quantum-classical cloud platform for variational hybrid algorithms."""

from .compiler import compile_program, deserialize, nativize, serialize
from .device import DeviceModel, default_device, load_device
from .executor import MemoryMap, execute, patch, simulate_statevector
from .ir import Program, parse, to_quil

__version__ = "0.1.0"

__all__ = [
    "compile_program",
    "deserialize",
    "nativize",
    "serialize",
    "DeviceModel",
    "default_device",
    "load_device",
    "MemoryMap",
    "execute",
    "patch",
    "simulate_statevector",
    "Program",
    "parse",
    "to_quil",
]
