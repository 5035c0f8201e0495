"""Volumetric circuit families and latency-model fitting."""

from .circuits import (
    PROGRAM_FAMILIES,
    RPGSpec,
    generate_rpg,
    ghz_line,
    literal_program,
    maxcut_qaoa_complete,
    maxcut_qaoa_program,
    rpg_program,
)
from .latency import (
    DEFAULT_SHOTS,
    BenchmarkResult,
    LatencyFit,
    LatencyModel,
    LatencySample,
    benchmark,
    compare_configurations,
    fit_latency,
    measure_latency,
    summary_table,
    write_csv,
    write_json,
)

__all__ = [name for name in dir() if not name.startswith("_")]
