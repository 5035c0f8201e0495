"""HTTP front end: a compile endpoint, an execute endpoint and a binary registry."""

from __future__ import annotations

import hashlib
import threading
import time
from typing import Any, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .compiler import CompilationError, ParametricBinary, compile_program, deserialize
from .config import PlatformConfig
from .device import DeviceModel
from .executor import ExecutionError, MemoryMap, MemoryMapError, execute, patch
from .ir import QuilError, parse

__all__ = ["BinaryRegistry", "create_app", "serve", "binary_id"]


def binary_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class BinaryRegistry:
    """Content-addressed store of serialised binaries; safe for concurrent use."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items: dict[str, bytes] = {}

    def add(self, binary: ParametricBinary) -> str:
        data = binary.to_bytes()
        key = binary_id(data)
        with self._lock:
            self._items[key] = data
        return key

    def get_bytes(self, key: str) -> bytes:
        with self._lock:
            return self._items[key]

    def get(self, key: str) -> ParametricBinary:
        return deserialize(self.get_bytes(key))

    def __contains__(self, key: str) -> bool:
        with self._lock:
            return key in self._items

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


class CompileRequest(BaseModel):
    quil: str
    reset_rounds: int = Field(3, ge=1)


class ExecuteRequest(BaseModel):
    binary_id: str
    memory: dict[str, Any] = Field(default_factory=dict)
    shots: int = Field(ge=1)
    seed: Optional[int] = None
    reset: str = "passive"


def _error(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"type": kind, "message": message}})


def create_app(config: PlatformConfig | None = None, device: DeviceModel | None = None) -> FastAPI:
    config = config or PlatformConfig()
    device = device or config.device
    registry = BinaryRegistry()
    app = FastAPI(title="qcloud", version="0.1.0")
    app.state.registry = registry
    app.state.device = device

    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        return _error(400, "malformed_request", str(exc.errors()))

    @app.post("/compile")
    def compile_endpoint(req: CompileRequest):
        try:
            binary = compile_program(parse(req.quil), device, req.reset_rounds)
        except (QuilError, CompilationError) as exc:
            return _error(422, type(exc).__name__, str(exc))
        key = registry.add(binary)
        layout = [
            {"name": e.name, "kind": e.kind, "length": e.length, "offset": e.offset}
            for e in binary.data_layout.entries
        ]
        return {"binary_id": key, "data_layout": layout, "readout": [str(r.target) for r in binary.readout_layout]}

    @app.post("/execute")
    def execute_endpoint(req: ExecuteRequest):
        if req.binary_id not in registry:
            raise HTTPException(status_code=404, detail=f"unknown binary id {req.binary_id}")
        binary = registry.get(req.binary_id)
        started = time.perf_counter()
        try:
            patched = patch(binary, MemoryMap.from_dict(req.memory))
            report = execute(patched, device, req.shots, req.seed, req.reset)
        except MemoryMapError as exc:
            return _error(400, "memory_map", str(exc))
        except ExecutionError as exc:
            return _error(400, "execution", str(exc))
        return {"result": report.to_json(), "wall_clock_s": time.perf_counter() - started}

    @app.get("/device")
    def device_endpoint():
        return device.to_dict()

    @app.get("/binaries/{key}")
    def binary_endpoint(key: str):
        if key not in registry:
            raise HTTPException(status_code=404, detail=f"unknown binary id {key}")
        return Response(registry.get_bytes(key), media_type="application/octet-stream")

    return app


def serve(config: PlatformConfig | None = None, host: str | None = None, port: int | None = None) -> None:
    import uvicorn

    config = config or PlatformConfig()
    uvicorn.run(create_app(config), host=host or config.host, port=port or config.port)
