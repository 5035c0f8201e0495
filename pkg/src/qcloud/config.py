"""Platform configuration and result persistence."""

from __future__ import annotations

import configparser
import csv
import json
import os
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .device import DeviceModel, default_device, load_device

__all__ = ["PlatformConfig", "ConfigError", "load_config", "CONFIG_ENV", "save_json", "save_csv"]

CONFIG_ENV = "QCLOUD_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PlatformConfig:
    """Where the device profile lives, execution defaults and service binding.

    ``device_path=None`` selects the bundled profile.
    """

    device_path: Path | None = None
    shots: int = 1000
    reset_mode: str = "passive"
    output_dir: Path = Path("qcloud-results")
    host: str = "127.0.0.1"
    port: int = 8000
    _device: DeviceModel | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.shots < 1:
            raise ConfigError("default shots must be >= 1")
        if self.reset_mode not in ("passive", "active"):
            raise ConfigError("reset mode must be 'passive' or 'active'")
        if not 0 < self.port < 65536:
            raise ConfigError(f"invalid port {self.port}")
        if self.device_path is not None and not Path(self.device_path).is_file():
            raise ConfigError(f"device profile {self.device_path} does not exist")
        device = load_device(self.device_path) if self.device_path is not None else default_device()
        object.__setattr__(self, "_device", device)

    @property
    def device(self) -> DeviceModel:
        return self._device


def load_config(path: str | Path | None = None) -> PlatformConfig:
    """Read an INI ``[platform]`` section; ``path`` falls back to ``$QCLOUD_CONFIG``.

    Keys: ``device`` (profile path, relative to the config file),
    ``shots``, ``reset``, ``output_dir``, ``host``, ``port``. With no file
    at all the built-in defaults apply.
    """
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return PlatformConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
        section = parser["platform"] if parser.has_section("platform") else parser[parser.default_section]
        base = path.parent
        device = section.get("device")
        return PlatformConfig(
            device_path=(base / device) if device else None,
            shots=section.getint("shots", 1000),
            reset_mode=section.get("reset", "passive"),
            output_dir=base / section.get("output_dir", "qcloud-results"),
            host=section.get("host", "127.0.0.1"),
            port=section.getint("port", 8000),
        )
    except (configparser.Error, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed config {path}: {exc}") from None


def _stamped(output_dir: Path, stem: str, suffix: str) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    return output_dir / f"{stem}-{stamp}-{uuid.uuid4().hex[:6]}{suffix}"


def save_json(output_dir: Path, stem: str, payload) -> Path:
    path = _stamped(Path(output_dir), stem, ".json")
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str))
    return path


def save_csv(output_dir: Path, stem: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = _stamped(Path(output_dir), stem, ".csv")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path
