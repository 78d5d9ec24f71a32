"""Adapter configuration, loadable from a JSON file or the environment."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields

ENV_PREFIX = "FCM_ADAPTER_"


@dataclass(frozen=True)
class AdapterConfig:
    model: str = "offline-lexical"
    device: str = "cpu"
    # Exact attribution enumerates every token coalition of a sentence, so a
    # single request can carry up to 2**12 pairs; the default must admit it.
    max_batch: int = 4096
    port: int = 8100
    max_inflight: int = 4

    def __post_init__(self) -> None:
        if not self.model:
            raise ValueError("model identifier must be nonempty")
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        # Port 0 asks the OS for an ephemeral port, which tests rely on.
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
        if self.max_inflight < 1:
            raise ValueError(f"max_inflight must be >= 1, got {self.max_inflight}")


_INT_FIELDS = {"max_batch", "port", "max_inflight"}


def config_from_dict(raw: dict) -> AdapterConfig:
    known = {f.name for f in fields(AdapterConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return AdapterConfig(**raw)


def load_config(path: str | None = None) -> AdapterConfig:
    """File settings first, then FCM_ADAPTER_* environment overrides."""
    raw: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        raw.update(loaded)
    for f in fields(AdapterConfig):
        value = os.environ.get(ENV_PREFIX + f.name.upper())
        if value is None:
            continue
        raw[f.name] = int(value) if f.name in _INT_FIELDS else value
    return config_from_dict(raw)
