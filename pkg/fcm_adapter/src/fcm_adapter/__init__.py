"""Scoring service for the /score wire protocol plus a candidate generator.

The service wraps a factual-consistency model behind the same HTTP contract
the pipeline's remote scorer speaks; the generator writes candidate answer
files in the loop's JSONL schema. Both default to deterministic offline
backends so everything here is testable without a GPU or network.
"""
from .config import AdapterConfig
from .model import ModelLoadError, OfflineLexicalModel, load_model
from .service import build_app

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "ModelLoadError",
    "OfflineLexicalModel",
    "build_app",
    "load_model",
    "__version__",
]
