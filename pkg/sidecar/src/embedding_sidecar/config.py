"""Service configuration."""

from dataclasses import dataclass

DEFAULT_MODEL = "all-mpnet-base-v2"
FALLBACK_MODEL = "local-hash"


@dataclass(frozen=True)
class SidecarConfig:
    """Model choice, bind address, and per-inference batch cap.

    `model_name` may be any sentence-transformers model id, or
    "local-hash" to force the dependency-free fallback embedder.
    """

    model_name: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8601
    batch_size: int = 64

    def __post_init__(self):
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if not self.host:
            raise ValueError("host must be non-empty")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
