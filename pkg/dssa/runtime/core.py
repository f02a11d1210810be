"""
Runtime Configuration Module

Handles process-level settings and the worker pool used to run independent
replications.

Key Concepts:
- Settings come from environment variables (optionally a .env file) and can
  be overridden by CLI flags.
- Replications are independent and carry their own RNG streams, so they can
  run in any order on any worker; results are always returned in input order.
- Output files are written atomically (temp file + rename).
"""

import os
import tempfile
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

from dotenv import load_dotenv
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..logging import get_logger

logger = get_logger(__name__)

load_dotenv()

T = TypeVar("T")
R = TypeVar("R")


# =============================================================================
# ENVIRONMENT SETTINGS
# =============================================================================

@dataclass(frozen=True)
class RuntimeConfig:
    """Process settings shared by every command."""
    threads: int = 1
    log_level: str = "INFO"
    output_root: Path = Path("runs")

    @classmethod
    def from_env(cls) -> "RuntimeConfig":
        """Create config from environment variables."""
        threads = int(os.getenv("DSSA_THREADS", "1"))
        return cls(
            threads=max(1, threads),
            log_level=os.getenv("DSSA_LOG_LEVEL", "INFO"),
            output_root=Path(os.getenv("DSSA_OUTPUT_ROOT", "runs")),
        )

    def with_threads(self, threads: int | None) -> "RuntimeConfig":
        if threads is None:
            return self
        return RuntimeConfig(threads=max(1, threads), log_level=self.log_level, output_root=self.output_root)


def get_runtime_config() -> RuntimeConfig:
    """Get runtime configuration from environment variables."""
    return RuntimeConfig.from_env()


# =============================================================================
# WORKER POOL
# =============================================================================

def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply ``fn`` to every item, in worker processes when ``threads > 1``.

    ``fn`` must be a picklable top-level function. Results keep input order.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    workers = min(threads, len(items))
    logger.info("Running %s tasks on %s worker processes", len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# =============================================================================
# ATOMIC FILE WRITES
# =============================================================================

@retry(
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.1, min=0.1, max=2),
    retry=retry_if_exception_type((PermissionError, BlockingIOError)),
    reraise=True,
)
def write_atomic(path: Path, content: str) -> Path:
    """Write text to ``path`` via a sibling temp file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("Wrote %s", path)
    return path


__all__ = [
    "RuntimeConfig",
    "get_runtime_config",
    "parallel_map",
    "write_atomic",
]
