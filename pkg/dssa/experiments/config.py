"""
Experiment config loading.

Configs are TOML documents validated into ``ExperimentConfig``. Every
validation failure is reported as a ConfigError pointing at the line of the
offending key.
"""

import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from ..exceptions import ConfigError
from ..logging import get_logger
from .models import ExperimentConfig

logger = get_logger(__name__)

_HEADER = re.compile(r"^\s*\[+\s*([^\]]+?)\s*\]+\s*(#.*)?$")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-\"']+)\s*=")
_DECODE_LINE = re.compile(r"line (\d+)")


def locate_key(text: str, loc: tuple) -> Optional[int]:
    """1-based line of the key addressed by a pydantic error location."""
    keys = [str(part) for part in loc if isinstance(part, str)]
    if not keys:
        return None
    target = keys[-1]
    section: list[str] = []
    header_lines: dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        header = _HEADER.match(line)
        if header:
            section = [part.strip().strip("\"'") for part in header.group(1).split(".")]
            header_lines.setdefault(".".join(section), number)
            continue
        key = _KEY.match(line)
        if key and key.group(1).strip("\"'") == target and all(part in keys for part in section):
            return number
    # missing key: point at the deepest existing section on the path
    for depth in range(len(keys), 0, -1):
        name = ".".join(keys[:depth])
        if name in header_lines:
            return header_lines[name]
    return None


def parse_config(text: str, path: str = "<config>", overrides: Optional[dict[str, Any]] = None) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _DECODE_LINE.search(str(e))
        raise ConfigError(f"TOML syntax error: {e}", path=path, line=int(match.group(1)) if match else None) from e

    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        dotted = ".".join(str(part) for part in error["loc"])
        extra = f" (+{e.error_count() - 1} more)" if e.error_count() > 1 else ""
        raise ConfigError(f"{dotted}: {error['msg']}{extra}", path=path, line=locate_key(text, error["loc"])) from e


def load_config(path: Path, seed: Optional[int] = None, replications: Optional[int] = None,
                output: Optional[str] = None) -> ExperimentConfig:
    """Read and validate a TOML experiment config; CLI overrides win over file values."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", path=str(path)) from e
    config = parse_config(text, str(path), {"seed": seed, "replications": replications, "output": output})
    logger.info("Loaded config %s (%s on %s, seed=%s)", config.name, config.method, config.problem.family, config.seed)
    return config
