"""
Loguru sinks for the workbench: stderr for progress, an optional rotating file.

Stdout carries command results only, so nothing here writes to it.
"""

import os
import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from multinet.core.errors import ConfigError

CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {thread.name} | {name}:{function}:{line} - {message}"


def resolve_level(log_level: Optional[str]) -> str:
    """Normalize a level name, falling back to MULTINET_LOG_LEVEL and then INFO."""
    level = (log_level or os.getenv("MULTINET_LOG_LEVEL") or "INFO").strip().upper()
    try:
        logger.level(level)
    except ValueError as e:
        raise ConfigError(f"unknown log level {log_level!r}") from e
    return level


def setup_logging(log_level: Optional[str] = None, log_file: Optional[str] = None) -> str:
    """
    Replace every loguru sink with the workbench ones.

    Args:
        log_level: Level name; unknown names raise ConfigError
        log_file: Optional path for a rotating plain-text log

    Returns:
        The level actually applied
    """
    level = resolve_level(log_level)
    logger.remove()

    logger.add(sys.stderr, level=level, format=CONSOLE_FORMAT, colorize=True)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        # trial and episode jobs log from worker threads
        logger.add(
            log_path,
            level=level,
            format=FILE_FORMAT,
            enqueue=True,
            rotation="10 MB",
            retention="30 days",
            compression="zip",
        )

    logger.debug(f"Logging initialized with level: {level}")
    return level
