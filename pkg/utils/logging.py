"""
Logging utilities for eigsur.

This module provides logging configuration for surrogate builds and
evaluations. The level defaults to the EIGSUR_LOG environment variable
(a .env file is honoured) and falls back to INFO.
"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

ROOT_LOGGER = "eigsur"
LOG_ENV_VAR = "EIGSUR_LOG"


def resolve_log_level(level: Optional[str] = None) -> str:
    """
    Pick the effective log level name.

    Args:
        level: Explicit level; wins over the environment when given

    Returns:
        Upper-case level name known to the logging module
    """
    if level is None:
        load_dotenv()
        level = os.getenv(LOG_ENV_VAR, "INFO")
    level = level.upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "INFO"
    return level


def setup_logging(
    log_file: Optional[str] = None,
    level: Optional[str] = None,
    format_string: Optional[str] = None
) -> logging.Logger:
    """
    Set up logging for a surrogate run.

    Args:
        log_file: Path to log file (optional)
        level: Logging level (DEBUG, INFO, WARNING, ERROR); defaults to EIGSUR_LOG
        format_string: Custom format string

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(ROOT_LOGGER)

    # Clear any existing handlers
    logger.handlers.clear()

    level = resolve_log_level(level)
    logger.setLevel(getattr(logging, level))

    if format_string is None:
        format_string = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    formatter = logging.Formatter(format_string)

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(getattr(logging, level))
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # File handler if specified
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(getattr(logging, level))
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def get_logger(component: str) -> logging.Logger:
    """
    Get a logger for one component of eigsur.

    Args:
        component: Dotted component name, e.g. 'core.eigcore' or 'build.<run_id>'

    Returns:
        Child logger of the eigsur root logger
    """
    return logging.getLogger(f"{ROOT_LOGGER}.{component}")
