"""
Logger - Centralized logging configuration with JSON support.
Provides structured logging for solver runs, simulations and experiment sweeps.
"""

import logging
import json
from pathlib import Path
from datetime import datetime, timezone
from typing import Optional, Any

from .settings import Settings


# Optional attributes callers may attach through ``extra=``
EXTRA_FIELDS = ("commodity", "node", "level_value", "run")


class JSONFormatter(logging.Formatter):
    """Custom formatter that outputs logs in JSON format."""

    def format(self, record: logging.LogRecord) -> str:
        """
        Format log record as JSON.

        Args:
            record: The log record to format

        Returns:
            JSON-formatted log string
        """
        log_data: dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        for field in EXTRA_FIELDS:
            value = getattr(record, field, None)
            if value is not None:
                log_data[field] = value

        return json.dumps(log_data)


def _build_formatter(json_format: bool) -> logging.Formatter:
    if json_format:
        return JSONFormatter()
    return logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def setup_logger(
    name: str = "pcnflow",
    log_level: Optional[str] = None,
    log_file: Optional[str] = None,
    json_format: bool = False,
) -> logging.Logger:
    """
    Set up and configure a logger instance.

    Args:
        name: Logger name
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
            Falls back to PCNFLOW_LOG_LEVEL when omitted.
        log_file: Path to log file. If None, logs to console only.
        json_format: If True, use JSON format for logs

    Returns:
        Configured logger instance
    """
    level_name = (log_level or Settings.log_level()).upper()
    level = getattr(logging, level_name, logging.WARNING)

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False

    # Remove existing handlers to avoid duplicates
    logger.handlers.clear()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(_build_formatter(json_format))
    logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_path)
        file_handler.setLevel(level)
        file_handler.setFormatter(_build_formatter(json_format))
        logger.addHandler(file_handler)

    return logger


def configure_package_logging(
    log_level: Optional[str] = None,
    log_file: Optional[str] = None,
    json_format: bool = False,
) -> None:
    """Re-run setup_logger for every pcnflow logger created so far."""
    names = [
        name for name in logging.root.manager.loggerDict
        if name == "pcnflow" or name.startswith("pcnflow.")
    ]
    for name in sorted(names):
        setup_logger(name, log_level=log_level, log_file=log_file, json_format=json_format)
