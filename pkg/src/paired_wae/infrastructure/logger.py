"""Logging infrastructure for the paired WAE application."""

import logging
import sys
from contextvars import ContextVar
from typing import Optional

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
RUN_FORMAT = "%(asctime)s - %(name)s - %(run)s - %(levelname)s - %(message)s"

# Label of the run being trained, e.g. "denoising(seed=7)"
current_run_context: ContextVar[Optional[str]] = ContextVar(
    "current_run", default=None
)
current_format: ContextVar[str] = ContextVar("current_format", default=DEFAULT_FORMAT)


class ShortNameFormatter(logging.Formatter):
    """Formatter that keeps only the last component of the logger name."""

    def format(self, record: logging.LogRecord) -> str:
        record.name = record.name.rsplit(".", 1)[-1]
        if not hasattr(record, "run"):
            record.run = current_run_context.get() or ""
        # The run format is switched per context, not per formatter instance
        self._style._fmt = current_format.get()
        return super().format(record)


def _stdout_handler(
    level: int, format_string: Optional[str] = None
) -> logging.Handler:
    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(level)
    handler.setFormatter(ShortNameFormatter(format_string or current_format.get()))
    return handler


def get_logger(
    name: str, level: Optional[int] = None, format_string: Optional[str] = None
) -> logging.Logger:
    """
    Get a logger writing to stdout through :class:`ShortNameFormatter`.

    Args:
        name: Logger name (usually __name__)
        level: Logging level (if None, inherits from root logger)
        format_string: Initial format string

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    logger.setLevel(logging.NOTSET if level is None else level)
    handler_level = logger.getEffectiveLevel() if level is None else level
    logger.addHandler(_stdout_handler(handler_level, format_string))
    logger.propagate = False
    return logger


def set_run_context(run_label: Optional[str]) -> None:
    """Tag subsequent log lines with ``run_label``."""
    current_run_context.set(str(run_label) if run_label else "")
    current_format.set(RUN_FORMAT)


def clear_run_context() -> None:
    """Clear the current run label."""
    current_run_context.set("")
    current_format.set(DEFAULT_FORMAT)


def configure_logging(verbose: bool = False) -> None:
    """
    Configure the root logger.

    Args:
        verbose: Enable verbose (DEBUG) logging
    """
    level = logging.DEBUG if verbose else logging.INFO
    root_logger = logging.getLogger()
    root_logger.handlers.clear()
    root_logger.setLevel(level)
    root_logger.addHandler(_stdout_handler(level))
