"""
Logging Configuration for the Moran Spectral Lab

This module provides centralized logging configuration with:
- Rotating file handlers (prevents disk fill-up)
- One log file per lab component (system, measure, spectrum, dimension, verifier, lab)
- Colored console output via colorama
- A shared error log collecting failures from every component

The log directory defaults to ./logs and can be moved with MORAN_LOG_DIR.

Usage:
    from logger_config import get_logger

    logger = get_logger(__name__)
    logger.info("Canonical spectrum materialized to level 8")
"""

import logging
import logging.handlers
import os
from pathlib import Path
from typing import Optional

from colorama import Fore, Style, just_fix_windows_console

just_fix_windows_console()

FILE_FORMAT = '%(asctime)s | %(name)s | %(levelname)s | %(funcName)s:%(lineno)d | %(message)s'
CONSOLE_FORMAT = '%(levelname)s | %(name)s | %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class ColoredFormatter(logging.Formatter):
    """Console formatter that colors the level name"""

    COLORS = {
        'DEBUG': Fore.CYAN,
        'INFO': Fore.GREEN,
        'WARNING': Fore.YELLOW,
        'ERROR': Fore.RED,
        'CRITICAL': Fore.MAGENTA,
    }

    def format(self, record):
        # Work on a copy so file handlers keep the plain level name
        record = logging.makeLogRecord(record.__dict__)
        color = self.COLORS.get(record.levelname)
        if color:
            record.levelname = f"{color}{record.levelname}{Style.RESET_ALL}"
        return super().format(record)


def get_log_dir() -> Path:
    """Resolve (and create) the log directory"""
    log_dir = Path(os.getenv("MORAN_LOG_DIR", "logs"))
    log_dir.mkdir(parents=True, exist_ok=True)
    return log_dir


def setup_logger(
    name: str,
    log_file: Optional[str] = None,
    level: int = logging.INFO,
    console: bool = True,
    max_bytes: int = 10 * 1024 * 1024,  # 10 MB
    backup_count: int = 5
) -> logging.Logger:
    """
    Setup a logger with file and console handlers

    Args:
        name: Logger name (usually module name)
        log_file: Log file name (optional, defaults to <name>.log)
        level: Logging level
        console: Whether to output to console
        max_bytes: Maximum size of each log file before rotation
        backup_count: Number of backup log files to keep

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    if log_file is None:
        log_file = f"{name}.log"

    file_handler = logging.handlers.RotatingFileHandler(
        get_log_dir() / log_file,
        maxBytes=max_bytes,
        backupCount=backup_count,
        encoding='utf-8'
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(file_handler)

    if console:
        console_handler = logging.StreamHandler()
        # Library chatter stays in the files; the console only sees warnings and up
        console_handler.setLevel(max(level, logging.WARNING))
        console_handler.setFormatter(ColoredFormatter(CONSOLE_FORMAT))
        logger.addHandler(console_handler)

    return logger


def setup_error_logger() -> logging.Logger:
    """
    Setup the logger that captures errors across all lab components

    Returns:
        Error logger instance
    """
    error_logger = logging.getLogger('error')
    error_logger.setLevel(logging.ERROR)

    if error_logger.handlers:
        return error_logger

    error_handler = logging.handlers.RotatingFileHandler(
        get_log_dir() / "error.log",
        maxBytes=10 * 1024 * 1024,  # 10 MB
        backupCount=10,
        encoding='utf-8'
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(logging.Formatter(
        '%(asctime)s | %(name)s | %(levelname)s | %(pathname)s:%(lineno)d\n'
        '%(message)s\n'
        '----------------------------------------',
        datefmt=DATE_FORMAT
    ))
    error_logger.addHandler(error_handler)

    return error_logger


def get_logger(name: str) -> logging.Logger:
    """
    Get or create a logger with default configuration

    Args:
        name: Logger name

    Returns:
        Logger instance
    """
    logger = logging.getLogger(name)
    if not logger.handlers:
        return setup_logger(name)
    return logger


# Pre-configured loggers for the lab components
def get_system_logger() -> logging.Logger:
    """Get logger for moran_system.py"""
    return setup_logger('system')


def get_measure_logger() -> logging.Logger:
    """Get logger for measure_engine.py"""
    return setup_logger('measure')


def get_spectrum_logger() -> logging.Logger:
    """Get logger for the spectrum construction modules"""
    return setup_logger('spectrum')


def get_dimension_logger() -> logging.Logger:
    """Get logger for dimension_lab.py"""
    return setup_logger('dimension')


def get_verifier_logger() -> logging.Logger:
    """Get logger for spectrum_verifier.py"""
    return setup_logger('verifier')


def get_lab_logger() -> logging.Logger:
    """Get logger for the controller and CLI"""
    return setup_logger('lab', log_file='lab.log')


_error_logger = setup_error_logger()


def log_error(message: str, exc_info: bool = True):
    """
    Log an error to the error log

    Args:
        message: Error message
        exc_info: Include exception traceback
    """
    _error_logger.error(message, exc_info=exc_info)


if __name__ == "__main__":
    print("=" * 60)
    print("LOGGING SYSTEM TEST")
    print("=" * 60)

    system_log = get_system_logger()
    verifier_log = get_verifier_logger()

    system_log.debug("Validated prefix to depth 64")
    system_log.info("Built system cantor (b=4, q=2)")
    verifier_log.warning("Orthogonality failure at pair (0, 4)")

    try:
        raise ValueError("Test error for logging")
    except Exception:
        log_error("Test error occurred")

    print("\n" + "=" * 60)
    print("✅ Logging system test complete!")
    print(f"📁 Check the '{get_log_dir()}' directory for log files")
    print("=" * 60)
