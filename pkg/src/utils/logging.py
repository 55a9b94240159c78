import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
import sys
from typing import Dict, Set

from src.config import LOG_LEVEL, LOG_FILE

RUN_LOG = "run.log"

# Names handed out by setup_logger; a run log is attached to all of them
_named: Set[str] = set()

_file_formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')


def _level() -> int:
    return getattr(logging, LOG_LEVEL.upper(), logging.INFO)


# Configure logging
def setup_logger(name=None):
    """
    Set up and configure logger

    Handlers are attached only on the first call for a given name, so
    modules and repeated CLI invocations in one process share them.
    Console output goes to stderr; stdout carries the reports.

    Args:
        name: Optional logger name

    Returns:
        Configured logger instance
    """
    name = name or __name__
    logger = logging.getLogger(name)
    _named.add(name)

    level = _level()
    logger.setLevel(level)

    if logger.handlers:
        return logger

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
    console_handler.setLevel(level)

    file_handler = RotatingFileHandler(
        LOG_FILE,
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5,
        delay=True
    )
    file_handler.setFormatter(_file_formatter)
    file_handler.setLevel(level)

    logger.addHandler(console_handler)
    logger.addHandler(file_handler)
    logger.propagate = False

    return logger


class RunLog:
    """
    Copy of every cmsflow log line into `<out>/run.log` for one run

    Used as a context manager around a command so the output directory holds
    the log next to the diagnostics and reports it describes.
    """

    def __init__(self, directory: Path):
        self.path = Path(directory) / RUN_LOG
        self._handler = None
        self._attached: Dict[str, logging.Logger] = {}

    def __enter__(self) -> "RunLog":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handler = logging.FileHandler(self.path, mode="w")
        self._handler.setFormatter(_file_formatter)
        self._handler.setLevel(_level())
        for name in sorted(_named):
            logger = logging.getLogger(name)
            logger.addHandler(self._handler)
            self._attached[name] = logger
        return self

    def __exit__(self, *exc_info) -> None:
        for logger in self._attached.values():
            logger.removeHandler(self._handler)
        self._attached.clear()
        self._handler.close()
        self._handler = None
