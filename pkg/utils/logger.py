"""
Logging for the SPT toolkit: one process-wide setup shared by every module.

Module loggers live under the ``spt_toolkit`` namespace. INFO carries stage
boundaries and sweep/iteration summaries, DEBUG the per-bond diagnostics.
"""

import logging
from logging.handlers import RotatingFileHandler
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

NAMESPACE = 'spt_toolkit'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class ToolkitLogger:
    """Singleton owning the root handlers."""

    _instance: Optional['ToolkitLogger'] = None
    _initialized = False

    def __new__(cls) -> 'ToolkitLogger':
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self) -> None:
        if not self._initialized:
            self._setup_logging()
            ToolkitLogger._initialized = True

    @staticmethod
    def _file_handler(log_dir: Path) -> RotatingFileHandler:
        log_dir.mkdir(exist_ok=True)
        log_file = log_dir / f"{NAMESPACE}_{datetime.now():%Y%m%d}.log"
        return RotatingFileHandler(log_file, maxBytes=2_000_000, backupCount=5, encoding='utf-8')

    def _setup_logging(self) -> None:
        formatter = logging.Formatter(LOG_FORMAT)
        handlers = [logging.StreamHandler(sys.stdout), self._file_handler(Path("logs"))]

        root = logging.getLogger()
        root.setLevel(logging.INFO)
        # Clear existing handlers to avoid duplicate logs in some environments
        root.handlers = []
        for handler in handlers:
            handler.setFormatter(formatter)
            root.addHandler(handler)

        # Numerical libraries only get a say when something is wrong
        for noisy in ('scipy', 'numpy'):
            logging.getLogger(noisy).setLevel(logging.WARNING)

        self.logger = logging.getLogger(NAMESPACE)
        self.logger.setLevel(logging.INFO)
        self.logger.info("SPT toolkit logging initialized")

    def get_logger(self, name: str) -> logging.Logger:
        return logging.getLogger(f'{NAMESPACE}.{name}')

    def set_verbose(self, verbose: bool) -> None:
        """Switch every toolkit logger (and the root handlers) between INFO and DEBUG."""
        level = logging.DEBUG if verbose else logging.INFO
        self.logger.setLevel(level)
        logging.getLogger().setLevel(level)


# Global logger instance
toolkit_logger = ToolkitLogger()


def get_logger(name: str) -> logging.Logger:
    """Convenience function to get a logger for a module."""
    return toolkit_logger.get_logger(name)


def set_verbose(verbose: bool) -> None:
    toolkit_logger.set_verbose(verbose)
