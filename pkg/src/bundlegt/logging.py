"""This module defines custom logging handlers and the logging setup for the CLI."""

from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from collections import deque

from .constants import APP_NAME
from .utils.appdirs import get_log_path


__all__ = [
    "CachedHandler",
    "setup_logging",
]


class CachedHandler(logging.Handler):
    """Handler which stores past records

    This is used by the CLI to summarise warnings which were logged during a long run,
    for instance trials which hit the iteration cap or density evolution runs which
    did not settle.

    :param level: Initial log level. Defaults to NOTSET.
    :param maxlen: Maximum number of records to store. If ``None``, all records will be
        stored. Defaults to ``None``.
    """

    cached_records: deque[logging.LogRecord]

    def __init__(self, level: int = logging.NOTSET, maxlen: int | None = None) -> None:
        super().__init__(level=level)
        self.cached_records = deque([], maxlen)

    def emit(self, record: logging.LogRecord) -> None:
        """
        Saves the specified log record to the cache.

        :param record: Log record.
        """
        self.cached_records.append(record)

    def getLastMessage(self) -> str:
        """
        :returns: The log message of the last record or an empty string.
        """
        try:
            last_record = self.cached_records[-1]
            return last_record.getMessage()
        except IndexError:
            return ""

    def getAllMessages(self) -> list[str]:
        """
        :returns: A list of all record messages.
        """
        return [r.getMessage() for r in self.cached_records]

    def clear(self) -> None:
        """
        Clears all cached records.
        """
        self.cached_records.clear()


def setup_logging(
    log_level: int = logging.INFO,
    log_to_stderr: bool = True,
    log_to_file: bool = True,
) -> tuple[
    RotatingFileHandler | logging.NullHandler,
    logging.StreamHandler | logging.NullHandler,
    CachedHandler,
]:
    """
    Sets up logging handlers for the package logger. The following handlers are
    installed:

    * RotatingFileHandler: Writes logs to ``bundlegt.log`` in the platform log
      directory. Replaced by a null handler if ``log_to_file`` is ``False``.
    * StreamHandler: Writes logs to stderr. This will be replaced by a null handler if
      ``log_to_stderr`` is ``False``.
    * CachedHandler: Keeps all records of level WARNING and higher in memory.

    Any previous handlers are cleared.

    :param log_level: Log level for the file and stream handlers.
    :param log_to_stderr: Whether to log to stderr.
    :param log_to_file: Whether to log to the rotating log file.
    :returns: (log_handler_file, log_handler_stream, log_handler_cached)
    """

    root_logger = logging.getLogger(APP_NAME)
    root_logger.setLevel(min(log_level, logging.INFO))

    root_logger.handlers.clear()  # clean up any previous handlers

    log_fmt_long = logging.Formatter(
        fmt="%(asctime)s %(module)s %(levelname)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    # Log to file.
    log_handler_file: RotatingFileHandler | logging.NullHandler

    if log_to_file:
        log_file_path = get_log_path(APP_NAME, f"{APP_NAME}.log")
        log_handler_file = RotatingFileHandler(
            log_file_path, maxBytes=10**7, backupCount=1
        )
    else:
        log_handler_file = logging.NullHandler()

    log_handler_file.setFormatter(log_fmt_long)
    log_handler_file.setLevel(log_level)
    root_logger.addHandler(log_handler_file)

    # Log to stderr if requested.
    log_handler_stream: logging.StreamHandler | logging.NullHandler

    if log_to_stderr:
        log_handler_stream = logging.StreamHandler()
    else:
        log_handler_stream = logging.NullHandler()
    log_handler_stream.setFormatter(log_fmt_long)
    log_handler_stream.setLevel(log_level)
    root_logger.addHandler(log_handler_stream)

    # Keep warnings for the end of run summary.
    log_handler_cached = CachedHandler(level=logging.WARNING, maxlen=1000)
    root_logger.addHandler(log_handler_cached)

    return log_handler_file, log_handler_stream, log_handler_cached
