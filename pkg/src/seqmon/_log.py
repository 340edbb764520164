"""
Logging setup for command line use. Library modules only create loggers.
"""

import logging

from rich.logging import RichHandler

LOGGER_NAME = "seqmon"


def configure_logging(verbosity: int = 0) -> logging.Logger:
    """Attach a rich handler to the package logger.

    Args:
        verbosity: 0 for warnings, 1 for info, 2 or more for debug

    Returns:
        The configured package logger
    """
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(show_path=False, rich_tracebacks=False)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.propagate = False
    return logger
