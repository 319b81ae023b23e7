"""
Shared logger of the DNLS diffusion toolkit

Library modules hold `logger = get_logger()`; the CLI calls setup_logger once
per run to attach handlers from the `logging` section of config.yaml.
"""

import logging
import sys

LOGGER_NAME = "dnls_diffusion"
DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(config, name: str = LOGGER_NAME) -> logging.Logger:
    """
    Attach a stderr handler and, if `logging.file` is set, a file handler.

    Repeated calls replace the handlers, so one process can run several
    subcommands without duplicated lines.

    Args:
        config: Config providing logging.level, logging.format, logging.file
        name: Logger name

    Returns:
        The configured logger
    """
    logger = logging.getLogger(name)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    level = getattr(logging, str(config.get('logging.level', 'INFO')).upper(), logging.INFO)
    logger.setLevel(level)
    formatter = logging.Formatter(config.get('logging.format', DEFAULT_FORMAT))

    # stderr keeps stdout free for the verify table
    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = config.get('logging.file', f'{LOGGER_NAME}.log')
    if log_file:
        try:
            handlers.append(logging.FileHandler(log_file))
        except OSError as e:
            logger.warning(f"Could not open log file {log_file}: {e}")

    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    return logger


def get_logger(name: str = LOGGER_NAME) -> logging.Logger:
    """The named logger, configured or not."""
    return logging.getLogger(name)
