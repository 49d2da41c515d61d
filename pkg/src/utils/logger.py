"""Logging utility: console + rotating project log, plus a per-run log in each output directory."""
import sys
from pathlib import Path

from loguru import logger

from config import LOG_FILE, LOG_LEVEL

RUN_LOG_NAME = "run.log"

# Remove default handler
logger.remove()

# Console; stderr keeps stdout free for piping
logger.add(
    sys.stderr,
    format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
    level=LOG_LEVEL,
    colorize=True,
)

# Project-wide log file
logger.add(
    LOG_FILE,
    format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function} - {message}",
    level=LOG_LEVEL,
    rotation="10 MB",
    retention="1 week",
    compression="zip",
)


def add_run_log(out_dir: Path, command: str) -> int:
    """
    Mirror one subcommand's records (DEBUG and up) into out_dir/run.log.

    Returns the handler id for remove_run_log.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return logger.add(
        out_dir / RUN_LOG_NAME,
        format="{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | " + command + " | {name}:{function} - {message}",
        level="DEBUG",
        mode="w",
    )


def remove_run_log(handler_id: int):
    logger.remove(handler_id)


__all__ = ["logger", "add_run_log", "remove_run_log", "RUN_LOG_NAME"]
