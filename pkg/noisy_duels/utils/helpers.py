"""Logging setup and artifact writers."""

import io
import json
import logging
import os
import sys
import types
import warnings
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
from dotenv import load_dotenv
from loguru import logger
from rich.console import Console
from rich.logging import RichHandler

from noisy_duels.schemas import DTYPES, Schema

FLOAT_FORMAT = "%.17g"
FILE_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} | {message}"
)


class InterceptHandler(logging.Handler):
    """Intercept standard logging messages and route them to loguru."""

    def emit(self, record: logging.LogRecord) -> None:
        """Emit a log record to loguru."""
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level_map = {
                logging.CRITICAL: "CRITICAL",
                logging.ERROR: "ERROR",
                logging.WARNING: "WARNING",
                logging.INFO: "INFO",
                logging.DEBUG: "DEBUG",
            }
            level = level_map.get(record.levelno, "INFO")

        # Find the caller from where the logged message originated
        frame: Optional[types.FrameType] = sys._getframe(6)
        depth = 6
        while frame is not None and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def load_env_vars(env_file: Optional[str] = None) -> None:
    """Load DUEL_* settings from a .env file (the given one, or the nearest)."""
    if env_file:
        load_dotenv(env_file)
    else:
        load_dotenv()


def setup_logger(level: str = "INFO", log_file: Optional[str] = None):
    """
    Set up logging with Rich formatting on stderr.

    Args:
        level: Log level (e.g., "INFO", "DEBUG", "WARNING")
        log_file: Optional path to log file. If provided, logs will be written to file
                  in addition to the console.

    Returns:
        Configured loguru logger instance
    """
    logger.remove()
    logger.add(
        RichHandler(
            console=Console(stderr=True),
            show_time=True,
            show_level=True,
            show_path=False,
            markup=False,
            rich_tracebacks=True,
        ),
        format="{message}",
        level=level.upper(),
    )

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)
        logger.add(
            log_file,
            format=FILE_FORMAT,
            level=level.upper(),
            rotation="10 MB",
            retention="30 days",
        )

    # numpy RuntimeWarnings and stdlib logging end up in loguru as well
    logging.captureWarnings(True)
    warnings.simplefilter("default", RuntimeWarning)
    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)
    return logger


def typed_frame(frame: pd.DataFrame, schema: Schema) -> pd.DataFrame:
    """Order and cast the columns of `frame` as declared in `schema`."""
    missing = [column for column in schema if column not in frame.columns]
    if missing:
        raise KeyError(f"frame lacks columns {missing}")
    return frame[list(schema)].astype({c: DTYPES[s["data_type"]] for c, s in schema.items()})


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info("Wrote {}", out)


def frame_to_text(frame: pd.DataFrame, schema: Schema, fmt: str) -> str:
    """Render a frame as CSV (full precision, LF endings) or as a JSON list of records."""
    typed = typed_frame(frame, schema)
    if fmt == "csv":
        buffer = io.StringIO()
        typed.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()
    if fmt == "json":
        return json.dumps(typed.to_dict(orient="records"), indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def write_table(
    frame: pd.DataFrame, schema: Schema, fmt: str = "csv", out: Optional[Path] = None
) -> str:
    """Write a tabular artifact to `out` (stdout when None) and return its text."""
    text = frame_to_text(frame, schema, fmt)
    _emit(text, out)
    return text


def write_json(payload: Dict[str, Any], out: Optional[Path] = None) -> str:
    """Write a JSON document with sorted keys to `out` (stdout when None)."""
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _emit(text, out)
    return text
