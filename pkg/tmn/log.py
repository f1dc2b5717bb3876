"""Logging setup for the command-line entry point."""

import logging
import os
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

# Summaries and logs share stderr; stdout carries JSONL only
err_console = Console(stderr=True)


def setup_logging(level: Optional[str] = None) -> None:
    level = (level or os.getenv("TMN_LOG_LEVEL") or "WARNING").upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False, rich_tracebacks=True)],
        force=True,
    )
    logging.getLogger("httpx").setLevel(max(logging.WARNING, logging.getLogger().level))
