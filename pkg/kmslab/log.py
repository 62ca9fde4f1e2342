"""Logging helpers: rich console handler on stderr, stdout stays clean for JSON."""

from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler


_ROOT = "kmslab"


def get_logger(name: str) -> logging.Logger:
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)


def configure_logging(level: str = "WARNING") -> None:
    root = logging.getLogger(_ROOT)
    root.setLevel(level.upper())
    if any(isinstance(handler, RichHandler) for handler in root.handlers):
        return
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=False,
    )
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root.addHandler(handler)
    root.propagate = False
