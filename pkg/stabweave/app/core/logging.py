"""Loguru sink setup. Bound `event` plus remaining extras are rendered on one line."""
from __future__ import annotations

import sys
from typing import Any

from loguru import logger

_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "{extra[service_name]} | {extra[event]} {extra[fields]} {message}"
)


def _patch(record: dict[str, Any]) -> None:
    extra = record["extra"]
    extra.setdefault("service_name", "-")
    extra.setdefault("event", "-")
    fields = {k: v for k, v in extra.items() if k not in ("service_name", "event", "fields")}
    extra["fields"] = " ".join(f"{k}={v}" for k, v in fields.items())


def configure_logging(level: str = "INFO") -> None:
    logger.remove()
    logger.configure(patcher=_patch)
    logger.add(sys.stderr, level=level.upper(), format=_FORMAT, backtrace=False, diagnose=False)
