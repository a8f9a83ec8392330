"""
Datetime helper utilities.

Artefacts store timestamps in UTC as ISO 8601 strings with a trailing ``Z``.
Reproducible runs pin the timestamp to ``SOURCE_DATE_EPOCH`` (or the Unix
epoch) so that two runs emit identical bytes.
"""

from __future__ import annotations

import datetime as dt
import os

UTC = dt.UTC
_ISO_Z_SUFFIX = "+00:00"


def utc_now() -> dt.datetime:
    """Return the current UTC time as an aware datetime."""
    return dt.datetime.now(UTC)


def pinned_utc() -> dt.datetime:
    """Return ``SOURCE_DATE_EPOCH`` as an aware UTC datetime, falling back to the epoch."""
    raw = os.getenv("SOURCE_DATE_EPOCH", "0")
    try:
        seconds = int(raw)
    except ValueError:
        seconds = 0
    return dt.datetime.fromtimestamp(seconds, UTC)


def ensure_utc(value: dt.datetime) -> dt.datetime:
    """Convert a datetime to UTC; naive values are taken as UTC already."""
    if value.tzinfo is None:
        value = value.replace(tzinfo=UTC)
    return value.astimezone(UTC)


def utc_isoformat(value: dt.datetime | None = None) -> str:
    """Return an ISO 8601 string in UTC with a trailing Z suffix."""
    value = ensure_utc(value or utc_now())
    iso_string = value.isoformat()
    if iso_string.endswith(_ISO_Z_SUFFIX):
        return iso_string.replace(_ISO_Z_SUFFIX, "Z")
    return iso_string
