"""Shared plumbing for the text file formats: atomic writes, headers, numbers."""

from __future__ import annotations

import os


class InputDataError(ValueError):
    """An input file or data table failed validation."""


class UsageError(ValueError):
    """A command was invoked with inconsistent or unknown options."""


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file, so a failed run never
    leaves a partial output behind."""
    tmp = f"{path}.part"
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_complex(z: complex) -> str:
    return f"({z.real:.16e},{z.imag:.16e})"


def parse_complex(token: str, where: str) -> complex:
    if not (token.startswith("(") and token.endswith(")")):
        raise InputDataError(f"{where}: malformed complex entry {token!r}")
    try:
        re_s, im_s = token[1:-1].split(",")
        return complex(float(re_s), float(im_s))
    except ValueError as exc:
        raise InputDataError(f"{where}: malformed complex entry {token!r}") from exc


def split_header(lines: list[str], path: str, magic: str,
                 body_marker: str | None = None) -> tuple[dict[str, str], int]:
    """Parse the leading ``key: value`` block of a file.

    Returns the header mapping and the index of the first body line.  The
    first line must equal ``magic``.  If ``body_marker`` is given the header
    ends at the line equal to it; otherwise it ends at the first line that
    does not contain a colon.
    """
    if not lines or lines[0].strip() != magic:
        raise InputDataError(f"{path}: expected first line {magic!r}")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        if body_marker is not None and line == body_marker:
            return header, i + 1
        if not line or line.startswith("#") or ":" not in line:
            if body_marker is None:
                return header, i
            raise InputDataError(f"{path}: line {i + 1}: expected 'key: value' "
                                 f"or {body_marker!r}, got {line!r}")
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
        i += 1
    if body_marker is not None:
        raise InputDataError(f"{path}: missing {body_marker!r} line")
    return header, i


def read_text_lines(path: str) -> list[str]:
    """Read a whole text file, mapping OS failures to input errors."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            return fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputDataError(f"{path}: cannot read file ({exc})") from exc


def sniff_magic(path: str) -> str:
    """Return the first line of a file (used to dispatch on file kind)."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            return fh.readline().strip()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputDataError(f"{path}: cannot read file ({exc})") from exc
