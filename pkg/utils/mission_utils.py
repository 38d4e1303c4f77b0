"""Utility functions shared by the mission toolchain."""

import logging
import re
from pathlib import Path
from typing import Dict, Iterable

logger = logging.getLogger(__name__)


def sanitize_pddl_name(name: str) -> str:
    """Lower-case a name and keep only PDDL-safe characters.

    Args:
        name: Mission identifier

    Returns:
        Name made of ``[a-z0-9-]`` that starts with a letter

    Examples:
        >>> sanitize_pddl_name("Unit_1")
        'unit-1'
        >>> sanitize_pddl_name("1st")
        'a-1st'
    """
    cleaned = re.sub(r"[^a-z0-9-]", "-", name.lower())
    if not cleaned or not cleaned[0].isalpha():
        cleaned = "a-" + cleaned
    return cleaned


def unique_pddl_names(names: Iterable[str], reserved: Iterable[str] = ()) -> Dict[str, str]:
    """Map each name to a distinct sanitized PDDL name.

    Collisions get ``-2``, ``-3``, ... suffixes in input order.

    Examples:
        >>> unique_pddl_names(["C_1", "c-1"])
        {'C_1': 'c-1', 'c-1': 'c-1-2'}
    """
    taken = set(reserved)
    mapping: Dict[str, str] = {}
    for name in names:
        base = sanitize_pddl_name(name)
        candidate = base
        n = 2
        while candidate in taken:
            candidate = f"{base}-{n}"
            n += 1
        taken.add(candidate)
        mapping[name] = candidate
    return mapping


def default_stem(mission_path: str) -> str:
    """Mission path without its suffix.

    Examples:
        >>> default_stem("missions/goma.ortac")
        'missions/goma'
    """
    return str(Path(mission_path).with_suffix(""))


def is_balanced(text: str) -> bool:
    """True iff parentheses in ``text`` are balanced (``;`` comments ignored).

    Examples:
        >>> is_balanced("(and (at a n1))")
        True
    """
    depth = 0
    for line in text.splitlines():
        for char in line.split(";", 1)[0]:
            if char == "(":
                depth += 1
            elif char == ")":
                depth -= 1
                if depth < 0:
                    return False
    return depth == 0


class TextEncodingError(OSError):
    """A file that exists but is not UTF-8 text."""


def read_text(path: str) -> str:
    """Read a UTF-8 text file with universal newlines.

    Raises:
        OSError: the file cannot be opened or read
        TextEncodingError: the bytes are not valid UTF-8
    """
    with open(path, "rb") as f:
        data = f.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TextEncodingError(f"not valid UTF-8 (byte 0x{data[e.start]:02x} at offset {e.start})") from e
    return text.replace("\r\n", "\n").replace("\r", "\n")


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info(f"Wrote {path}")
