"""
Scenario file reader.

Scenarios are INI documents with the sections [market], [preferences],
[numerics] and [simulation]. Every problem is reported as a
``[section] key: message`` diagnostic, with the line number when the key
appears in the file, and raised as one ConfigError.
"""

from __future__ import annotations

import configparser
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.schemas.scenario_schemas import ScenarioConfig
from app.shared.errors import ConfigError

logger = logging.getLogger(__name__)

REQUIRED_SECTIONS = ("market", "preferences")
OPTIONAL_SECTIONS = ("numerics", "simulation")

_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_LINE = re.compile(r"^\s*([^=:\s]+)\s*[=:]")


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read scenario {path}: {e.strerror or str(e)}")
    return parse_scenario(text, name=path.stem)


def parse_scenario(text: str, name: str = "scenario") -> ScenarioConfig:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str  # keys are case sensitive
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(
            f"line {e.lineno}: expected a [section] header before {e.line.strip()!r}"
        )
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"line {e.lineno}: [{e.section}] appears twice")
    except configparser.DuplicateOptionError as e:
        raise ConfigError(
            f"line {e.lineno}: [{e.section}] {e.option}: key appears twice"
        )
    except configparser.ParsingError as e:
        lines = "; ".join(
            f"line {lineno}: cannot parse {line.strip()!r}" for lineno, line in e.errors
        )
        raise ConfigError(lines)

    locations = _key_locations(text)
    problems: List[str] = []
    for section in parser.sections():
        if section not in REQUIRED_SECTIONS + OPTIONAL_SECTIONS:
            problems.append(_diagnostic(locations, section, None, "unknown section"))
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            problems.append(f"[{section}]: required section is missing")
    if problems:
        raise ConfigError("\n".join(problems))

    data: Dict[str, object] = {"name": name}
    for section in parser.sections():
        data[section] = dict(parser.items(section))

    try:
        config = ScenarioConfig(**data)
    except ValidationError as e:
        raise ConfigError("\n".join(_describe(e, locations)))

    logger.debug(f"Scenario {name!r} parsed: {config.model_dump()}")
    return config


def _key_locations(text: str) -> Dict[Tuple[str, Optional[str]], int]:
    """(section, key) -> line number, and (section, None) for the header."""
    locations: Dict[Tuple[str, Optional[str]], int] = {}
    section: Optional[str] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_LINE.match(line)
        if header:
            section = header.group(1).strip()
            locations.setdefault((section, None), lineno)
            continue
        key = _KEY_LINE.match(line)
        if key and section is not None and not line.lstrip().startswith(("#", ";")):
            locations.setdefault((section, key.group(1)), lineno)
    return locations


def _diagnostic(
    locations: Dict[Tuple[str, Optional[str]], int],
    section: str,
    key: Optional[str],
    message: str,
) -> str:
    label = f"[{section}] {key}" if key else f"[{section}]"
    lineno = locations.get((section, key))
    prefix = f"line {lineno}: " if lineno else ""
    return f"{prefix}{label}: {message}"


def _describe(
    error: ValidationError, locations: Dict[Tuple[str, Optional[str]], int]
) -> List[str]:
    messages = []
    for item in error.errors():
        loc = [str(part) for part in item["loc"]]
        section = loc[0] if loc else "scenario"
        key = loc[1] if len(loc) > 1 else None
        message = item["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        if item["type"] == "extra_forbidden":
            message = "unknown key"
        elif item["type"] == "missing":
            message = "required key is missing"
        messages.append(_diagnostic(locations, section, key, message))
    return messages
