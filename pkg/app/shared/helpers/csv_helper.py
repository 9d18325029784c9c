from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Sequence


def format_value(value: Any) -> str:
    """17 significant digits for floats so values round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in header])
    return buffer.getvalue()


def write_files_atomically(out_dir: str | Path, files: Dict[str, str]) -> list[Path]:
    """
    Write every file to a temporary sibling first, then rename them all into
    place. Nothing is renamed unless every temporary file was written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged: list[tuple[str, Path]] = []
    try:
        for name, content in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out)
            staged.append((name, Path(tmp)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(content)
    except OSError:
        for _, tmp in staged:
            tmp.unlink(missing_ok=True)
        raise

    written = []
    for name, tmp in staged:
        target = out / name
        os.replace(tmp, target)
        written.append(target)
    return written
