from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .primitives import ConfidenceRectangle


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def atomic_write(path: Union[str, Path], text: str) -> None:
    """Write via a temp file in the target directory and os.replace."""
    path = Path(path)
    print(f"Writing to {path}...")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(document) -> str:
    return json.dumps(_plain(document), sort_keys=True, indent=2) + "\n"


def write_json(path: Union[str, Path], document) -> None:
    atomic_write(path, dumps_json(document))


def dumps_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    atomic_write(path, dumps_csv(header, rows))


def write_rectangles(path: Union[str, Path], rects: Sequence[ConfidenceRectangle]) -> None:
    write_csv(
        path,
        ("t", "h", "b_minus", "b_plus", "d", "T"),
        ((r.t, r.h, r.b_minus, r.b_plus, r.d, r.T) for r in rects),
    )


def write_data(path: Union[str, Path], values) -> None:
    """One value per line, full precision."""
    atomic_write(path, "".join(f"{float(v)!r}\n" for v in values))
