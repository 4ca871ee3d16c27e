"""File formats: .cgrid rasters, mask JSON, PGM ingestion, CSV and manifests.

The .cgrid container holds one complex raster:

    bytes 0..7    magic "CGRID\\0\\0\\1"
    bytes 8..11   header length L, 4-byte little-endian unsigned
    bytes 12..    UTF-8 JSON header {height, width, dtype: "c128",
                  order: "row-major"} of length L
    remainder     height*width samples as little-endian float64 pairs
                  (re, im), row-major

Masks are JSON objects {height, width, sampled_rows, factor, offset}.
All writes go through a write-temp-then-rename so concurrent stages never
observe partial files.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError
from .linop import ImageGrid, MaskSpec

CGRID_MAGIC = b"CGRID\x00\x00\x01"


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write a file atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def cgrid_bytes(grid: ImageGrid) -> bytes:
    header = json.dumps(
        {"height": grid.height, "width": grid.width, "dtype": "c128", "order": "row-major"},
        sort_keys=True,
    ).encode("utf-8")
    interleaved = np.empty(2 * grid.height * grid.width, dtype="<f8")
    interleaved[0::2] = grid.vector.real
    interleaved[1::2] = grid.vector.imag
    return (
        CGRID_MAGIC
        + len(header).to_bytes(4, "little")
        + header
        + interleaved.tobytes()
    )


def write_cgrid(path: str | Path, grid: ImageGrid) -> None:
    atomic_write_bytes(path, cgrid_bytes(grid))


def read_cgrid(path: str | Path) -> ImageGrid:
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:8] != CGRID_MAGIC:
        raise FormatError(f"{path}: bad or missing cgrid magic", offset=0)
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header length field", offset=8)
    header_len = int.from_bytes(data[8:12], "little")
    header_end = 12 + header_len
    if len(data) < header_end:
        raise FormatError(f"{path}: truncated JSON header", offset=12)
    try:
        header = json.loads(data[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: invalid JSON header ({exc})", offset=12) from exc
    for key in ("height", "width", "dtype", "order"):
        if key not in header:
            raise FormatError(f"{path}: header missing field '{key}'", offset=12)
    if header["dtype"] != "c128" or header["order"] != "row-major":
        raise FormatError(
            f"{path}: unsupported dtype/order {header['dtype']}/{header['order']}",
            offset=12,
        )
    height, width = int(header["height"]), int(header["width"])
    if height <= 0 or width <= 0:
        raise FormatError(f"{path}: non-positive dimensions in header", offset=12)
    expected = 16 * height * width
    payload = data[header_end:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload has {len(payload)} bytes, expected {expected}",
            offset=header_end,
        )
    flat = np.frombuffer(payload, dtype="<f8")
    return ImageGrid.from_vector(flat[0::2] + 1j * flat[1::2], (height, width))


def write_mask_json(path: str | Path, mask: MaskSpec) -> None:
    body = json.dumps(
        {
            "height": mask.height,
            "width": mask.width,
            "sampled_rows": list(mask.sampled_rows),
            "factor": mask.factor,
            "offset": mask.offset,
        },
        sort_keys=True,
        indent=2,
    )
    atomic_write_bytes(path, (body + "\n").encode("utf-8"))


def read_mask_json(path: str | Path) -> MaskSpec:
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid mask JSON ({exc})", offset=exc.pos) from exc
    try:
        return MaskSpec(
            height=int(payload["height"]),
            width=int(payload["width"]),
            sampled_rows=tuple(int(r) for r in payload["sampled_rows"]),
            factor=payload.get("factor"),
            offset=payload.get("offset"),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: mask JSON missing field {exc}") from exc


def read_pgm(path: str | Path) -> ImageGrid:
    """Read a binary (P5) PGM, scaling sample values onto [0, 1].

    Handles 1- and 2-byte samples; 2-byte samples are big-endian per the
    format. The result is lifted to a complex grid with zero imaginary part.
    """
    data = Path(path).read_bytes()
    if len(data) < 2 or data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (missing P5 magic)", offset=0)
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise FormatError(f"{path}: expected integer in PGM header", offset=start)
        fields.append(int(token))
    if pos >= len(data):
        raise FormatError(f"{path}: missing raster after PGM header", offset=pos)
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: invalid PGM dimensions or maxval", offset=2)
    nbytes = 2 if maxval > 255 else 1
    expected = width * height * nbytes
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise FormatError(
            f"{path}: raster has {len(raster)} bytes, expected {expected}", offset=pos
        )
    dtype = ">u2" if nbytes == 2 else "u1"
    values = np.frombuffer(raster, dtype=dtype).astype(np.float64) / maxval
    return ImageGrid(values.reshape(height, width).astype(np.complex128))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = []
    out = _CsvBuffer(lines)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(cell) for cell in row])
    atomic_write_bytes(path, "".join(lines).encode("utf-8"))


class _CsvBuffer:
    def __init__(self, lines: list):
        self._lines = lines

    def write(self, text: str) -> None:
        self._lines.append(text)


def _format_cell(cell):
    if isinstance(cell, float):
        return repr(cell)
    if isinstance(cell, (np.floating,)):
        return repr(float(cell))
    if isinstance(cell, (np.integer,)):
        return int(cell)
    return cell


def write_manifest(path: str | Path, payload: dict) -> None:
    body = json.dumps(payload, sort_keys=True, indent=2)
    atomic_write_bytes(path, (body + "\n").encode("utf-8"))


def read_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text("utf-8"))
