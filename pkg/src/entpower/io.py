"""Matrix files, CSV tables and run manifests.

Binary matrix layout (little endian)::

    bytes 0..7    magic b"EPMATRX1"
    bytes 8..15   rows, uint64
    bytes 16..23  cols, uint64
    bytes 24..    rows*cols complex entries, row-major, each as (re, im) float64

The text alternative is JSON lines: a header object ``{"rows": r, "cols": c}``
followed by one line per row, each a list of ``[re, im]`` pairs.
"""
from __future__ import annotations

import csv
import json
import struct
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAGIC = b"EPMATRX1"
HEADER = struct.Struct("<8sQQ")
MAX_ENTRIES = 1 << 26


class MatrixFormatError(ValueError):
    """Malformed matrix file; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def write_matrix(path, m: np.ndarray) -> None:
    m = np.ascontiguousarray(np.asarray(m, dtype=np.complex128))
    if m.ndim != 2:
        raise ValueError("only 2-d matrices can be written")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, m.shape[0], m.shape[1]))
        fh.write(m.astype("<c16").tobytes())


def write_matrix_jsonl(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=complex)
    with open(path, "w") as fh:
        fh.write(json.dumps({"rows": m.shape[0], "cols": m.shape[1]}) + "\n")
        for row in m:
            fh.write(json.dumps([[float(z.real), float(z.imag)] for z in row]) + "\n")


def _parse_binary(data: bytes) -> np.ndarray:
    if len(data) < HEADER.size:
        raise MatrixFormatError(f"truncated header: need {HEADER.size} bytes, file has {len(data)}",
                                len(data))
    magic, rows, cols = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if rows == 0 or cols == 0 or rows * cols > MAX_ENTRIES:
        raise MatrixFormatError(f"implausible shape {rows}x{cols}", 8)
    need = HEADER.size + 16 * rows * cols
    if len(data) != need:
        # report where the payload stops matching the declared shape
        raise MatrixFormatError(
            f"payload size mismatch: shape {rows}x{cols} needs {need} bytes, file has {len(data)}",
            min(len(data), need))
    m = np.frombuffer(data, dtype="<c16", offset=HEADER.size).reshape(rows, cols)
    bad = ~np.isfinite(m.view(np.float64).reshape(rows, cols, 2)).all(axis=2)
    if bad.any():
        k = int(np.flatnonzero(bad.ravel())[0])
        raise MatrixFormatError("non-finite matrix entry", HEADER.size + 16 * k)
    return m.astype(np.complex128)


def _parse_jsonl(data: bytes) -> np.ndarray:
    offset = 0
    lines = data.split(b"\n")
    records = []
    for line in lines:
        stripped = line.strip()
        if stripped:
            try:
                records.append((offset, json.loads(stripped)))
            except json.JSONDecodeError as exc:
                raise MatrixFormatError(f"invalid JSON: {exc.msg}", offset + exc.pos) from None
        offset += len(line) + 1
    if not records:
        raise MatrixFormatError("empty file", 0)
    off, head = records[0]
    if not isinstance(head, dict) or not {"rows", "cols"} <= head.keys():
        raise MatrixFormatError("first line must be a {\"rows\": r, \"cols\": c} header", off)
    rows, cols = head["rows"], head["cols"]
    if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
        raise MatrixFormatError(f"invalid shape {rows}x{cols}", off)
    body = records[1:]
    if len(body) != rows:
        where = body[rows][0] if len(body) > rows else len(data)
        raise MatrixFormatError(f"expected {rows} rows, found {len(body)}", where)
    out = np.empty((rows, cols), dtype=complex)
    for i, (off, row) in enumerate(body):
        if not isinstance(row, list) or len(row) != cols:
            raise MatrixFormatError(f"row {i} must be a list of {cols} [re, im] pairs", off)
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(x, (int, float)) and np.isfinite(x) for x in z)):
                raise MatrixFormatError(f"entry ({i}, {j}) is not a finite [re, im] pair", off)
            out[i, j] = complex(z[0], z[1])
    return out


def read_matrix(path) -> np.ndarray:
    """Read either format; the binary magic decides which parser runs."""
    data = Path(path).read_bytes()
    if data.startswith(MAGIC):
        return _parse_binary(data)
    if data.lstrip()[:1] == b"{":
        return _parse_jsonl(data)
    if len(data) >= len(MAGIC):
        raise MatrixFormatError(f"unrecognized file: bad magic {data[:8]!r}", 0)
    raise MatrixFormatError(f"truncated file of {len(data)} bytes", len(data))


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return "%.17g" % float(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Lossless CSV; returns the number of data rows."""
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(x) for x in row])
            n += 1
    return n


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        body = [[float(x) for x in row] for row in r]
    return header, np.array(body, dtype=float).reshape(len(body), len(header))


def write_manifest(path, command: str, params: dict, seed, outputs: Sequence, started: float,
                   version: str) -> None:
    manifest = {
        "command": command,
        "params": params,
        "seed": seed,
        "version": version,
        "outputs": [str(p) for p in outputs],
        "wall_seconds": time.perf_counter() - started,
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
