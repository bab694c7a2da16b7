"""Reading and writing lattice functions.

CSV: a header row ``d,N1,...,Nd,m``, then one row ``i1,...,id,v1,...,vm`` per
site in row-major order. Binary: ``int64`` header ``d, N1..Nd, m`` followed by
the ``float64`` values in row-major order, little-endian.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .lattice import InvalidParameterError, LatticeDomain, LatticeFunction


def write_csv(u: LatticeFunction, path) -> None:
    d, ext, m = u.dim, u.domain.extent, u.components
    sites = u.domain.sites().reshape(-1, d)
    vals = u.values.reshape(-1, m)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([d, *ext, m])
        for s, v in zip(sites, vals):
            w.writerow([*map(int, s), *map(repr, map(float, v))])


def read_csv(path) -> LatticeFunction:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidParameterError(f"{path}: empty file")
    header = [int(x) for x in rows[0]]
    d = header[0]
    if len(header) != d + 2:
        raise InvalidParameterError(f"{path}: header must be d,N1..Nd,m")
    ext, m = tuple(header[1 : 1 + d]), header[-1]
    domain = LatticeDomain(ext)
    values = np.full(ext + (m,), np.nan)
    for row in rows[1:]:
        if not row:
            continue
        if len(row) != d + m:
            raise InvalidParameterError(f"{path}: expected {d + m} columns, got {len(row)}")
        idx = tuple(int(x) % n for x, n in zip(row[:d], ext))
        values[idx] = [float(x) for x in row[d:]]
    if np.isnan(values).any():
        raise InvalidParameterError(f"{path}: some sites are missing")
    return LatticeFunction(domain, values)


def write_binary(u: LatticeFunction, path) -> None:
    header = np.array([u.dim, *u.domain.extent, u.components], dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_binary(path) -> LatticeFunction:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or len(raw) < 8 * (int(np.frombuffer(raw[:8], dtype="<i8")[0]) + 2):
        raise InvalidParameterError(f"{path}: truncated header")
    d = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    header = np.frombuffer(raw[: 8 * (d + 2)], dtype="<i8")
    ext, m = tuple(int(n) for n in header[1 : 1 + d]), int(header[-1])
    data = np.frombuffer(raw[8 * (d + 2) :], dtype="<f8")
    if data.size != int(np.prod(ext)) * m:
        raise InvalidParameterError(f"{path}: payload size does not match the header")
    return LatticeFunction(LatticeDomain(ext), data.reshape(ext + (m,)).copy())


def read(path) -> LatticeFunction:
    return read_csv(path) if str(path).endswith(".csv") else read_binary(path)


def write(u: LatticeFunction, path) -> None:
    (write_csv if str(path).endswith(".csv") else write_binary)(u, path)
