"""Integer lattice helpers for frequency keys.

Frequencies live on an integer lattice inside a frequency module. These helpers
find a Z-basis of the lattice spanned by a set of integer vectors (row echelon
form, built with unimodular row operations only) and express vectors in that
basis.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def integer_basis(vectors: Iterable[Sequence[int]], dim: int | None = None) -> np.ndarray:
    """Return an echelon Z-basis (rows) of the lattice generated by ``vectors``.

    The result has shape ``(rank, dim)``. Pivot entries are positive and each
    row has zeros before its pivot column.
    """
    rows: dict[int, list[int]] = {}  # pivot column -> row
    width = dim
    for vec in vectors:
        v = [int(x) for x in vec]
        if width is None:
            width = len(v)
        for col in range(width):
            if v[col] == 0:
                continue
            row = rows.get(col)
            if row is None:
                if v[col] < 0:
                    v = [-x for x in v]
                rows[col] = v
                break
            g, a, b = _egcd(row[col], v[col])
            ra, va = row[col] // g, v[col] // g
            new_row = [a * r + b * x for r, x in zip(row, v)]
            v = [ra * x - va * r for r, x in zip(row, v)]
            if new_row[col] < 0:
                new_row = [-x for x in new_row]
            rows[col] = new_row
    if width is None:
        width = 0
    if not rows:
        return np.zeros((0, width), dtype=np.int64)
    return np.array([rows[c] for c in sorted(rows)], dtype=np.int64)


def lattice_coordinates(basis: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Integer coordinates ``x`` with ``x @ basis == keys`` (one row per key).

    Raises ``ValueError`` if some key is not in the lattice.
    """
    keys = np.atleast_2d(np.asarray(keys, dtype=np.int64))
    rem = keys.copy()
    coords = np.zeros((keys.shape[0], basis.shape[0]), dtype=np.int64)
    for i, row in enumerate(basis):
        pivot = int(np.flatnonzero(row)[0])
        q, r = np.divmod(rem[:, pivot], row[pivot])
        if np.any(r != 0):
            raise ValueError("key is not in the lattice")
        coords[:, i] = q
        rem -= np.outer(q, row)
    if np.any(rem != 0):
        raise ValueError("key is not in the lattice")
    return coords


def lcm_all(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out
