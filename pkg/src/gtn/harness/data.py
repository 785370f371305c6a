"""CSV ingestion of data tensors and adjacency matrices.

A data tensor is stored as a header-free numeric grid whose cells, read row by
row and left to right, give the tensor in last-mode-fastest order. The writer
puts the last mode along the columns, so a ``2 x 3 x 4`` tensor becomes a
``6 x 4`` grid; the reader only requires the total cell count to match.
"""

import csv
from math import prod

import numpy as np

from gtn.tensor import ShapeError


class DataFormatError(ValueError):
    """A CSV cell could not be parsed; ``row`` and ``col`` are 1-based."""

    def __init__(self, path, row, col, cell):
        super().__init__(f"{path}: row {row}, column {col}: cannot parse {cell!r} as a number")
        self.row = row
        self.col = col


def read_grid(path):
    rows = []
    with open(path, newline="") as fh:
        for r, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not c.strip() for c in record):
                continue
            values = []
            for c, cell in enumerate(record, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(path, r, c, cell) from None
                if not np.isfinite(v):
                    raise DataFormatError(path, r, c, cell)
                values.append(v)
            if rows and len(values) != len(rows[0]):
                raise ShapeError(f"{path}: row {r} has {len(values)} cells, expected {len(rows[0])}")
            rows.append(values)
    if not rows:
        raise ShapeError(f"{path}: empty file")
    return np.array(rows, dtype=float)


def write_grid(path, grid):
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in grid:
            writer.writerow([repr(float(v)) for v in row])


def load_data_tensor(path, meta, samples=False):
    """Load a tensor with ``meta.shape``.

    With ``samples=True`` a leading sample mode is prepended and its size
    inferred from the number of cells.
    """
    grid = read_grid(path)
    shape = tuple(meta.shape) if hasattr(meta, "shape") else tuple(meta)
    per_item = prod(shape)
    if samples:
        if grid.size % per_item:
            raise ShapeError(f"{path}: {grid.size} cells is not a multiple of {per_item} = prod{shape}")
        shape = (grid.size // per_item,) + shape
    elif grid.size != per_item:
        raise ShapeError(f"{path}: {grid.size} cells, expected {per_item} for shape {shape}")
    return grid.reshape(shape)


def write_data_tensor(path, t):
    t = np.asarray(t, dtype=float)
    write_grid(path, t.reshape(-1, t.shape[-1]) if t.ndim >= 1 else t.reshape(1, 1))
