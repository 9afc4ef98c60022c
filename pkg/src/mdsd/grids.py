"""Raster grids with validity masks and the MDSD-GRID v1 file format.

Grid convention: ``values[j, i]`` holds the cell whose center is at
(xmin + (i + 0.5) dx, ymin + (j + 0.5) dy); row 0 is the ymin edge.
Invalid cells are NaN in file form and False in ``valid_mask``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridFormatError(ValueError):
    """MDSD-GRID file violates the format; carries the offending line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class GridSpec:
    """Extent (km) and resolution of a raster."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise ValueError("extent must have positive width and height")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("resolution must be >= 1 in each axis")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    def cell_centers(self):
        """(X, Y) meshgrids of cell centers, each shaped (ny, nx)."""
        x = self.xmin + (np.arange(self.nx) + 0.5) * self.dx
        y = self.ymin + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y)

    def cell_points(self):
        """Cell centers flattened to an (nx*ny, 2) array, row-major."""
        xx, yy = self.cell_centers()
        return np.column_stack([xx.ravel(), yy.ravel()])


@dataclass
class IntensityGrid:
    """2-D raster of dust intensity (concentration or CDOD) with validity."""

    spec: GridSpec
    values: np.ndarray
    valid_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.spec.ny, self.spec.nx):
            raise ValueError(
                f"values shape {self.values.shape} != (ny, nx) = "
                f"({self.spec.ny}, {self.spec.nx})"
            )
        if self.valid_mask is None:
            self.valid_mask = np.isfinite(self.values)
        else:
            self.valid_mask = np.asarray(self.valid_mask, dtype=bool)
            if self.valid_mask.shape != self.values.shape:
                raise ValueError("valid_mask shape mismatch")
        if not np.all(np.isfinite(self.values[self.valid_mask])):
            raise ValueError("non-finite values inside valid mask")

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        s = self.spec
        return (
            (p[:, 0] >= s.xmin) & (p[:, 0] <= s.xmax)
            & (p[:, 1] >= s.ymin) & (p[:, 1] <= s.ymax)
        )

    def sample(self, points) -> np.ndarray:
        """Bilinear interpolation between cell centers, clamped at edges.

        Points must lie inside the grid extent.
        """
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if not np.all(self.contains(p)):
            raise ValueError("sample point outside grid extent")
        s = self.spec
        # fractional cell-center coordinates
        fx = np.clip((p[:, 0] - s.xmin) / s.dx - 0.5, 0.0, s.nx - 1.0)
        fy = np.clip((p[:, 1] - s.ymin) / s.dy - 0.5, 0.0, s.ny - 1.0)
        i0 = np.clip(np.floor(fx).astype(int), 0, s.nx - 2) if s.nx > 1 else np.zeros(len(p), dtype=int)
        j0 = np.clip(np.floor(fy).astype(int), 0, s.ny - 2) if s.ny > 1 else np.zeros(len(p), dtype=int)
        tx = fx - i0 if s.nx > 1 else np.zeros(len(p))
        ty = fy - j0 if s.ny > 1 else np.zeros(len(p))
        i1 = np.minimum(i0 + 1, s.nx - 1)
        j1 = np.minimum(j0 + 1, s.ny - 1)
        v = self.values
        out = (
            v[j0, i0] * (1 - tx) * (1 - ty)
            + v[j0, i1] * tx * (1 - ty)
            + v[j1, i0] * (1 - tx) * ty
            + v[j1, i1] * tx * ty
        )
        return out


def write_grid(path, grid: IntensityGrid, comments=()) -> None:
    """Write MDSD-GRID v1.  Invalid cells become the literal ``NaN``.

    ``comments`` are emitted as '#'-prefixed lines after the header.
    """
    s = grid.spec
    vals = np.where(grid.valid_mask, grid.values, np.nan)
    with open(path, "w") as fh:
        fh.write("MDSD-GRID v1\n")
        fh.write(f"{s.nx} {s.ny} {s.xmin:.10g} {s.xmax:.10g} {s.ymin:.10g} {s.ymax:.10g}\n")
        for comment in comments:
            fh.write(f"# {comment}\n")
        for row in vals:
            fh.write(",".join("NaN" if not np.isfinite(v) else f"{v:.12g}" for v in row))
            fh.write("\n")


def read_grid(path) -> IntensityGrid:
    """Read MDSD-GRID v1; raises :class:`GridFormatError` on violations."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise GridFormatError(1, "empty file")
    if lines[0].strip() != "MDSD-GRID v1":
        raise GridFormatError(1, f"unsupported header {lines[0].strip()!r}")
    if len(lines) < 2:
        raise GridFormatError(2, "missing dimension line")
    parts = lines[1].split()
    if len(parts) != 6:
        raise GridFormatError(2, "dimension line must be 'nx ny xmin xmax ymin ymax'")
    try:
        nx, ny = int(parts[0]), int(parts[1])
        xmin, xmax, ymin, ymax = map(float, parts[2:])
    except ValueError as exc:
        raise GridFormatError(2, str(exc)) from None
    spec = GridSpec(xmin, xmax, ymin, ymax, nx, ny)
    rows = []
    for lineno, raw in enumerate(lines[2:], start=3):
        if raw.startswith("#") or not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != nx:
            raise GridFormatError(lineno, f"expected {nx} cells, got {len(cells)}")
        row = np.empty(nx)
        for i, cell in enumerate(cells):
            token = cell.strip()
            if token == "NaN":
                row[i] = np.nan
                continue
            try:
                value = float(token)
            except ValueError:
                raise GridFormatError(lineno, f"bad number {token!r}") from None
            if not np.isfinite(value):
                raise GridFormatError(lineno, f"non-finite value {token!r}")
            row[i] = value
        rows.append(row)
    if len(rows) != ny:
        raise GridFormatError(len(lines), f"expected {ny} data rows, got {len(rows)}")
    values = np.vstack(rows)
    return IntensityGrid(spec, values, np.isfinite(values))
