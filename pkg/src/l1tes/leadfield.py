"""Synthetic lead fields, CSV exchange, and the target split/projection.

Rows of a lead field are scalar current-density components. The synthetic
generator lays rows out as consecutive (x, y, z) triples of field points, so
``target_for_point(lf, p, d)`` selects rows ``3p, 3p+1, 3p+2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DimensionError(ValueError):
    pass


class DegenerateTargetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LeadField:
    matrix: np.ndarray
    field_points: np.ndarray | None = None
    electrode_positions: np.ndarray | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2:
            raise DimensionError(f"lead field must be 2-D, got shape {m.shape}")
        if m.shape[0] < 1 or m.shape[1] < 2:
            raise DimensionError(f"need N >= 1 rows and L >= 2 electrodes, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("lead field contains NaN or Inf")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_field_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_electrodes(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """Target support, orientation and amplitude.

    ``target_field`` is the unprojected target on the target rows; it defaults
    to ``target_direction`` (a target already aligned with the direction).
    """

    target_rows: tuple
    target_direction: np.ndarray
    target_amplitude: float = 3.85
    target_field: np.ndarray | None = None

    def __post_init__(self):
        rows = tuple(int(r) for r in np.atleast_1d(self.target_rows))
        if not rows:
            raise DegenerateTargetError("target_rows is empty")
        if len(set(rows)) != len(rows):
            raise ValueError("target_rows contains duplicates")
        d = np.asarray(self.target_direction, dtype=float).ravel()
        if d.size != len(rows):
            raise DimensionError(f"direction has {d.size} entries for {len(rows)} target rows")
        if not self.target_amplitude > 0:
            raise ValueError("target_amplitude must be positive")
        object.__setattr__(self, "target_rows", rows)
        object.__setattr__(self, "target_direction", d)
        if self.target_field is not None:
            f = np.asarray(self.target_field, dtype=float).ravel()
            if f.size != len(rows):
                raise DimensionError("target_field length must match target_rows")
            object.__setattr__(self, "target_field", f)


@dataclass(frozen=True, eq=False)
class SplitLeadField:
    l1: np.ndarray  # K x L, projected focused block
    l2: np.ndarray  # M x L, nuisance block
    x1: np.ndarray  # K, projected target
    electrodes: tuple | None = None  # original electrode indices of the columns

    @property
    def n_electrodes(self) -> int:
        return self.l1.shape[1]

    @property
    def n_nuisance(self) -> int:
        return self.l2.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        return np.vstack([self.l1, self.l2])

    def restrict(self, columns) -> "SplitLeadField":
        """Keep only the given electrode columns (montage restriction)."""
        cols = np.asarray(columns, dtype=int)
        base = self.electrodes if self.electrodes is not None else tuple(range(self.n_electrodes))
        return SplitLeadField(
            l1=self.l1[:, cols], l2=self.l2[:, cols], x1=self.x1,
            electrodes=tuple(base[c] for c in cols),
        )


def generate_synthetic_leadfield(seed: int, n_electrodes: int, n_field_rows: int,
                                 decay: float, scale: float = 50.0,
                                 inner_radius: float = 0.75) -> LeadField:
    """Seeded point-source lead field on the unit sphere.

    Electrodes sit on the unit sphere; field points are uniform inside a ball
    of radius ``inner_radius``. Column j is the current density generated by a
    unit current injected at electrode j, modelled as
    ``scale * (r - e_j) / |r - e_j|**3 * exp(-decay * |r - e_j|)``.
    Nearby electrodes therefore have strongly correlated columns.
    """
    if n_electrodes < 2 or n_field_rows < 1:
        raise DimensionError(f"need n_electrodes >= 2 and n_field_rows >= 1, got {n_electrodes}, {n_field_rows}")
    if not decay > 0:
        raise ValueError("decay must be positive")
    rng = np.random.default_rng(seed)
    e = rng.normal(size=(n_electrodes, 3))
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    n_points = -(-n_field_rows // 3)
    p = rng.normal(size=(n_points, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    p *= inner_radius * rng.uniform(size=(n_points, 1)) ** (1.0 / 3.0)

    diff = p[:, None, :] - e[None, :, :]  # points x electrodes x 3
    dist = np.linalg.norm(diff, axis=2)
    kernel = scale * np.exp(-decay * dist) / dist**3
    field = diff * kernel[:, :, None]
    matrix = field.transpose(0, 2, 1).reshape(3 * n_points, n_electrodes)[:n_field_rows]
    row_points = np.repeat(p, 3, axis=0)[:n_field_rows]
    return LeadField(matrix=matrix, field_points=row_points, electrode_positions=e)


def target_for_point(lf: LeadField, point: int, direction, amplitude: float = 3.85) -> TargetSpec:
    rows = tuple(r for r in range(3 * point, 3 * point + 3) if r < lf.n_field_rows)
    if not rows:
        raise DimensionError(f"field point {point} is outside the lead field")
    d = np.asarray(direction, dtype=float)[: len(rows)]
    return TargetSpec(target_rows=rows, target_direction=d, target_amplitude=amplitude)


def projector(direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float).ravel()
    nrm2 = float(d @ d)
    if nrm2 == 0.0:
        raise DegenerateTargetError("target direction is the zero vector")
    return np.outer(d, d) / nrm2


def split_and_project(lf: LeadField, t: TargetSpec) -> SplitLeadField:
    rows = np.asarray(t.target_rows, dtype=int)
    n = lf.n_field_rows
    if rows.min() < 0 or rows.max() >= n:
        raise DimensionError(f"target rows out of range for {n} field rows")
    P = projector(t.target_direction)
    mask = np.zeros(n, dtype=bool)
    mask[rows] = True
    raw_target = t.target_field if t.target_field is not None else t.target_direction
    x1 = P @ raw_target
    nrm = np.linalg.norm(x1)
    if nrm <= 1e-14 * max(1.0, np.linalg.norm(raw_target)):
        raise DegenerateTargetError("target field is orthogonal to the target direction")
    x1 = x1 * (t.target_amplitude / nrm)
    return SplitLeadField(l1=P @ lf.matrix[rows], l2=lf.matrix[~mask], x1=x1)


def save_leadfield_csv(lf: LeadField, path, comment: str | None = None) -> None:
    """Row-major CSV with a ``N,L`` header line; optional leading ``#`` comment."""
    n, l = lf.matrix.shape
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(f"{n},{l}\n")
        for row in lf.matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_leadfield_csv(path) -> LeadField:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    n, l = (int(v) for v in lines[0].split(","))
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if data.shape != (n, l):
        raise DimensionError(f"header says {n}x{l} but found {data.shape}")
    return LeadField(matrix=data)
