"""Candidate grid, free-knot models, and interpolation bases.

The unknown curve is parameterized by knots pinned to a fixed uniform grid
of candidate sites. A model is (n, indices, values); interpolation between
knots is piecewise constant, piecewise linear, or a natural cubic spline.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels


class BasisKind(Enum):
    """Interpolation rule applied between knots."""

    CONSTANT = "constant"
    LINEAR = "linear"
    CUBIC_SPLINE = "cubic_spline"

    @property
    def kernel_id(self) -> int:
        return _BASIS_IDS[self]


_BASIS_IDS = {}  # populated below once the enum exists


@dataclass(frozen=True)
class CandidateGrid:
    """Uniformly spaced candidate sites z_1..z_{N_g} spanning the domain.

    Coordinates are stored explicitly so interpolation is bit-identical
    across runs.
    """

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 1 or coords.size < 2:
            raise ValueError("grid needs at least 2 coordinates")
        spacings = np.diff(coords)
        if np.any(spacings <= 0):
            raise ValueError("grid coordinates must be strictly increasing")
        h = spacings[0]
        if np.any(np.abs(spacings - h) > 1e-12 * max(abs(h), 1.0)):
            raise ValueError("grid spacing must be uniform")
        coords = coords.copy()
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def n_points(self) -> int:
        return self.coords.size

    @property
    def x_lo(self) -> float:
        return float(self.coords[0])

    @property
    def x_hi(self) -> float:
        return float(self.coords[-1])

    @property
    def spacing(self) -> float:
        return float(self.coords[1] - self.coords[0])


def build_grid(x_lo: float, x_hi: float, n_points: int) -> CandidateGrid:
    """Place ``n_points`` uniformly spaced candidate sites on [x_lo, x_hi].

    Raises ValueError for a degenerate domain (x_lo >= x_hi) or fewer than
    two points.
    """
    if not x_lo < x_hi:
        raise ValueError(f"degenerate domain: x_lo={x_lo} must be < x_hi={x_hi}")
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    return CandidateGrid(np.linspace(x_lo, x_hi, n_points))


@dataclass(frozen=True)
class KnotModel:
    """Trans-dimensional state: knot grid indices (sorted) and knot values.

    Both endpoint sites are always occupied, so interpolation never
    extrapolates. Instances are immutable; proposals build new ones.
    """

    knot_indices: np.ndarray
    knot_values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.knot_indices, dtype=np.int64).copy()
        vals = np.asarray(self.knot_values, dtype=float).copy()
        if idx.ndim != 1 or vals.ndim != 1 or idx.size != vals.size:
            raise ValueError("knot_indices and knot_values must be 1-d and co-indexed")
        if idx.size < 2:
            raise ValueError("a model needs at least the 2 endpoint knots")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("knot_indices must be strictly increasing")
        idx.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "knot_indices", idx)
        object.__setattr__(self, "knot_values", vals)

    @property
    def n(self) -> int:
        return self.knot_indices.size

    def validate_on_grid(self, grid: CandidateGrid) -> None:
        """Check endpoint occupancy and index range for ``grid``."""
        if self.knot_indices[0] != 0 or self.knot_indices[-1] != grid.n_points - 1:
            raise ValueError("both endpoint grid sites must be occupied")
        if self.knot_indices[-1] >= grid.n_points or self.knot_indices[0] < 0:
            raise ValueError("knot index outside grid")


_BASIS_IDS.update(
    {
        BasisKind.CONSTANT: _kernels.BASIS_CONSTANT,
        BasisKind.LINEAR: _kernels.BASIS_LINEAR,
        BasisKind.CUBIC_SPLINE: _kernels.BASIS_SPLINE,
    }
)

_NO_MOMENTS = np.zeros(0)


class CurveEvaluator:
    """Callable curve f(x) for one (model, grid, basis) triple.

    Spline moments are computed once at construction, so repeated
    evaluations (data sites, grid sites) share the setup cost. Evaluation
    goes through the shared kernels, which keeps it bit-identical to the
    jitted sampling engine.
    """

    def __init__(self, model: KnotModel, grid: CandidateGrid, basis: BasisKind):
        self.model = model
        self.grid = grid
        self.basis = basis
        self.knot_x = np.ascontiguousarray(grid.coords[model.knot_indices])
        self.knot_y = model.knot_values
        if basis is BasisKind.CUBIC_SPLINE:
            mo = np.empty(model.n)
            _kernels.natural_spline_moments(self.knot_x, self.knot_y, model.n, mo)
            self._moments = mo
        else:
            self._moments = _NO_MOMENTS

    def __call__(self, query: np.ndarray) -> np.ndarray:
        q = np.asarray(query, dtype=float)
        flat = np.ascontiguousarray(q.reshape(-1))
        out = np.empty(flat.size)
        _kernels.eval_curve(
            self.basis.kernel_id, self.knot_x, self.knot_y, self._moments,
            self.knot_x.size, flat, out,
        )
        return float(out[0]) if q.ndim == 0 else out


def interpolate(
    model: KnotModel,
    grid: CandidateGrid,
    basis: BasisKind,
    query: np.ndarray,
) -> np.ndarray:
    """Evaluate the model's curve at ``query`` points.

    Queries must lie inside [x_lo, x_hi]; the fixed endpoint knots make
    extrapolation unnecessary and it is rejected.
    """
    model.validate_on_grid(grid)
    q = np.asarray(query, dtype=float)
    if q.size and (q.min() < grid.x_lo or q.max() > grid.x_hi):
        raise ValueError("query outside the grid domain")
    return CurveEvaluator(model, grid, basis)(q)


def curve_on_grid(model: KnotModel, grid: CandidateGrid, basis: BasisKind) -> np.ndarray:
    """Curve values at every candidate site, exact at occupied sites.

    Occupied sites are overwritten with the stored knot values so the
    result is bit-identical to the state regardless of basis arithmetic.
    """
    out = interpolate(model, grid, basis, grid.coords)
    out[model.knot_indices] = model.knot_values
    return out
