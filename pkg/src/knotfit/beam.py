"""Euler-Bernoulli beam finite elements: pressure curve -> deflections.

Two-node Hermite elements with (deflection, rotation) dofs per node. The
stiffness factorization depends only on the beam spec, so it is cached and
reused across pressure curves; one likelihood evaluation costs one
consistent-load assembly plus one triangular solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .inference import CurveFn

DOF_NAMES = ("deflection", "rotation")


@dataclass(frozen=True)
class BoundaryCondition:
    node: int
    dof: str  # "deflection" | "rotation"
    value: float = 0.0

    def __post_init__(self):
        if self.dof not in DOF_NAMES:
            raise ValueError(f"dof must be one of {DOF_NAMES}, got {self.dof!r}")


def clamped_base() -> tuple[BoundaryCondition, ...]:
    """Default support: deflection and rotation fixed at the x=0 node."""
    return (BoundaryCondition(0, "deflection"), BoundaryCondition(0, "rotation"))


@dataclass(frozen=True)
class BeamSpec:
    """Geometry, rigidity, and supports of the discretized beam.

    ``flexural_rigidity`` is either a positive scalar or one positive value
    per element (piecewise-constant EI).
    """

    length: float
    n_elements: int
    flexural_rigidity: float | np.ndarray
    boundary_conditions: tuple[BoundaryCondition, ...] = field(default_factory=clamped_base)

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("length must be positive")
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        ei = np.atleast_1d(np.asarray(self.flexural_rigidity, dtype=float))
        if ei.size == 1:
            ei = np.full(self.n_elements, float(ei[0]))
        if ei.size != self.n_elements:
            raise ValueError("flexural_rigidity must be scalar or one value per element")
        if np.any(ei <= 0):
            raise ValueError("EI must be positive everywhere")
        ei.setflags(write=False)
        object.__setattr__(self, "flexural_rigidity", ei)
        if len(self.boundary_conditions) < 2:
            raise ValueError("at least 2 constraints are needed to remove rigid-body modes")
        seen = set()
        for bc in self.boundary_conditions:
            if not 0 <= bc.node <= self.n_elements:
                raise ValueError(f"constraint node {bc.node} outside 0..{self.n_elements}")
            key = (bc.node, bc.dof)
            if key in seen:
                raise ValueError(f"duplicate constraint on node {bc.node} {bc.dof}")
            seen.add(key)
        object.__setattr__(self, "boundary_conditions", tuple(self.boundary_conditions))

    @property
    def element_length(self) -> float:
        return self.length / self.n_elements

    @property
    def n_nodes(self) -> int:
        return self.n_elements + 1

    def node_coords(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_nodes)


@dataclass(frozen=True)
class FemSolution:
    nodal_deflections: np.ndarray
    nodal_rotations: np.ndarray


def element_stiffness(EI: float, L: float) -> np.ndarray:
    """Classical 4x4 Hermite beam stiffness for constant EI."""
    if EI <= 0 or L <= 0:
        raise ValueError("EI and L must be positive")
    c = EI / L**3
    return c * np.array(
        [
            [12.0, 6.0 * L, -12.0, 6.0 * L],
            [6.0 * L, 4.0 * L**2, -6.0 * L, 2.0 * L**2],
            [-12.0, -6.0 * L, 12.0, -6.0 * L],
            [6.0 * L, 2.0 * L**2, -6.0 * L, 4.0 * L**2],
        ]
    )


def _moment_transform(L: float) -> np.ndarray:
    # Consistent-load map from pressure moments (F_p0..F_p3) to nodal forces,
    # derived from the Hermite shape functions (integration of f * N_i).
    return np.array(
        [
            [1.0, 0.0, -3.0 / L**2, 2.0 / L**3],
            [0.0, 1.0, -2.0 / L, 1.0 / L**2],
            [0.0, 0.0, 3.0 / L**2, -2.0 / L**3],
            [0.0, 0.0, -1.0 / L, 1.0 / L**2],
        ]
    )


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(5)


def pressure_moments(pressure: CurveFn, x_e: float, L: float) -> np.ndarray:
    """Moments int f(x) xi^p dx, p=0..3, xi = x - x_e, by 5-point Gauss rule.

    Exact for pressures up to cubic between the quadrature brackets, which
    covers every basis in scope.
    """
    xi = 0.5 * L * (_GAUSS_NODES + 1.0)
    w = 0.5 * L * _GAUSS_WEIGHTS
    fvals = np.asarray(pressure(x_e + xi), dtype=float)
    return np.array([np.sum(w * fvals * xi**p) for p in range(4)])


def equivalent_nodal_forces(pressure: CurveFn, x_e: float, L: float) -> np.ndarray:
    """Consistent nodal force 4-vector for a pressure curve on one element."""
    return _moment_transform(L) @ pressure_moments(pressure, x_e, L)


def _describe_null_vector(vec: np.ndarray, free: np.ndarray, n_dofs: int) -> str:
    full = np.zeros(n_dofs)
    full[free] = vec
    w = full[0::2]
    spread = np.ptp(w)
    scale = np.max(np.abs(w)) or 1.0
    if spread < 1e-8 * scale:
        return "rigid-body translation"
    if np.max(np.abs(np.diff(w, 2))) < 1e-8 * scale:
        return "rigid-body rotation"
    return "unconstrained mechanism"


class BeamAssembly:
    """Assembled, constrained, factorized stiffness for one BeamSpec."""

    def __init__(self, spec: BeamSpec):
        self.spec = spec
        n_dofs = 2 * spec.n_nodes
        L = spec.element_length
        K = np.zeros((n_dofs, n_dofs))
        for e in range(spec.n_elements):
            ke = element_stiffness(float(spec.flexural_rigidity[e]), L)
            sl = slice(2 * e, 2 * e + 4)
            K[sl, sl] += ke

        prescribed = np.array([2 * bc.node + DOF_NAMES.index(bc.dof) for bc in spec.boundary_conditions])
        self.prescribed_values = np.array([bc.value for bc in spec.boundary_conditions])
        self.free = np.setdiff1d(np.arange(n_dofs), prescribed)
        self.prescribed = prescribed
        self.K_fp = K[np.ix_(self.free, prescribed)]
        K_ff = K[np.ix_(self.free, self.free)]
        try:
            self.factor = cho_factor(K_ff)
            diag = np.abs(np.diag(self.factor[0]))
            if diag.min() <= 1e-7 * diag.max():
                raise np.linalg.LinAlgError  # semidefinite up to roundoff
        except np.linalg.LinAlgError:
            eigvals, eigvecs = np.linalg.eigh(K_ff)
            mode = _describe_null_vector(eigvecs[:, 0], self.free, n_dofs)
            raise ValueError(f"constrained stiffness is singular: {mode} remains free") from None
        self.n_dofs = n_dofs
        # cached quadrature points for whole-beam load assembly
        x_edges = np.arange(spec.n_elements) * L
        self._xi = 0.5 * L * (_GAUSS_NODES + 1.0)
        self._qw = 0.5 * L * _GAUSS_WEIGHTS
        self._qx = (x_edges[:, None] + self._xi[None, :]).ravel()
        self._T = _moment_transform(L)
        self._xi_pows = np.stack([self._xi**p for p in range(4)])  # (4, 5)

    def load_vector(self, pressure: CurveFn) -> np.ndarray:
        fvals = np.asarray(pressure(self._qx), dtype=float).reshape(self.spec.n_elements, 1, -1)
        moments = np.sum(self._qw * self._xi_pows * fvals, axis=2)  # (n_el, 4)
        fe = moments @ self._T.T  # (n_el, 4)
        f = np.zeros(self.n_dofs)
        for e in range(self.spec.n_elements):
            f[2 * e : 2 * e + 4] += fe[e]
        return f

    def solve(self, pressure: CurveFn) -> FemSolution:
        f = self.load_vector(pressure)
        rhs = f[self.free] - self.K_fp @ self.prescribed_values
        d = np.zeros(self.n_dofs)
        d[self.free] = cho_solve(self.factor, rhs)
        d[self.prescribed] = self.prescribed_values
        return FemSolution(nodal_deflections=d[0::2].copy(), nodal_rotations=d[1::2].copy())

    def deflection_at(self, sol: FemSolution, coords: np.ndarray) -> np.ndarray:
        """Hermite interpolation of the deflection inside elements."""
        x = np.asarray(coords, dtype=float)
        L = self.spec.element_length
        e = np.clip((x // L).astype(int), 0, self.spec.n_elements - 1)
        xi = x - e * L
        n1 = 2.0 * xi**3 / L**3 - 3.0 * xi**2 / L**2 + 1.0
        n2 = xi**3 / L**2 - 2.0 * xi**2 / L + xi
        n3 = -2.0 * xi**3 / L**3 + 3.0 * xi**2 / L**2
        n4 = xi**3 / L**2 - xi**2 / L
        w, th = sol.nodal_deflections, sol.nodal_rotations
        return n1 * w[e] + n2 * th[e] + n3 * w[e + 1] + n4 * th[e + 1]


def solve_beam(spec: BeamSpec, pressure: CurveFn) -> FemSolution:
    """Assemble, constrain, and solve for nodal deflections and rotations.

    For repeated solves against the same spec build a BeamAssembly (or a
    beam_forward) once; the factorization is pressure-independent.
    """
    return BeamAssembly(spec).solve(pressure)


class BeamForward:
    """Forward model g(f, x): deflections of the beam under pressure f."""

    def __init__(self, spec: BeamSpec, sensor_coords: np.ndarray):
        coords = np.asarray(sensor_coords, dtype=float)
        if coords.size and (coords.min() < 0 or coords.max() > spec.length):
            raise ValueError("sensor coordinates must lie inside [0, length]")
        self.assembly = BeamAssembly(spec)
        self.sensor_coords = coords

    def __call__(self, pressure: CurveFn, coords: np.ndarray) -> np.ndarray:
        sol = self.assembly.solve(pressure)
        return self.assembly.deflection_at(sol, coords)


def beam_forward(spec: BeamSpec, sensor_coords: np.ndarray) -> BeamForward:
    return BeamForward(spec, sensor_coords)
