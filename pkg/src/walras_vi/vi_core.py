"""Variational inequality problems, solvers, and desk-scale oracles.

A problem pairs an excess-demand map E with a bounded convex region X.
Two solution notions are handled throughout:

* primal (Stampacchia): find x* with E(x*).(p - x*) >= 0 for all p in X;
* dual (Minty), the stationary price vectors: E(p).(p - x*) >= 0 for all p.

The solver is the extragradient method (two projections per iteration),
which also handles rotation-like fields where plain projected iteration
cycles.  Convergence is measured by the natural-map residual
||x - Pi_X(x - E(x))||, which vanishes exactly at primal solutions.

``enumerate_solutions`` is the independent oracle: it classifies every
feasible grid point against both definitions with the full grid as probe
set.  For box and simplex grids the inner minimization of a linear
functional over the grid is computed in closed form (the grid is a
product set / contains the vertices, so the grid minimum equals the
region minimum); this is an exact reformulation, not an approximation,
and the generic two-pass scan is retained for polyhedra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import DEFAULT_BUDGET, DEFAULT_STEP, TAU_SOLVE
from .economy import ExcessDemandModel
from .regions import Box, ConvexRegion, FloatArray, Simplex, as_price_vector

__all__ = [
    "CONVERGED",
    "BUDGET_EXHAUSTED",
    "VIProblem",
    "VISolveResult",
    "VerificationReport",
    "SolutionSetEstimate",
    "solve_extragradient",
    "residual",
    "minty_gap",
    "verify_stampacchia",
    "verify_minty",
    "enumerate_solutions",
    "single_linkage_clusters",
    "cluster_centroids",
    "set_diameter",
    "uniqueness_probe",
]

CONVERGED = "converged"
BUDGET_EXHAUSTED = "budget_exhausted"

_ROW_CHUNK = 16_384


@dataclass(frozen=True, eq=False)
class VIProblem:
    """A bounded variational inequality instance VI[E, X]."""

    model: ExcessDemandModel
    region: ConvexRegion

    def __post_init__(self):
        if self.model.dim != self.region.dim:
            raise ValueError(
                f"model dimension {self.model.dim} does not match region "
                f"dimension {self.region.dim}"
            )
        if not self.region.is_bounded:
            raise ValueError(
                "solving requires a bounded region (standing compactness "
                "assumption)"
            )

    @property
    def dim(self) -> int:
        return self.model.dim


def residual(problem: VIProblem, x) -> float:
    """Natural-map residual ||x - Pi_X(x - E(x))||; zero iff x is primal."""
    p = as_price_vector(x, problem.dim)
    return float(np.linalg.norm(p - problem.region.project(p - problem.model(p))))


def _default_probe(region: ConvexRegion, count: int = 64) -> FloatArray:
    pts = [region.sample(count)]
    try:
        pts.append(region.vertices())
    except ValueError:
        pass
    return np.vstack(pts)


def minty_gap(problem: VIProblem, x, probe=None) -> float:
    """max over the probe of E(p).(x - p); <= 0 means dual-consistent there."""
    p = as_price_vector(x, problem.dim)
    pts = _default_probe(problem.region) if probe is None else np.atleast_2d(
        np.asarray(probe, dtype=float))
    evals = problem.model(pts)
    return float(np.einsum("ij,ij->i", evals, p[None, :] - pts).max())


@dataclass(frozen=True, eq=False)
class VISolveResult:
    solution: FloatArray
    residual: float
    minty_gap: float
    iterations: int
    trace: FloatArray
    status: str

    def to_dict(self) -> dict:
        return {
            "solution": self.solution.tolist(),
            "residual": self.residual,
            "minty_gap": self.minty_gap,
            "iterations": self.iterations,
            "status": self.status,
        }


def solve_extragradient(problem: VIProblem, start=None,
                        step: float = DEFAULT_STEP,
                        budget: int = DEFAULT_BUDGET,
                        tol: float = TAU_SOLVE) -> VISolveResult:
    """Two-projection extragradient iteration.

    Each step takes y = Pi(x - step E(x)) then x = Pi(x - step E(y)).
    Stops when the natural-map residual drops to ``tol`` or the budget is
    spent; budget exhaustion is a status, not an error, and the best
    iterate is still returned.  Residuals per iteration are recorded in
    the trace (index 0 is the starting residual).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    region, model = problem.region, problem.model
    if start is None:
        x = region.feasible_point()
    else:
        x = as_price_vector(start, problem.dim)
        if not region.contains(x, tol=1e-8):
            raise ValueError("start point must lie in the region")
    trace = [residual(problem, x)]
    iterations = 0
    while trace[-1] > tol and iterations < budget:
        y = region.project(x - step * model(x))
        x = region.project(x - step * model(y))
        trace.append(residual(problem, x))
        iterations += 1
    status = CONVERGED if trace[-1] <= tol else BUDGET_EXHAUSTED
    return VISolveResult(
        solution=x,
        residual=trace[-1],
        minty_gap=minty_gap(problem, x),
        iterations=iterations,
        trace=np.asarray(trace),
        status=status,
    )


@dataclass(frozen=True, eq=False)
class VerificationReport:
    satisfied: bool
    worst_value: float
    worst_point: FloatArray

    def __bool__(self) -> bool:
        return self.satisfied


def verify_stampacchia(problem: VIProblem, x, probe, tol: float) -> VerificationReport:
    """Check E(x).(p - x) >= -tol over the probe set; report the minimizer."""
    p = as_price_vector(x, problem.dim)
    pts = np.atleast_2d(np.asarray(probe, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("empty probe set")
    vals = (pts - p[None, :]) @ problem.model(p)
    worst = int(np.argmin(vals))
    return VerificationReport(bool(vals[worst] >= -tol), float(vals[worst]),
                              pts[worst])


def verify_minty(problem: VIProblem, x, probe, tol: float) -> VerificationReport:
    """Check E(p).(p - x) >= -tol over the probe set; report the minimizer."""
    p = as_price_vector(x, problem.dim)
    pts = np.atleast_2d(np.asarray(probe, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("empty probe set")
    vals = np.einsum("ij,ij->i", problem.model(pts), pts - p[None, :])
    worst = int(np.argmin(vals))
    return VerificationReport(bool(vals[worst] >= -tol), float(vals[worst]),
                              pts[worst])


@dataclass(frozen=True, eq=False)
class SolutionSetEstimate:
    """Grid classification of both solution sets.

    Dual membership inside primal membership is *not* an invariant here;
    each set is certified independently against its own definition, and
    the continuum containment is only checked (with relaxed tolerance) by
    the test suite.
    """

    grid_points: FloatArray
    stampacchia_mask: FloatArray
    minty_mask: FloatArray
    grid_spacing: float
    tolerance: float

    @property
    def stampacchia_members(self) -> FloatArray:
        return self.grid_points[self.stampacchia_mask]

    @property
    def minty_members(self) -> FloatArray:
        return self.grid_points[self.minty_mask]

    def to_dict(self, include_grid: bool = True) -> dict:
        out = {
            "grid_spacing": self.grid_spacing,
            "tolerance": self.tolerance,
            "grid_point_count": int(self.grid_points.shape[0]),
            "stampacchia_members": self.stampacchia_members.tolist(),
            "minty_members": self.minty_members.tolist(),
        }
        if include_grid:
            out["grid_points"] = self.grid_points.tolist()
        return out


def _grid_linear_minimum(region: ConvexRegion, grid: FloatArray,
                         coeffs: FloatArray, spacing: float) -> FloatArray:
    """min over grid points p of c . p, one value per coefficient row.

    Box grids are product sets and simplex grids contain all vertices, so
    the minimum is available in closed form; other regions fall back to a
    chunked scan over the grid.
    """
    if isinstance(region, Box):
        lo, hi = region.bounding_box()
        return np.where(coeffs >= 0, coeffs * lo, coeffs * hi).sum(axis=1)
    if isinstance(region, Simplex):
        return coeffs.min(axis=1)
    out = np.full(coeffs.shape[0], np.inf)
    for lo_i in range(0, grid.shape[0], _ROW_CHUNK):
        block = grid[lo_i:lo_i + _ROW_CHUNK]
        np.minimum(out, (block @ coeffs.T).min(axis=0), out=out)
    return out


def _minty_values(grid: FloatArray, evals: FloatArray, diag: FloatArray,
                  tol: float) -> FloatArray:
    """min over j of E(p_j).(p_j - p_i) for every grid point i.

    Two passes: a strided probe subset rejects most candidates, then the
    survivors are scored against the full grid, which reproduces the
    exact full-probe minimum.
    """
    G = grid.shape[0]
    stride = max(1, G // 1024)
    sub = np.arange(0, G, stride)
    vals = np.full(G, np.inf)
    for lo in range(0, G, _ROW_CHUNK):
        block = grid[lo:lo + _ROW_CHUNK]
        partial = (diag[sub][None, :] - block @ evals[sub].T).min(axis=1)
        vals[lo:lo + block.shape[0]] = partial
    survivors = np.flatnonzero(vals >= -tol)
    for lo in range(0, survivors.size, 1024):
        idx = survivors[lo:lo + 1024]
        full = np.full(idx.size, np.inf)
        for glo in range(0, G, _ROW_CHUNK):
            probe_evals = evals[glo:glo + _ROW_CHUNK]
            probe_diag = diag[glo:glo + _ROW_CHUNK]
            part = (probe_diag[None, :] - grid[idx] @ probe_evals.T).min(axis=1)
            np.minimum(full, part, out=full)
        vals[idx] = full
    return vals


def enumerate_solutions(problem: VIProblem, grid_spacing: float,
                        lipschitz_scale: float) -> SolutionSetEstimate:
    """Classify every feasible grid point against both solution notions.

    Membership tolerance is grid_spacing * lipschitz_scale; the scale is
    fixture-specific because exact membership on a grid is ill-posed.
    Desk-scale only (dim <= 3).
    """
    if lipschitz_scale <= 0:
        raise ValueError("lipschitz scale must be positive")
    region = problem.region
    grid = region.grid(grid_spacing)
    evals = problem.model(grid)
    diag = np.einsum("ij,ij->i", evals, grid)
    tol = grid_spacing * lipschitz_scale

    linmin = _grid_linear_minimum(region, grid, evals, grid_spacing)
    stampacchia = (linmin - diag) >= -tol
    minty = _minty_values(grid, evals, diag, tol) >= -tol
    return SolutionSetEstimate(
        grid_points=grid,
        stampacchia_mask=stampacchia,
        minty_mask=minty,
        grid_spacing=grid_spacing,
        tolerance=tol,
    )


def single_linkage_clusters(points, threshold: float) -> list[np.ndarray]:
    """Index sets of single-linkage clusters at the given link distance."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0]
    if k == 0:
        return []
    parent = np.arange(k)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        diffs = pts[i + 1:] - pts[i]
        close = np.flatnonzero(np.linalg.norm(diffs, axis=1) <= threshold)
        for j in close + i + 1:
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return [np.asarray(v) for v in sorted(groups.values(), key=lambda g: g[0])]


def cluster_centroids(points, threshold: float) -> FloatArray:
    """Centroid of each single-linkage cluster, in first-member order."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.array([pts[idx].mean(axis=0)
                     for idx in single_linkage_clusters(pts, threshold)])


def set_diameter(points) -> float:
    """Largest pairwise distance in a point set (0 for <= 1 point)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] <= 1:
        return 0.0
    best = 0.0
    for i in range(pts.shape[0] - 1):
        best = max(best, float(np.linalg.norm(pts[i + 1:] - pts[i], axis=1).max()))
    return best


def uniqueness_probe(problem: VIProblem, grid_spacing: float,
                     lipschitz_scale: float,
                     estimate: Optional[SolutionSetEstimate] = None) -> bool:
    """True iff the primal members form one cluster of diameter <= 2h."""
    est = estimate if estimate is not None else enumerate_solutions(
        problem, grid_spacing, lipschitz_scale)
    members = est.stampacchia_members
    if members.shape[0] == 0:
        return False
    threshold = 2.0 * est.grid_spacing
    clusters = single_linkage_clusters(members, threshold)
    return bool(len(clusters) == 1 and set_diameter(members) <= threshold + 1e-12)
