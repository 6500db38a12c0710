"""Convex feasible regions and Euclidean projections onto them.

Three region kinds are supported: the unit price simplex, per-commodity
price boxes (with optional unbounded upper edges), and polyhedra given by
half-space systems A x <= b.  Every region is immutable after construction
and every operation is a pure function, so regions are safe to share
across threads.

Projections are exact for the simplex (sort-and-threshold) and the box
(componentwise clamp); polyhedral projections run Dykstra's cyclic
scheme over the half-spaces until the iterate is accurate to ``TAU_PROJ``.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linprog
from scipy.stats import qmc

from .constants import (
    DYKSTRA_SWEEP_BUDGET,
    FEASIBILITY_SWEEP_BUDGET,
    TAU_FEAS,
    TAU_PROJ,
)

FloatArray = NDArray[np.float64]

# A price vector is a finite 1-D float array; helpers below validate shape.
PriceVector = FloatArray

__all__ = [
    "PriceVector",
    "as_price_vector",
    "ConvexRegion",
    "Simplex",
    "Box",
    "Polyhedron",
    "ConvexCombination",
    "combine",
    "project_onto_simplex",
    "ProjectionBudgetError",
]


def as_price_vector(x, dim: Optional[int] = None) -> FloatArray:
    """Validate and return ``x`` as a finite 1-D float64 price vector."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"price vector must be 1-D, got shape {p.shape}")
    if p.size < 1:
        raise ValueError("price vector must have at least one entry")
    if not np.all(np.isfinite(p)):
        raise ValueError("price vector entries must be finite")
    if dim is not None and p.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {p.size}")
    return p


class ProjectionBudgetError(RuntimeError):
    """Iterative projection ran out of sweeps.

    Carries the best iterate found and the movement-based residual it
    achieved, so callers can inspect how far the projection got.
    """

    def __init__(self, best: FloatArray, achieved: float):
        super().__init__(
            f"projection budget exhausted (achieved residual {achieved:.3e})"
        )
        self.best = best
        self.achieved = achieved


def project_onto_simplex(v: FloatArray) -> FloatArray:
    """Euclidean projection of ``v`` onto {x >= 0, sum(x) = 1}.

    Sort-and-threshold algorithm, O(n log n); ties at the threshold are
    resolved by the cumulative-sum arithmetic itself.
    """
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    positive = u - css / ks > 0
    rho = np.nonzero(positive)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


class ConvexRegion(ABC):
    """Common surface of the feasible-region kinds."""

    dim: int
    kind: str

    @abstractmethod
    def project(self, x) -> FloatArray:
        """Euclidean projection of ``x`` onto the region."""

    @abstractmethod
    def contains(self, x, tol: float = TAU_FEAS) -> bool:
        """True iff all defining constraints hold within ``tol``."""

    @abstractmethod
    def bounding_box(self) -> tuple[FloatArray, FloatArray]:
        """Per-axis (lower, upper) bounds; entries may be +inf."""

    @abstractmethod
    def vertices(self) -> FloatArray:
        """Extreme points, shape (k, dim). Requires a bounded region."""

    @property
    def is_bounded(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def feasible_point(self) -> FloatArray:
        """A canonical interior-ish point of the region."""
        lo, hi = self.bounding_box()
        mid = np.where(np.isfinite(hi), 0.5 * (lo + hi), lo + 1.0)
        return self.project(mid)

    def project_many(self, points) -> FloatArray:
        """Row-wise projection of an (m, dim) array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.vstack([self.project(row) for row in pts])

    def grid(self, spacing: float) -> FloatArray:
        """Deterministic feasible mesh with the given nominal spacing.

        Desk-scale only: guarded to dim <= 3.  Axis meshes always include
        both bounding-box endpoints.
        """
        if spacing <= 0:
            raise ValueError("grid spacing must be positive")
        if self.dim > 3:
            raise ValueError("grid enumeration is desk-scale only (dim <= 3)")
        if not self.is_bounded:
            raise ValueError("grid enumeration requires a bounded region")
        lo, hi = self.bounding_box()
        axes = [_axis_mesh(lo[j], hi[j], spacing) for j in range(self.dim)]
        mesh = np.stack(
            [g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1
        )
        keep = np.array([self.contains(row, tol=1e-9) for row in mesh])
        pts = mesh[keep]
        if pts.shape[0] == 0:
            raise ValueError("grid produced no feasible points")
        return pts

    def sample(self, count: int) -> FloatArray:
        """Deterministic low-discrepancy points inside the region.

        Halton points in the bounding box, projected onto the region.
        """
        if count < 1:
            raise ValueError("sample count must be positive")
        if not self.is_bounded:
            raise ValueError("sampling requires a bounded region")
        lo, hi = self.bounding_box()
        engine = qmc.Halton(d=self.dim, scramble=False)
        engine.fast_forward(1)  # skip the degenerate all-zeros point
        unit = engine.random(count)
        return self.project_many(lo + unit * (hi - lo))


def _axis_mesh(lo: float, hi: float, spacing: float) -> FloatArray:
    n_steps = int(math.floor((hi - lo) / spacing + 1e-9))
    axis = lo + spacing * np.arange(n_steps + 1)
    if hi - axis[-1] > spacing * 1e-6:
        axis = np.append(axis, hi)
    return axis


@dataclass(frozen=True)
class Simplex(ConvexRegion):
    """Unit price simplex: x_j >= 0 and sum_j x_j = 1."""

    n: int
    kind = "simplex"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("simplex dimension must be >= 1")

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.n

    def project(self, x) -> FloatArray:
        return project_onto_simplex(as_price_vector(x, self.n))

    def project_many(self, points) -> FloatArray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = np.sort(pts, axis=1)[:, ::-1]
        css = np.cumsum(u, axis=1) - 1.0
        ks = np.arange(1, self.n + 1)
        positive = u - css / ks > 0
        rho = self.n - 1 - np.argmax(positive[:, ::-1], axis=1)
        theta = css[np.arange(pts.shape[0]), rho] / (rho + 1.0)
        return np.maximum(pts - theta[:, None], 0.0)

    def contains(self, x, tol: float = TAU_FEAS) -> bool:
        p = as_price_vector(x, self.n)
        return bool(np.all(p >= -tol) and abs(p.sum() - 1.0) <= tol)

    def bounding_box(self):
        return np.zeros(self.n), np.ones(self.n)

    def vertices(self) -> FloatArray:
        return np.eye(self.n)

    def feasible_point(self) -> FloatArray:
        return np.full(self.n, 1.0 / self.n)

    def grid(self, spacing: float) -> FloatArray:
        if spacing <= 0:
            raise ValueError("grid spacing must be positive")
        if self.n > 3:
            raise ValueError("grid enumeration is desk-scale only (dim <= 3)")
        k = max(1, round(1.0 / spacing))
        if self.n == 1:
            return np.array([[1.0]])
        if self.n == 2:
            i = np.arange(k + 1)
            return np.stack([i, k - i], axis=-1) / k
        i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
        keep = i + j <= k
        i, j = i[keep], j[keep]
        return np.stack([i, j, k - i - j], axis=-1) / k


@dataclass(frozen=True, eq=False)
class Box(ConvexRegion):
    """Per-commodity price bounds 0 <= a_j <= x_j <= b_j (b_j may be +inf)."""

    lower: FloatArray
    upper: FloatArray
    kind = "box"

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.ndim != 1 or hi.shape != lo.shape:
            raise ValueError("lower and upper bounds must be 1-D and equal length")
        if lo.size < 1:
            raise ValueError("box needs at least one coordinate")
        if not np.all(np.isfinite(lo)):
            raise ValueError("lower bounds must be finite")
        if np.any(lo < 0):
            raise ValueError("lower price bounds must be nonnegative")
        if np.any(np.isnan(hi)) or np.any(hi < lo):
            raise ValueError("upper bounds must satisfy b_j >= a_j")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.lower.size

    def project(self, x) -> FloatArray:
        p = as_price_vector(x, self.dim)
        return np.minimum(np.maximum(p, self.lower), self.upper)

    def project_many(self, points) -> FloatArray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.clip(pts, self.lower, self.upper)

    def contains(self, x, tol: float = TAU_FEAS) -> bool:
        p = as_price_vector(x, self.dim)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def vertices(self) -> FloatArray:
        if not self.is_bounded:
            raise ValueError("an unbounded box has no vertex enumeration")
        if self.dim > 16:
            raise ValueError("vertex enumeration limited to dim <= 16")
        corners = itertools.product(*zip(self.lower, self.upper))
        return np.unique(np.array(list(corners), dtype=float), axis=0)


class Polyhedron(ConvexRegion):
    """Half-space intersection {x : A x <= b}, certified nonempty.

    Construction finds a feasible point by cyclic projection of the origin
    onto the half-spaces; if that fails to converge within the sweep
    budget the region is treated as empty and construction raises.
    Optional per-axis lower/upper bounds are folded in as extra rows.
    """

    kind = "polyhedron"

    def __init__(self, A, b, lower=None, upper=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.size:
            raise ValueError("need A of shape (m, n) and b of shape (m,)")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("constraint data must be finite")
        n = A.shape[1]
        rows = [A]
        rhs = [b]
        if lower is not None:
            lo = np.asarray(lower, dtype=float)
            if lo.shape != (n,):
                raise ValueError("lower bounds must have one entry per axis")
            rows.append(-np.eye(n))
            rhs.append(-lo)
        if upper is not None:
            hi = np.asarray(upper, dtype=float)
            if hi.shape != (n,):
                raise ValueError("upper bounds must have one entry per axis")
            finite = np.isfinite(hi)
            rows.append(np.eye(n)[finite])
            rhs.append(hi[finite])
        self.A = np.vstack(rows)
        self.b = np.concatenate(rhs)
        norms = np.linalg.norm(self.A, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero constraint rows are not allowed")
        self._unit_A = self.A / norms[:, None]
        self._unit_b = self.b / norms
        self._dim = n
        self._feasible = self._certify_nonempty()
        self._bbox: Optional[tuple[FloatArray, FloatArray]] = None

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self._dim

    def _violation(self, x: FloatArray) -> float:
        return float(np.max(self._unit_A @ x - self._unit_b, initial=0.0))

    def _certify_nonempty(self) -> FloatArray:
        x = np.zeros(self.dim)
        for _ in range(FEASIBILITY_SWEEP_BUDGET):
            moved = 0.0
            for a, beta in zip(self._unit_A, self._unit_b):
                gap = a @ x - beta
                if gap > 0:
                    x = x - gap * a
                    moved = max(moved, gap)
            if self._violation(x) <= TAU_FEAS:
                return x
            if moved <= TAU_FEAS * 1e-3:
                break
        raise ValueError("polyhedron is empty (feasibility phase failed)")

    def feasible_point(self) -> FloatArray:
        return self._feasible.copy()

    def contains(self, x, tol: float = TAU_FEAS) -> bool:
        p = as_price_vector(x, self.dim)
        return bool(np.all(self.A @ p - self.b <= tol * np.maximum(1.0, np.abs(self.b))))

    def project(self, x) -> FloatArray:
        """Dykstra's cyclic half-space projection, accurate to TAU_PROJ.

        Convergence is certified by duality, not iterate movement: the
        accumulated corrections are mu_i * a_i with mu_i >= 0 and
        x - y = sum_i mu_i a_i by construction, so strong convexity bounds
        the distance to the exact projection by sqrt(2 sum_i mu_i s_i)
        with s_i the constraint slacks at y.  That bound saturates near
        the floating-point floor, so once it identifies the active set the
        projection is polished by solving the active-set KKT system and
        verifying it directly.
        """
        p = as_price_vector(x, self.dim)
        if self._violation(p) <= 0.0:
            return p
        m = self._unit_A.shape[0]
        y = p.copy()
        increments = np.zeros((m, self.dim))
        bound = math.inf
        for _ in range(DYKSTRA_SWEEP_BUDGET):
            for i in range(m):
                z = y - increments[i]
                gap = self._unit_A[i] @ z - self._unit_b[i]
                y = z - max(gap, 0.0) * self._unit_A[i]
                increments[i] = y - z
            violation = self._violation(y)
            mu = np.linalg.norm(increments, axis=1)
            slack = np.maximum(self._unit_b - self._unit_A @ y, 0.0)
            bound = math.sqrt(2.0 * float(mu @ slack))
            if violation <= TAU_FEAS and bound <= TAU_PROJ:
                return y
            if bound <= 1e-6:
                polished = self._active_set_polish(p, mu, y)
                if polished is not None:
                    return polished
        raise ProjectionBudgetError(y, bound + self._violation(y))

    def _active_set_polish(self, x: FloatArray, mu: FloatArray,
                           y: FloatArray) -> Optional[FloatArray]:
        """Exact projection via the KKT system of the identified active set.

        Returns None when the candidate set does not verify (wrong guess);
        the caller keeps iterating in that case.
        """
        scale = np.maximum(1.0, np.abs(self._unit_b))
        near = self._unit_A @ y - self._unit_b > -1e-8 * scale
        active = np.flatnonzero((mu > 1e-9) | near)
        for _ in range(active.size + 1):
            if active.size == 0:
                return None
            sub_a = self._unit_A[active]
            gram = sub_a @ sub_a.T
            rhs = sub_a @ x - self._unit_b[active]
            lam, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
            if np.all(lam >= -1e-12):
                candidate = x - sub_a.T @ lam
                residual = np.abs(sub_a @ candidate - self._unit_b[active])
                ok = (np.all(residual <= 1e-11 * scale[active])
                      and self._violation(candidate) <= TAU_FEAS)
                return candidate if ok else None
            active = np.delete(active, int(np.argmin(lam)))
        return None

    def bounding_box(self):
        if self._bbox is None:
            lo = np.empty(self.dim)
            hi = np.empty(self.dim)
            for j in range(self.dim):
                lo[j] = self._axis_extreme(j, minimize=True)
                hi[j] = self._axis_extreme(j, minimize=False)
            self._bbox = (lo, hi)
        return self._bbox[0].copy(), self._bbox[1].copy()

    def _axis_extreme(self, axis: int, minimize: bool) -> float:
        c = np.zeros(self.dim)
        c[axis] = 1.0 if minimize else -1.0
        res = linprog(
            c, A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * self.dim,
            method="highs",
        )
        if res.status == 3:  # unbounded in this direction
            return -math.inf if minimize else math.inf
        if not res.success:
            raise RuntimeError(f"bounding-box LP failed: {res.message}")
        return float(res.x[axis]) if minimize else float(res.x[axis])

    def vertices(self) -> FloatArray:
        """Basic feasible points from all n-subsets of active constraints."""
        if self.dim > 3:
            raise ValueError("vertex enumeration is desk-scale only (dim <= 3)")
        if not self.is_bounded:
            raise ValueError("vertex enumeration requires a bounded region")
        m, n = self.A.shape
        scale = np.maximum(1.0, np.abs(self.b))
        found = []
        for rows in itertools.combinations(range(m), n):
            sub = self.A[list(rows)]
            if abs(np.linalg.det(sub)) < 1e-12:
                continue
            v = np.linalg.solve(sub, self.b[list(rows)])
            if np.all(self.A @ v - self.b <= 1e-9 * scale):
                found.append(v)
        if not found:
            raise ValueError("no vertices found (degenerate polyhedron)")
        pts = np.array(found)
        keep: list[int] = []
        for i in range(pts.shape[0]):
            if all(np.linalg.norm(pts[i] - pts[k]) > 1e-9 for k in keep):
                keep.append(i)
        order = np.lexsort(pts[keep].T[::-1])
        return pts[keep][order]

    def __repr__(self) -> str:
        return f"Polyhedron(m={self.A.shape[0]}, n={self.dim})"


@dataclass(frozen=True, eq=False)
class ConvexCombination:
    """Weighted point set with weights on the unit weight simplex."""

    points: FloatArray
    weights: FloatArray

    def __init__(self, points, weights):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if pts.shape[0] != w.size:
            raise ValueError("one weight per point is required")
        if not np.all(np.isfinite(pts)):
            raise ValueError("combination points must be finite")
        if np.any(w < -TAU_FEAS) or np.any(w > 1 + TAU_FEAS):
            raise ValueError("weights must lie in [0, 1]")
        if abs(w.sum() - 1.0) > TAU_FEAS:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def value(self) -> FloatArray:
        return self.weights @ self.points


def combine(c: ConvexCombination) -> FloatArray:
    """The point sum_j alpha_j p_j of a validated convex combination."""
    return c.value()
