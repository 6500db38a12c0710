"""Finite-witness checkers for generalized monotonicity classes.

Five classes are checked: pseudomonotone, strictly pseudomonotone,
properly quasimonotone (primal form: every convex combination of every
sampled tuple admits a member with a nonnegative pairing), its dual form
(every tuple admits one combination satisfying all pairings at once), and
strict-properly quasimonotone (the primal form with strict pairings and
combinations distinct from all tuple members).

The checkers are falsifiers, not provers: "refuted" ships a concrete
witness that replays against the definition, while "holds_on_samples"
claims nothing beyond the scanned evidence.  Universal quantifiers over
the region are discretized by a deterministic sample plan (region
vertices plus low-discrepancy points); quantifiers over convex weights
become a uniform grid on the weight simplex.  Scans run in a fixed
order -- tuple size ascending, index combinations lexicographic, weight
compositions lexicographic -- and report the first violation, so
identical inputs always produce identical reports.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import (
    DEFAULT_M_MAX,
    DEFAULT_SAMPLE_COUNT,
    DEFAULT_WEIGHT_RESOLUTION,
    DISTINCT_DIST,
    EPS_STRICT,
    TAU_FEAS,
)
from .economy import ExcessDemandModel
from .regions import ConvexRegion, FloatArray

__all__ = [
    "CLASS_NAMES",
    "SamplePlan",
    "build_plan",
    "Witness",
    "MonotonicityReport",
    "check_pseudomonotone",
    "check_strictly_pseudomonotone",
    "check_properly_quasimonotone",
    "check_properly_quasimonotone_dual",
    "check_strict_properly_quasimonotone",
    "check_class",
    "replay_witness",
]

CLASS_NAMES = (
    "pseudo",
    "strict_pseudo",
    "proper_quasi",
    "proper_quasi_dual",
    "strict_proper_quasi",
)

HOLDS = "holds_on_samples"
REFUTED = "refuted"

_TUPLE_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class SamplePlan:
    """Deterministic discretization of the checkers' quantifiers."""

    base_points: FloatArray
    tuple_size_max: int = DEFAULT_M_MAX
    weight_grid_resolution: int = DEFAULT_WEIGHT_RESOLUTION
    eps_strict: float = EPS_STRICT

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.base_points, dtype=float))
        if pts.shape[0] < 2:
            raise ValueError("plan needs at least two base points")
        if self.tuple_size_max < 2:
            raise ValueError("tuple_size_max must be >= 2")
        if self.weight_grid_resolution < 3:
            raise ValueError("weight grid needs at least 3 steps per axis")
        if not self.eps_strict > 0:
            raise ValueError("eps_strict must be positive")
        object.__setattr__(self, "base_points", pts)

    @property
    def size(self) -> int:
        return self.base_points.shape[0]

    def validate_for(self, region: ConvexRegion) -> None:
        if self.base_points.shape[1] != region.dim:
            raise ValueError("plan dimension does not match the region")
        for row in self.base_points:
            if not region.contains(row, tol=TAU_FEAS):
                raise ValueError("plan base points must lie in the region")


def build_plan(region: ConvexRegion, num_points: int = DEFAULT_SAMPLE_COUNT,
               tuple_size_max: int = DEFAULT_M_MAX,
               weight_grid_resolution: int = DEFAULT_WEIGHT_RESOLUTION,
               eps_strict: float = EPS_STRICT) -> SamplePlan:
    """Region vertices plus projected Halton points, deduplicated."""
    chunks = []
    try:
        chunks.append(region.vertices())
    except ValueError:
        pass  # vertex enumeration unavailable (e.g. huge box); samples suffice
    if num_points > 0:
        chunks.append(region.sample(num_points))
    stacked = np.vstack(chunks)
    keep: list[int] = []
    for i in range(stacked.shape[0]):
        if all(np.linalg.norm(stacked[i] - stacked[k]) > DISTINCT_DIST for k in keep):
            keep.append(i)
    plan = SamplePlan(stacked[keep], tuple_size_max, weight_grid_resolution,
                      eps_strict)
    plan.validate_for(region)
    return plan


@dataclass(frozen=True, eq=False)
class Witness:
    """Concrete refutation data: replaying it reproduces the violation."""

    points: FloatArray
    dot_products: FloatArray
    weights: Optional[FloatArray] = None
    combined: Optional[FloatArray] = None
    indices: tuple = ()
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class MonotonicityReport:
    class_checked: str
    verdict: str
    samples_used: int
    margin: float
    witness: Optional[Witness] = None

    @property
    def refuted(self) -> bool:
        return self.verdict == REFUTED

    def to_dict(self) -> dict:
        out = {
            "class_checked": self.class_checked,
            "verdict": self.verdict,
            "samples_used": self.samples_used,
            "margin": None if not np.isfinite(self.margin) else self.margin,
            "witness": None,
        }
        if self.witness is not None:
            w = self.witness
            out["witness"] = {
                "points": w.points.tolist(),
                "dot_products": w.dot_products.tolist(),
                "weights": None if w.weights is None else w.weights.tolist(),
                "combined": None if w.combined is None else w.combined.tolist(),
                "indices": list(w.indices),
                "extra": w.extra,
            }
        return out


def _weight_grid(parts: int, resolution: int, interior: bool) -> FloatArray:
    """Uniform grid on the weight simplex, lexicographic order."""
    steps = resolution - 1
    minimum = 1 if interior else 0
    if parts == 1:
        return np.array([[1.0]])
    combos = list(_compositions(steps, parts, minimum))
    return np.asarray(combos, dtype=float) / steps


def _compositions(total: int, parts: int, minimum: int):
    if parts == 1:
        if total >= minimum:
            yield (total,)
        return
    for first in range(minimum, total - minimum * (parts - 1) + 1):
        for rest in _compositions(total - first, parts - 1, minimum):
            yield (first,) + rest


def _pairings(model: ExcessDemandModel, plan: SamplePlan):
    """Precompute E at base points and all inner products E(p_i) . p_k."""
    P = plan.base_points
    Ev = model(P)
    G = Ev @ P.T
    g = np.einsum("ij,ij->i", Ev, P)
    return P, Ev, G, g


def check_pseudomonotone(model: ExcessDemandModel, region: ConvexRegion,
                         plan: SamplePlan,
                         tau_feas: float = TAU_FEAS) -> MonotonicityReport:
    """Scan ordered sample pairs for E(x).(y-x) >= 0 => E(y).(y-x) >= 0."""
    plan.validate_for(region)
    P, Ev, G, g = _pairings(model, plan)
    n = plan.size
    premise = G - g[:, None]          # premise[i, j] = E(p_i).(p_j - p_i)
    conclusion = g[None, :] - G.T     # conclusion[i, j] = E(p_j).(p_j - p_i)
    off = ~np.eye(n, dtype=bool)
    checked = off & (premise >= -tau_feas)
    violating = checked & (conclusion < -tau_feas)
    samples = int(off.sum())
    if violating.any():
        i, j = map(int, np.argwhere(violating)[0])
        witness = Witness(
            points=P[[i, j]],
            dot_products=np.array([premise[i, j], conclusion[i, j]]),
            indices=(i, j),
            extra={"premise": float(premise[i, j]),
                   "conclusion": float(conclusion[i, j])},
        )
        margin = float(-tau_feas - conclusion[i, j])
        return MonotonicityReport("pseudo", REFUTED, samples, margin, witness)
    slack = conclusion[checked] + tau_feas
    margin = float(slack.min()) if slack.size else float("inf")
    return MonotonicityReport("pseudo", HOLDS, samples, margin)


def check_strictly_pseudomonotone(model: ExcessDemandModel, region: ConvexRegion,
                                  plan: SamplePlan,
                                  tau_feas: float = TAU_FEAS) -> MonotonicityReport:
    """Same pair scan with the strict conclusion E(y).(y-x) > eps for y != x."""
    plan.validate_for(region)
    P, Ev, G, g = _pairings(model, plan)
    eps = plan.eps_strict
    n = plan.size
    premise = G - g[:, None]
    conclusion = g[None, :] - G.T
    dist = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
    off = dist > DISTINCT_DIST
    checked = off & (premise >= -tau_feas)
    violating = checked & (conclusion <= eps)
    samples = int(off.sum())
    if violating.any():
        i, j = map(int, np.argwhere(violating)[0])
        witness = Witness(
            points=P[[i, j]],
            dot_products=np.array([premise[i, j], conclusion[i, j]]),
            indices=(i, j),
            extra={"premise": float(premise[i, j]),
                   "conclusion": float(conclusion[i, j])},
        )
        margin = float(eps - conclusion[i, j])
        return MonotonicityReport("strict_pseudo", REFUTED, samples, margin, witness)
    slack = conclusion[checked] - eps
    margin = float(slack.min()) if slack.size else float("inf")
    return MonotonicityReport("strict_pseudo", HOLDS, samples, margin)


def _tuple_scan(model, plan, sizes, interior, tau_feas):
    """Yield (indices, weights, combined, dots) blocks in canonical order."""
    P, Ev, G, g = _pairings(model, plan)
    n = plan.size
    for m in sizes:
        W = _weight_grid(m, plan.weight_grid_resolution, interior)
        all_combos = list(itertools.combinations(range(n), m))
        for lo in range(0, len(all_combos), _TUPLE_CHUNK):
            combos = np.asarray(all_combos[lo:lo + _TUPLE_CHUNK], dtype=int)
            gsub = g[combos]                                   # (T, m)
            Gsub = G[combos[:, :, None], combos[:, None, :]]   # (T, m, m)
            dots = gsub[:, :, None] - np.einsum("tjk,wk->tjw", Gsub, W)
            combined = np.einsum("wk,tkn->twn", W, P[combos])  # (T, W, n)
            yield combos, W, combined, dots


def check_properly_quasimonotone(model: ExcessDemandModel, region: ConvexRegion,
                                 plan: SamplePlan,
                                 tau_feas: float = TAU_FEAS) -> MonotonicityReport:
    """Every combination of every tuple needs one E(p_j).(p_j - p) >= 0.

    Interior weight grids suffice: a boundary combination of a tuple is an
    interior combination of one of its sub-tuples, and all tuple sizes up
    to the plan maximum are scanned.
    """
    plan.validate_for(region)
    P = plan.base_points
    samples = 0
    best = float("inf")
    hit = None
    for combos, W, combined, dots in _tuple_scan(
            model, plan, range(1, plan.tuple_size_max + 1), True, tau_feas):
        maxdots = dots.max(axis=1)                 # (T, W)
        samples += maxdots.size
        if hit is None:
            viol = maxdots < -tau_feas
            if viol.any():
                t, w = map(int, np.argwhere(viol)[0])
                hit = (combos[t], W[w], combined[t, w], dots[t, :, w])
        best = min(best, float(maxdots.min() + tau_feas))
    if hit is not None:
        idx, wts, comb, dd = hit
        witness = Witness(points=P[idx], dot_products=dd, weights=wts,
                          combined=comb, indices=tuple(int(i) for i in idx))
        margin = float(-tau_feas - dd.max())
        return MonotonicityReport("proper_quasi", REFUTED, samples, margin, witness)
    return MonotonicityReport("proper_quasi", HOLDS, samples, best)


def check_properly_quasimonotone_dual(model: ExcessDemandModel,
                                      region: ConvexRegion, plan: SamplePlan,
                                      tau_feas: float = TAU_FEAS) -> MonotonicityReport:
    """Every tuple needs one combination with all pairings >= 0 at once.

    The existential ranges over the closed hull, so the weight grid here
    includes boundary weights (tuple members themselves are candidates).
    """
    plan.validate_for(region)
    P = plan.base_points
    samples = 0
    best = float("inf")
    hit = None
    for combos, W, combined, dots in _tuple_scan(
            model, plan, range(1, plan.tuple_size_max + 1), False, tau_feas):
        mindots = dots.min(axis=1)                 # (T, W)
        samples += mindots.size
        achieved = mindots.max(axis=1)             # best combination per tuple
        if hit is None:
            viol = achieved < -tau_feas
            if viol.any():
                t = int(np.argwhere(viol)[0][0])
                per_comb = [
                    {"weights": W[w].tolist(),
                     "min_dot": float(mindots[t, w]),
                     "failing_index": int(dots[t, :, w].argmin())}
                    for w in range(W.shape[0])
                ]
                hit = (combos[t], float(achieved[t]), per_comb,
                       dots[t, :, mindots[t].argmax()])
        best = min(best, float(achieved.min() + tau_feas))
    if hit is not None:
        idx, ach, per_comb, dd = hit
        witness = Witness(points=P[idx], dot_products=np.asarray(dd),
                          indices=tuple(int(i) for i in idx),
                          extra={"per_combination": per_comb,
                                 "best_achieved": ach})
        margin = float(-tau_feas - ach)
        return MonotonicityReport("proper_quasi_dual", REFUTED, samples, margin,
                                  witness)
    return MonotonicityReport("proper_quasi_dual", HOLDS, samples, best)


def check_strict_properly_quasimonotone(model: ExcessDemandModel,
                                        region: ConvexRegion, plan: SamplePlan,
                                        tau_feas: float = TAU_FEAS) -> MonotonicityReport:
    """Strict variant: combinations distinct from all members need a > 0 pairing.

    Combinations closer than the distinctness tolerance to any tuple member
    are excluded, matching the definition's p != p_i side condition.
    """
    plan.validate_for(region)
    P = plan.base_points
    eps = plan.eps_strict
    samples = 0
    best = float("inf")
    hit = None
    for combos, W, combined, dots in _tuple_scan(
            model, plan, range(2, plan.tuple_size_max + 1), True, tau_feas):
        member_pts = P[combos]                     # (T, m, n)
        gaps = np.linalg.norm(
            combined[:, :, None, :] - member_pts[:, None, :, :], axis=-1)
        distinct = np.all(gaps > DISTINCT_DIST, axis=2)   # (T, W)
        maxdots = dots.max(axis=1)
        samples += int(distinct.sum())
        if hit is None:
            viol = distinct & (maxdots <= eps)
            if viol.any():
                t, w = map(int, np.argwhere(viol)[0])
                hit = (combos[t], W[w], combined[t, w], dots[t, :, w])
        if distinct.any():
            best = min(best, float(maxdots[distinct].min() - eps))
    if hit is not None:
        idx, wts, comb, dd = hit
        witness = Witness(points=P[idx], dot_products=dd, weights=wts,
                          combined=comb, indices=tuple(int(i) for i in idx))
        margin = float(eps - dd.max())
        return MonotonicityReport("strict_proper_quasi", REFUTED, samples,
                                  margin, witness)
    return MonotonicityReport("strict_proper_quasi", HOLDS, samples, best)


_CHECKERS = {
    "pseudo": check_pseudomonotone,
    "strict_pseudo": check_strictly_pseudomonotone,
    "proper_quasi": check_properly_quasimonotone,
    "proper_quasi_dual": check_properly_quasimonotone_dual,
    "strict_proper_quasi": check_strict_properly_quasimonotone,
}


def check_class(name: str, model: ExcessDemandModel, region: ConvexRegion,
                plan: SamplePlan, tau_feas: float = TAU_FEAS) -> MonotonicityReport:
    """Dispatch a checker by monotonicity-class name."""
    try:
        checker = _CHECKERS[name]
    except KeyError:
        raise ValueError(
            f"unknown monotonicity class {name!r}; expected one of {CLASS_NAMES}"
        ) from None
    return checker(model, region, plan, tau_feas=tau_feas)


def replay_witness(model: ExcessDemandModel, report: MonotonicityReport,
                   tau_feas: float = TAU_FEAS,
                   eps_strict: float = EPS_STRICT) -> float:
    """Re-evaluate a refutation witness from scratch.

    Returns the recomputed violation margin; a genuine witness reproduces
    at least the recorded margin (up to floating-point noise).
    """
    if report.witness is None:
        raise ValueError("report carries no witness")
    w = report.witness
    cls = report.class_checked
    if cls in ("pseudo", "strict_pseudo"):
        x, y = w.points
        premise = float(model(x) @ (y - x))
        if premise < -tau_feas:
            raise ValueError("witness premise does not hold on replay")
        conclusion = float(model(y) @ (y - x))
        threshold = eps_strict if cls == "strict_pseudo" else -tau_feas
        return threshold - conclusion
    evals = model(w.points)
    if cls in ("proper_quasi", "strict_proper_quasi"):
        dots = np.einsum("jn,jn->j", evals, w.points - w.combined[None, :])
        threshold = eps_strict if cls == "strict_proper_quasi" else -tau_feas
        return float(threshold - dots.max())
    if cls == "proper_quasi_dual":
        achieved = -np.inf
        for entry in w.extra["per_combination"]:
            weights = np.asarray(entry["weights"], dtype=float)
            combined = weights @ w.points
            dots = np.einsum("jn,jn->j", evals, w.points - combined[None, :])
            achieved = max(achieved, float(dots.min()))
        return -tau_feas - achieved
    raise ValueError(f"unknown class in report: {cls}")
