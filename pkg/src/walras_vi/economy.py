"""Excess-demand models and fixture economies.

An excess-demand model is the map E(p) = -D(p) + S(p) evaluated directly;
demand and supply are never represented separately because nothing
downstream needs the split.  The module also builds the mortgage-market
feasible region: the periodic payment on a loan couples the interest rate
(price of credit) to the property price through

    A = P * r (1 + r)^N / ((1 + r)^N - 1),
    property price >= down payment + N * A,

and linearizing the right-hand side at a reference rate turns the coupled
constraint into an affine cap on the rate, so the feasible set is a
polyhedron.

Fixture economies with known monotonicity behaviour live in a named
catalog used by the CLI and the theorem harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constants import EPS_STRICT
from .regions import Box, ConvexRegion, FloatArray, Polyhedron, Simplex

__all__ = [
    "ExcessDemandModel",
    "linear_economy",
    "scalar_economy",
    "MortgageTerms",
    "mortgage_payment",
    "mortgage_payment_slope",
    "affine_rate_cap_region",
    "mortgage_region",
    "is_positive",
    "Fixture",
    "default_catalog",
    "scalar_catalog",
]


@dataclass(frozen=True, eq=False)
class ExcessDemandModel:
    """Evaluatable excess-demand map E: X -> R^n.

    ``evaluate`` must accept arrays of shape (n,) or (m, n) and return the
    same shape with finite entries; all fixtures are continuous.
    ``declared_properties`` names the monotonicity classes the fixture is
    known to satisfy (used only for fixture self-consistency tests).
    """

    dim: int
    evaluate: Callable[[FloatArray], FloatArray]
    label: str = "anonymous"
    declared_properties: frozenset = frozenset()
    domain: Optional[tuple[float, float]] = None

    def __call__(self, p) -> FloatArray:
        arr = np.asarray(p, dtype=float)
        out = np.asarray(self.evaluate(arr), dtype=float)
        if out.shape != arr.shape:
            raise ValueError(
                f"{self.label}: evaluate returned shape {out.shape} for input {arr.shape}"
            )
        if not np.all(np.isfinite(out)):
            raise ValueError(f"{self.label}: excess demand must be finite")
        return out


def linear_economy(M, c, label: Optional[str] = None,
                   declared: frozenset = frozenset()) -> ExcessDemandModel:
    """Affine field E(p) = M p - c.

    Positive-definite M gives a strictly monotone fixture, M = 0 a
    constant field, skew M a rotation field.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if M.shape[0] != M.shape[1] or M.shape[0] != c.size:
        raise ValueError("M must be square and match c")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(c))):
        raise ValueError("M and c must be finite")

    def evaluate(p: FloatArray) -> FloatArray:
        return p @ M.T - c

    return ExcessDemandModel(
        dim=c.size,
        evaluate=evaluate,
        label=label or f"linear[{c.size}]",
        declared_properties=declared,
    )


def scalar_economy(f: Callable[[FloatArray], FloatArray], lo: float = 0.0,
                   hi: float = 1.0, label: str = "scalar",
                   declared: frozenset = frozenset()) -> ExcessDemandModel:
    """One-commodity model E(t) = f(t) on the interval [lo, hi].

    ``f`` must be continuous on [lo, hi] and vectorized over numpy arrays.
    The interval is recorded so callers can build the matching box region.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")

    def evaluate(p: FloatArray) -> FloatArray:
        return np.asarray(f(p), dtype=float)

    return ExcessDemandModel(dim=1, evaluate=evaluate, label=label,
                             declared_properties=declared,
                             domain=(float(lo), float(hi)))


@dataclass(frozen=True)
class MortgageTerms:
    """Loan parameters: principal, period count, periodic rate, down payment."""

    principal: float
    periods: int
    rate: float
    down_payment: float = 0.0

    def __post_init__(self):
        if not self.principal > 0:
            raise ValueError("principal must be positive")
        if int(self.periods) != self.periods or self.periods < 1:
            raise ValueError("periods must be an integer >= 1")
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")
        if self.down_payment < 0:
            raise ValueError("down payment must be nonnegative")


def mortgage_payment(terms: MortgageTerms) -> float:
    """Periodic payment A = P r (1+r)^N / ((1+r)^N - 1).

    The zero-rate case is the removable limit A = P / N.  Uses expm1/log1p
    so tiny rates do not cancel catastrophically.
    """
    if terms.rate == 0.0:
        return terms.principal / terms.periods
    growth = np.exp(terms.periods * np.log1p(terms.rate))
    denom = np.expm1(terms.periods * np.log1p(terms.rate))
    return float(terms.principal * terms.rate * growth / denom)


def mortgage_payment_slope(terms: MortgageTerms) -> float:
    """dA/dr at the terms' rate (P and N fixed).

    For r > 0:  A = P r q / (q - 1) with q = (1+r)^N, so
    dA/dr = P [ q/(q-1) - r N (1+r)^(N-1) / (q-1)^2 ].
    At r = 0 the series limit is P (N + 1) / (2 N).
    """
    P, N, r = terms.principal, terms.periods, terms.rate
    if r == 0.0:
        return P * (N + 1) / (2.0 * N)
    q = np.exp(N * np.log1p(r))
    qm1 = np.expm1(N * np.log1p(r))
    dq = N * np.exp((N - 1) * np.log1p(r))
    return float(P * (q / qm1 + r * dq / qm1 - r * q * dq / qm1**2))


def affine_rate_cap_region(intercept: float, slope: float, lower, upper) -> Polyhedron:
    """Polyhedron {p : 0 <= p_1 <= intercept + slope * p_2, a <= p <= b}.

    ``lower``/``upper`` give bounds for every coordinate; the rate cap only
    ties the first two.  Construction fails if the region is empty.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    if n < 2:
        raise ValueError("rate-cap region needs at least two commodities")
    if upper.shape != lower.shape:
        raise ValueError("bound arrays must have equal length")
    if np.any(lower < 0):
        raise ValueError("price lower bounds must be nonnegative")
    if np.any(upper < lower):
        raise ValueError("need a_j <= b_j")
    cap = np.zeros(n)
    cap[0] = 1.0
    cap[1] = -slope
    return Polyhedron(cap[None, :], np.array([intercept]), lower=lower, upper=upper)


def mortgage_region(terms: MortgageTerms, lower, upper, n: int = 2,
                    reference_rate: Optional[float] = None) -> Polyhedron:
    """Feasible prices for the mortgage market as a polyhedron.

    Coordinate 1 is the periodic rate, coordinate 2 the property price.
    The payoff constraint  p_2 >= B + N * A(p_1)  is linearized at
    ``reference_rate`` (default: the rate stored in ``terms``), which
    keeps the set convex and the projections exact:

        p_1 <= g(p_2) = (p_2 - beta_0) / beta_1,

    where beta_0 + beta_1 * p_1 is the tangent of B + N * A(p_1).
    """
    if n < 2:
        raise ValueError("need n >= 2 commodities")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != (n,) or upper.shape != (n,):
        raise ValueError("bound arrays must have one entry per commodity")
    if not np.all(np.isfinite(upper)):
        raise ValueError("mortgage region requires bounded bounds")
    r0 = terms.rate if reference_rate is None else float(reference_rate)
    ref = MortgageTerms(terms.principal, terms.periods, r0, terms.down_payment)
    value_at_ref = terms.down_payment + terms.periods * mortgage_payment(ref)
    slope = terms.periods * mortgage_payment_slope(ref)
    beta0 = value_at_ref - slope * r0
    # p_2 >= beta0 + slope * p_1  <=>  p_1 <= (p_2 - beta0) / slope
    return affine_rate_cap_region(-beta0 / slope, 1.0 / slope, lower, upper)


def is_positive(model: ExcessDemandModel, region: ConvexRegion, samples,
                eps_strict: float = EPS_STRICT) -> bool:
    """True iff every component of E is > eps_strict at every sample."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("empty sample set")
    for row in pts:
        if not region.contains(row, tol=1e-8):
            raise ValueError("positivity samples must lie in the region")
    return bool(np.all(model(pts) > eps_strict))


@dataclass(frozen=True, eq=False)
class Fixture:
    """Catalog entry: a model, its region, and oracle calibration data.

    ``lipschitz`` scales the solution-set oracle's verification tolerance
    (tol = grid spacing * lipschitz) and is calibrated per fixture.
    ``positive`` declares whether E > 0 holds on the region.
    """

    label: str
    model: ExcessDemandModel
    region: ConvexRegion
    lipschitz: float
    positive: bool = False


_ALL_CLASSES = frozenset(
    {"pseudo", "strict_pseudo", "proper_quasi", "proper_quasi_dual",
     "strict_proper_quasi"}
)
_PSEUDO_ONLY = frozenset({"pseudo", "proper_quasi", "proper_quasi_dual"})


def scalar_catalog() -> dict[str, ExcessDemandModel]:
    """Named one-commodity economies referenced from problem files."""
    return {
        "negslope_half": scalar_economy(
            lambda t: 0.5 - t, 0.0, 1.0, label="negslope_half",
            declared=frozenset(),
        ),
        "posslope_half": scalar_economy(
            lambda t: t - 0.5, 0.0, 1.0, label="posslope_half",
            declared=_ALL_CLASSES,
        ),
        "affine_positive": scalar_economy(
            lambda t: t + 0.1, 0.0, 1.0, label="affine_positive",
            declared=_ALL_CLASSES,
        ),
    }


def default_catalog() -> dict[str, Fixture]:
    """Fixture economies with known monotonicity classes, keyed by label.

    Solutions of the monotone fixtures sit on the default oracle grids
    (multiples of 0.01, 0.02 and 0.5), so the per-fixture ``lipschitz``
    constants can stay small and the solution-set estimates stay tight.
    """
    unit_square = Box([0.0, 0.0], [1.0, 1.0])
    unit_interval = Box([0.0], [1.0])
    scalars = scalar_catalog()
    mortgage_box_lo = np.array([0.0, 1.0])
    mortgage_box_hi = np.array([2.0, 4.0])

    fixtures = [
        Fixture(
            label="linear_identity",
            model=linear_economy(np.eye(2), [0.5, 0.5], label="linear_identity",
                                 declared=_ALL_CLASSES),
            region=unit_square,
            lipschitz=0.1,
        ),
        Fixture(
            label="constant_field",
            model=linear_economy(np.zeros((2, 2)), [-1.0, 0.0],
                                 label="constant_field", declared=_PSEUDO_ONLY),
            region=unit_square,
            lipschitz=0.25,
        ),
        Fixture(
            label="constant_positive",
            model=linear_economy(np.zeros((2, 2)), [-1.0, -1.0],
                                 label="constant_positive", declared=_PSEUDO_ONLY),
            region=unit_square,
            lipschitz=0.25,
            positive=True,
        ),
        Fixture(
            label="rotation",
            model=linear_economy([[0.0, 1.0], [-1.0, 0.0]], [0.0, 0.0],
                                 label="rotation", declared=_PSEUDO_ONLY),
            region=unit_square,
            lipschitz=0.25,
        ),
        Fixture(
            label="scalar_negslope",
            model=scalars["negslope_half"],
            region=unit_interval,
            lipschitz=0.25,
        ),
        Fixture(
            label="scalar_posslope",
            model=scalars["posslope_half"],
            region=unit_interval,
            lipschitz=0.02,
        ),
        Fixture(
            label="scalar_positive",
            model=scalars["affine_positive"],
            region=unit_interval,
            lipschitz=0.05,
            positive=True,
        ),
        Fixture(
            label="simplex_positive",
            model=linear_economy(np.eye(2), [-0.1, -0.1],
                                 label="simplex_positive", declared=_ALL_CLASSES),
            region=Simplex(2),
            lipschitz=0.02,
            positive=True,
        ),
        Fixture(
            label="mortgage_linear",
            model=linear_economy(np.eye(2), [0.5, 2.5],
                                 label="mortgage_linear", declared=_ALL_CLASSES),
            region=affine_rate_cap_region(-1.0, 1.0, mortgage_box_lo, mortgage_box_hi),
            lipschitz=0.1,
        ),
    ]
    return {f.label: f for f in fixtures}
