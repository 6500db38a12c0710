"""Shared independent oracles for the test suite.

Everything here is deliberately written from the definitions, without
reusing the library's own grid or scan machinery, so the tests cross
two independent routes wherever the library computes something nontrivial.
"""

from __future__ import annotations

import itertools

import numpy as np


# ---------------------------------------------------------------------------
# brute-force quadratic-projection oracles


def box_grid(lower, upper, spacing) -> np.ndarray:
    axes = [np.linspace(lo, hi, int(round((hi - lo) / spacing)) + 1)
            for lo, hi in zip(lower, upper)]
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")],
                    axis=-1)


def simplex_lattice(n, resolution) -> np.ndarray:
    pts = [np.array(c, dtype=float) / resolution
           for c in itertools.product(range(resolution + 1), repeat=n)
           if sum(c) == resolution]
    return np.array(pts)


def nearest_grid_point(grid, x) -> np.ndarray:
    return grid[np.argmin(np.linalg.norm(grid - np.asarray(x, float), axis=1))]


# ---------------------------------------------------------------------------
# amortization schedule oracle


def final_balance(principal, periods, rate, payment) -> float:
    balance = principal
    for _ in range(periods):
        balance = balance * (1.0 + rate) - payment
    return balance


def payment_by_bisection(principal, periods, rate) -> float:
    lo, hi = 0.0, principal * (1.0 + rate) ** periods
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if final_balance(principal, periods, rate, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# direct double-loop solution-set scans (independent of vi_core internals)


def stampacchia_members_bruteforce(model, grid, tol) -> np.ndarray:
    members = []
    for x in grid:
        ex = model(x)
        if min(float(ex @ (p - x)) for p in grid) >= -tol:
            members.append(x)
    return np.array(members) if members else np.empty((0, grid.shape[1]))


def minty_members_bruteforce(model, grid, tol) -> np.ndarray:
    members = []
    evals = [model(p) for p in grid]
    for x in grid:
        if min(float(ep @ (p - x)) for ep, p in zip(evals, grid)) >= -tol:
            members.append(x)
    return np.array(members) if members else np.empty((0, grid.shape[1]))
