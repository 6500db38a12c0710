import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import minty_members_bruteforce, stampacchia_members_bruteforce
from walras_vi.constants import TAU_PROJ, TAU_SOLVE
from walras_vi.economy import default_catalog, linear_economy, scalar_catalog
from walras_vi.regions import Box, Polyhedron
from walras_vi.vi_core import (
    BUDGET_EXHAUSTED,
    CONVERGED,
    VIProblem,
    cluster_centroids,
    enumerate_solutions,
    minty_gap,
    residual,
    set_diameter,
    single_linkage_clusters,
    solve_extragradient,
    uniqueness_probe,
    verify_minty,
    verify_stampacchia,
)

UNIT_INTERVAL = Box([0.0], [1.0])
UNIT_SQUARE = Box([0.0, 0.0], [1.0, 1.0])

NEGSLOPE = VIProblem(scalar_catalog()["negslope_half"], UNIT_INTERVAL)
POSSLOPE = VIProblem(scalar_catalog()["posslope_half"], UNIT_INTERVAL)


def catalog_problem(label):
    fixture = default_catalog()[label]
    return VIProblem(fixture.model, fixture.region), fixture


# ---------------------------------------------------------------------------
# problem validation


def test_problem_requires_matching_dimensions():
    with pytest.raises(ValueError):
        VIProblem(linear_economy(np.eye(2), [0.0, 0.0]), UNIT_INTERVAL)


def test_problem_requires_bounded_region():
    unbounded = Box([0.0], [np.inf])
    with pytest.raises(ValueError, match="bounded"):
        VIProblem(scalar_catalog()["posslope_half"], unbounded)


# ---------------------------------------------------------------------------
# residual


def test_residual_zero_at_interior_zero_of_field():
    prob = VIProblem(linear_economy(np.eye(2), [0.4, 0.6]), UNIT_SQUARE)
    assert residual(prob, [0.4, 0.6]) == pytest.approx(0.0, abs=1e-14)


def test_residual_direct_arithmetic():
    assert residual(POSSLOPE, [0.0]) == pytest.approx(0.5)


def test_residual_of_solver_solution_meets_tolerance():
    result = solve_extragradient(NEGSLOPE, start=[0.3])
    assert residual(NEGSLOPE, result.solution) <= TAU_SOLVE


# ---------------------------------------------------------------------------
# extragradient solver


def test_solver_interior_zero():
    prob = VIProblem(linear_economy(np.eye(2), [0.25, 0.75]), UNIT_SQUARE)
    result = solve_extragradient(prob, start=[0.9, 0.1])
    assert result.status == CONVERGED
    assert result.residual < 1e-8
    assert_allclose(result.solution, [0.25, 0.75], atol=1e-7)


def test_solver_clamped_solution():
    prob = VIProblem(linear_economy(np.eye(2), [1.5, 0.5]), UNIT_SQUARE)
    result = solve_extragradient(prob)
    assert result.status == CONVERGED
    assert_allclose(result.solution, [1.0, 0.5], atol=1e-7)


def test_solver_scalar_interior():
    result = solve_extragradient(POSSLOPE, start=[0.1])
    assert result.status == CONVERGED
    assert result.solution[0] == pytest.approx(0.5, abs=1e-7)


def test_solver_budget_exhaustion_returns_best_iterate():
    prob, _ = catalog_problem("rotation")
    result = solve_extragradient(prob, start=[0.3, 0.8], budget=1)
    assert result.status == BUDGET_EXHAUSTED
    assert result.iterations == 1
    assert prob.region.contains(result.solution, tol=1e-9)
    assert result.trace.shape == (2,)


def test_solver_trace_records_residuals():
    prob = VIProblem(linear_economy(np.eye(2), [0.25, 0.75]), UNIT_SQUARE)
    result = solve_extragradient(prob, start=[0.9, 0.1])
    assert result.trace[0] == pytest.approx(residual(prob, [0.9, 0.1]))
    assert result.trace[-1] == pytest.approx(result.residual)
    assert result.iterations == result.trace.size - 1


def test_solver_rejects_infeasible_start():
    with pytest.raises(ValueError):
        solve_extragradient(POSSLOPE, start=[2.0])


def test_solver_start_point_independence_on_strict_fixtures():
    for label in ("linear_identity", "scalar_posslope", "scalar_positive",
                  "simplex_positive", "mortgage_linear"):
        prob, _ = catalog_problem(label)
        starts = prob.region.sample(10)
        solutions = [solve_extragradient(prob, start=s).solution for s in starts]
        for a in solutions:
            for b in solutions:
                assert np.linalg.norm(a - b) <= 10 * TAU_SOLVE, label


def test_minty_gap_signs():
    # at the dual-stationary point of an increasing field the gap is <= 0
    assert minty_gap(POSSLOPE, [0.5]) <= 1e-12
    assert minty_gap(NEGSLOPE, [0.5]) > 0.1


# ---------------------------------------------------------------------------
# verification


def test_verify_stampacchia_examples():
    grid = UNIT_INTERVAL.grid(0.01)
    assert verify_stampacchia(NEGSLOPE, [1.0], grid, tol=1e-12).satisfied
    report = verify_stampacchia(NEGSLOPE, [0.25], grid, tol=1e-12)
    assert not report.satisfied
    assert report.worst_value == pytest.approx(0.25 * (0.0 - 0.25))
    assert report.worst_point[0] == pytest.approx(0.0)


def test_verify_stampacchia_interior_zero():
    prob = VIProblem(linear_economy(np.eye(2), [0.5, 0.5]), UNIT_SQUARE)
    grid = UNIT_SQUARE.grid(0.1)
    assert verify_stampacchia(prob, [0.5, 0.5], grid, tol=1e-12).satisfied


def test_verify_minty_examples():
    grid = UNIT_INTERVAL.grid(0.01)
    assert verify_minty(POSSLOPE, [0.5], grid, tol=1e-12).satisfied
    for x in ([0.0], [0.4], [1.0]):
        assert not verify_minty(NEGSLOPE, x, grid, tol=1e-3).satisfied
    prob = VIProblem(linear_economy(np.eye(2), [0.5, 0.5]), UNIT_SQUARE)
    assert verify_minty(prob, [0.5, 0.5], UNIT_SQUARE.grid(0.1),
                        tol=1e-12).satisfied


def test_verify_rejects_empty_probe():
    with pytest.raises(ValueError):
        verify_stampacchia(POSSLOPE, [0.5], np.empty((0, 1)), tol=0.0)
    with pytest.raises(ValueError):
        verify_minty(POSSLOPE, [0.5], np.empty((0, 1)), tol=0.0)


# ---------------------------------------------------------------------------
# the solution-set oracle


def test_enumerate_negslope_separates_the_solution_sets():
    est = enumerate_solutions(NEGSLOPE, 0.01, 0.25)
    assert_allclose(np.sort(est.stampacchia_members.ravel()), [0.0, 0.5, 1.0])
    assert est.minty_members.shape[0] == 0


def test_enumerate_posslope_both_sets_at_half():
    est = enumerate_solutions(POSSLOPE, 0.01, 0.02)
    assert_allclose(est.stampacchia_members, [[0.5]])
    centroids = cluster_centroids(est.minty_members, 0.02)
    assert centroids.shape[0] == 1
    assert centroids[0][0] == pytest.approx(0.5, abs=0.01)


def test_enumerate_interior_zero_identity():
    prob = VIProblem(linear_economy(np.eye(2), [0.5, 0.5]), UNIT_SQUARE)
    est = enumerate_solutions(prob, 0.02, 0.1)
    assert_allclose(est.stampacchia_members, [[0.5, 0.5]])
    assert np.linalg.norm(
        est.minty_members - np.array([0.5, 0.5]), axis=1).max() <= 0.1


def test_enumerate_guards():
    big = VIProblem(linear_economy(np.eye(4), np.zeros(4)),
                    Box(np.zeros(4), np.ones(4)))
    with pytest.raises(ValueError, match="desk-scale"):
        enumerate_solutions(big, 0.1, 1.0)
    with pytest.raises(ValueError):
        enumerate_solutions(POSSLOPE, 0.01, -1.0)


def test_grid_with_no_feasible_points_raises():
    # small diamond: every bounding-box corner is infeasible and a coarse
    # mesh misses the interior entirely
    diamond = Polyhedron([[1, 1], [1, -1], [-1, 1], [-1, -1]],
                         [1.1, 0.1, 0.1, -0.9])
    with pytest.raises(ValueError, match="no feasible"):
        diamond.grid(0.16)


@pytest.mark.parametrize("label", ["linear_identity", "rotation",
                                   "scalar_negslope", "simplex_positive",
                                   "mortgage_linear"])
def test_enumerate_matches_bruteforce_oracle(label):
    # coarse double-loop scan, written from the definitions; the lipschitz
    # scale is chosen so no pairing value ties the tolerance exactly
    # (pairings on this grid are multiples of 0.01)
    prob, fixture = catalog_problem(label)
    spacing = 0.1
    est = enumerate_solutions(prob, spacing, lipschitz_scale=0.117)
    grid = est.grid_points
    tol = est.tolerance
    stamp_oracle = stampacchia_members_bruteforce(fixture.model, grid, tol)
    minty_oracle = minty_members_bruteforce(fixture.model, grid, tol)
    assert_allclose(est.stampacchia_members, stamp_oracle)
    assert_allclose(est.minty_members, minty_oracle)


# ---------------------------------------------------------------------------
# clustering and the uniqueness probe


def test_single_linkage_clusters():
    pts = np.array([[0.0], [0.01], [0.5], [1.0], [0.99]])
    clusters = single_linkage_clusters(pts, 0.02)
    assert [sorted(c.tolist()) for c in clusters] == [[0, 1], [2], [3, 4]]
    assert set_diameter(pts) == pytest.approx(1.0)
    assert set_diameter(pts[:1]) == 0.0


def test_uniqueness_probe_strictly_monotone():
    prob = VIProblem(linear_economy(np.eye(2), [0.5, 0.5]), UNIT_SQUARE)
    assert uniqueness_probe(prob, 0.02, 0.1)


def test_uniqueness_probe_negslope_three_clusters():
    assert not uniqueness_probe(NEGSLOPE, 0.01, 0.25)


def test_uniqueness_probe_constant_field_solution_face():
    prob, fixture = catalog_problem("constant_field")
    est = enumerate_solutions(prob, 0.02, fixture.lipschitz)
    members = est.stampacchia_members
    # the whole face x1 = 0 satisfies the primal condition
    assert np.all(members[:, 0] <= est.tolerance)
    assert members[:, 1].max() - members[:, 1].min() >= 0.9
    assert not uniqueness_probe(prob, 0.02, fixture.lipschitz, estimate=est)


# ---------------------------------------------------------------------------
# cross-cutting invariants on the catalog


@pytest.fixture(scope="module")
def catalog_estimates():
    out = {}
    for label, fixture in default_catalog().items():
        prob = VIProblem(fixture.model, fixture.region)
        out[label] = (prob, fixture,
                      enumerate_solutions(prob, 0.02, fixture.lipschitz))
    return out


def test_solver_agrees_with_oracle_cluster(catalog_estimates):
    for label, (prob, fixture, est) in catalog_estimates.items():
        members = est.stampacchia_members
        assert members.shape[0] > 0, label
        result = solve_extragradient(prob)
        assert result.status == CONVERGED, label
        gap = np.linalg.norm(members - result.solution, axis=1).min()
        assert gap <= 2 * est.grid_spacing, label


def test_minty_members_are_stampacchia_at_relaxed_tolerance(catalog_estimates):
    # continuum containment, certified in relaxed form: a dual member can
    # sit a sqrt(tol)-halo away from the solution (unit-order field
    # slopes), where the primal pairing degrades by halo times probe reach
    for label, (prob, fixture, est) in catalog_estimates.items():
        lo, hi = prob.region.bounding_box()
        relax = 2.0 * np.sqrt(est.tolerance) * np.linalg.norm(hi - lo)
        for x in est.minty_members:
            report = verify_stampacchia(prob, x, est.grid_points, tol=relax)
            assert report.satisfied, (label, x, report.worst_value)


def test_residual_soundness_two_sided(catalog_estimates):
    for label, (prob, fixture, est) in catalog_estimates.items():
        grid = est.grid_points
        evals = prob.model(grid)
        values = np.array([
            float(np.min((grid - x) @ ex)) for x, ex in zip(grid, evals)
        ])
        residuals = np.array([residual(prob, x) for x in grid])
        tight = residuals <= TAU_PROJ
        assert np.all(values[tight] >= -est.tolerance), label
        far = values < -2 * est.tolerance
        assert np.all(residuals[far] > TAU_PROJ), label
