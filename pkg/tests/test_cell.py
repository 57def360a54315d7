"""Cell problems: frame search, refinement estimates, competitors."""

import numpy as np
import pytest

from sdrelax import (
    estimate_relaxed_bulk,
    estimate_relaxed_surface,
    frame_grid_minimum,
    frame_oracle,
    identity_frame,
    relaxed_bulk_abs,
    relaxed_surface_abs,
)
from sdrelax.cell import (
    CellSolution,
    OptimizerBudget,
    realize_bulk_competitor,
    realize_surface_competitor,
)
from sdrelax.energy import BulkDensity, DensitySet, bulk_density, surface_density
from sdrelax.errors import NumericalFailureError

PSI_ABS = surface_density("abs_normal_jump")
DS_ABS = DensitySet.simple(bulk_density("zero"), PSI_ABS)


def _rank_one_double_well():
    C = np.outer([1.0, 0.0], [1.0, 0.0])

    def dw(A):
        return float(min(np.linalg.norm(A - C) ** 2,
                         np.linalg.norm(A + C) ** 2))

    return BulkDensity("rank_one_double_well", dw, growth_p=2.0,
                       lipschitz_C=4.0)


def test_one_dimensional_bulk_estimate_is_exact():
    sol = estimate_relaxed_bulk(np.array([[2.0]]), np.array([[1.0]]), DS_ABS)
    assert sol.value == pytest.approx(1.0, abs=1e-12)
    assert sol.kind == "bulk"
    assert sol.bound_kind == "upper"
    assert sol.competitor["family"] == "clamped-staircase"


def test_bulk_estimate_matches_trace_formula_in_two_dimensions():
    rng = np.random.default_rng(61)
    for _ in range(6):
        A = rng.normal(size=(2, 2))
        B = rng.normal(size=(2, 2))
        sol = estimate_relaxed_bulk(A, B, DS_ABS)
        assert sol.value == pytest.approx(relaxed_bulk_abs(A, B), abs=1e-9)


def test_bulk_estimate_is_deterministic():
    A = np.array([[0.4, -1.1], [0.7, 0.2]])
    B = np.array([[-0.3, 0.5], [0.1, 0.9]])
    first = estimate_relaxed_bulk(A, B, DS_ABS)
    second = estimate_relaxed_bulk(A, B, DS_ABS)
    assert first.value == second.value
    assert first.frame.angles == second.frame.angles


def test_frame_grid_finds_the_equalizing_frame():
    value, frame = frame_grid_minimum(np.diag([1.0, -1.0]), PSI_ABS)
    assert value == pytest.approx(0.0, abs=1e-6)
    assert frame.angles[0] == pytest.approx(np.pi / 4, abs=np.pi / 720)
    assert frame_oracle(np.diag([1.0, -1.0]), PSI_ABS) == value


def test_frame_grid_never_beats_the_trace_floor():
    rng = np.random.default_rng(62)
    for _ in range(25):
        M = rng.normal(size=(2, 2))
        value, _ = frame_grid_minimum(M, PSI_ABS)
        assert value >= abs(np.trace(M)) - 1e-10


def test_frame_grid_in_three_dimensions():
    rng = np.random.default_rng(63)
    M = rng.normal(size=(3, 3))
    value, frame = frame_grid_minimum(M, PSI_ABS, resolution=24)
    assert len(frame.angles) == 3
    assert value >= abs(np.trace(M)) - 1e-10


def test_more_optimizer_restarts_never_hurt():
    A = np.array([[1.3, -0.4], [0.8, -0.9]])
    B = np.array([[0.2, 0.6], [-0.5, 0.1]])
    lean = estimate_relaxed_bulk(A, B, DS_ABS, OptimizerBudget(restarts=2))
    rich = estimate_relaxed_bulk(A, B, DS_ABS, OptimizerBudget(restarts=12))
    assert rich.value <= lean.value + 1e-12


def test_certified_estimate_reports_realized_energies():
    sol = estimate_relaxed_bulk(np.array([[2.0]]), np.array([[1.0]]), DS_ABS,
                                OptimizerBudget(certify=True))
    realized = dict(sol.meta["realized"])
    for n, observed in realized.items():
        u, energy_n = realize_bulk_competitor(np.array([[2.0]]),
                                              np.array([[1.0]]),
                                              identity_frame(1), n,
                                              densities=DS_ABS)
        assert observed == pytest.approx(energy_n, abs=1e-12)
        # The boundary layer displaces one plane on each side, so the
        # finite-n energy is (n - 2)/n and the gap to the limit is 2/n.
        assert energy_n == pytest.approx((n - 2) / n, abs=1e-12)
    ns = sorted(realized)
    for coarse, fine in zip(ns, ns[1:]):
        gap_ratio = (sol.value - realized[coarse]) / (sol.value - realized[fine])
        assert gap_ratio == pytest.approx(2.0, abs=1e-9)


def test_realized_energies_approach_the_reported_value():
    rng = np.random.default_rng(64)
    A = rng.normal(size=(2, 2))
    B = rng.normal(size=(2, 2))
    sol = estimate_relaxed_bulk(A, B, DS_ABS)
    gaps = []
    for n in (8, 16, 32, 64):
        _, energy_n = realize_bulk_competitor(A, B, sol.frame, n,
                                              densities=DS_ABS)
        gaps.append(abs(energy_n - sol.value))
    assert gaps[-1] < gaps[0]
    assert gaps[-1] < 0.2 * max(gaps[0], 1e-9) + 0.05


def test_laminate_closes_a_double_well_gap():
    ds = DensitySet.simple(_rank_one_double_well(), PSI_ABS)
    B = np.zeros((2, 2))
    sol = estimate_relaxed_bulk(B, B, ds)
    assert sol.value == pytest.approx(0.0, abs=1e-8)
    assert sol.meta["laminate_gain"] == pytest.approx(1.0, abs=1e-8)
    laminate = sol.competitor["laminate"]
    outer = np.outer(laminate["amplitude"], laminate["direction"])
    assert np.allclose(np.abs(outer), np.outer([1, 0], [1, 0]), atol=1e-6)


def test_laminate_never_fires_for_convex_wells():
    ds = DensitySet.simple(bulk_density("frobenius_power"), PSI_ABS)
    B = np.array([[0.3, 0.1], [0.0, -0.2]])
    sol = estimate_relaxed_bulk(B, B, ds)
    assert sol.value == pytest.approx(float(np.linalg.norm(B)) ** 2,
                                      abs=1e-9)
    assert sol.meta.get("laminate_gain") is None


def test_surface_estimate_matches_normal_jump():
    rng = np.random.default_rng(65)
    for dim in (2, 3):
        for _ in range(10):
            lam = rng.normal(size=dim)
            nu = rng.normal(size=dim)
            nu /= np.linalg.norm(nu)
            sol = estimate_relaxed_surface(lam, nu, PSI_ABS)
            assert sol.value == pytest.approx(relaxed_surface_abs(lam, nu),
                                              abs=1e-9)
            assert sol.kind == "surface"


def test_splitting_the_jump_never_helps_the_abs_kernel():
    rng = np.random.default_rng(66)
    for _ in range(10):
        lam = rng.normal(size=2)
        nu = rng.normal(size=2)
        nu /= np.linalg.norm(nu)
        single = abs(float(lam @ nu))
        for splits in (((0.5, -0.2), (0.5, 0.2)),
                       ((0.25, -0.3), (0.5, 0.0), (0.25, 0.3))):
            _, split_energy = realize_surface_competitor(lam, nu,
                                                         splits=splits,
                                                         psi=PSI_ABS)
            assert split_energy >= single - 1e-9


def test_realized_surface_competitor_energy_is_fraction_weighted():
    lam = np.array([0.4, 0.3])
    nu = np.array([0.0, 1.0])
    splits = ((0.3, -0.25), (0.7, 0.15))
    _, total = realize_surface_competitor(lam, nu, splits=splits, psi=PSI_ABS)
    expected = sum(frac * PSI_ABS(frac * lam, nu) / frac for frac, _ in splits)
    assert total == pytest.approx(expected, abs=1e-12)
    assert total == pytest.approx(abs(float(lam @ nu)), abs=1e-12)


def test_cell_solution_rejects_non_finite_values():
    with pytest.raises(NumericalFailureError) as err:
        CellSolution(value=float("nan"), kind="bulk")
    assert "competitor" in err.value.payload


def test_bulk_estimate_surfaces_density_failures():
    bad = BulkDensity("nan_density", lambda A: float("nan"))
    with pytest.raises(NumericalFailureError) as err:
        estimate_relaxed_bulk(np.eye(2), np.zeros((2, 2)),
                              DensitySet.simple(bad, PSI_ABS))
    assert "competitor" in err.value.payload
