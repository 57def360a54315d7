"""Two-phase design energies, phase fields, and interface cell problems."""

import numpy as np
import pytest

from sdrelax.energy import (
    DensitySet,
    bulk_density,
    energy,
    interface_density,
    surface_density,
)
from sdrelax.errors import DimensionMismatchError, MeshMismatchError
from sdrelax.fields import GridField, GridMesh, random_structured_deformation
from sdrelax.geometry import Box
from sdrelax.optdesign import (
    DesignBoundaryData,
    DesignDensityTables,
    PhaseField,
    design_energy,
    estimate_interface_cell,
    estimate_phase_relaxed_bulk,
    perimeter,
    relaxed_design_energy,
)
from sdrelax.cell import estimate_relaxed_bulk

PSI_ABS = surface_density("abs_normal_jump")
DS_DESIGN = DensitySet.design(bulk_density("zero"), bulk_density("zero"),
                              PSI_ABS, PSI_ABS,
                              interface_density("phase_gap_normal_jump"))


def _square_mesh(resolution):
    return GridMesh(Box((0.0, 0.0), (1.0, 1.0)), resolution)


def test_phase_field_validation():
    mesh = _square_mesh((2, 2))
    with pytest.raises(DimensionMismatchError):
        PhaseField(mesh, np.ones(3))
    with pytest.raises(ValueError):
        PhaseField(mesh, np.array([0, 1, 2, 0]))
    with pytest.raises(ValueError):
        PhaseField(mesh, np.array([0.0, 0.5, 1.0, 0.0]))
    chi = PhaseField.constant(mesh, 1)
    assert chi.cell_value.tolist() == [1, 1, 1, 1]
    assert chi.consistent()


def test_perimeter_oracles():
    mesh = _square_mesh((2, 2))
    assert perimeter(PhaseField.constant(mesh, 0)) == 0.0
    left = PhaseField.from_indicator(mesh, lambda x: x[0] < 0.5)
    assert perimeter(left) == pytest.approx(1.0)
    checker = PhaseField.from_indicator(mesh,
                                        lambda x: (x[0] < 0.5) ^ (x[1] < 0.5))
    assert perimeter(checker) == pytest.approx(2.0)
    fine = _square_mesh((4, 4))
    stripes = PhaseField.from_indicator(fine,
                                        lambda x: int(4 * x[0]) % 2 == 0)
    assert perimeter(stripes) == pytest.approx(3.0)


def test_constant_phase_design_energy_reduces_to_plain_energy():
    ds = DensitySet.design(bulk_density("frobenius_power"),
                           bulk_density("zero"),
                           surface_density("jump_magnitude"), PSI_ABS,
                           interface_density("phase_gap_normal_jump"))
    for seed in range(6):
        sd = random_structured_deformation(seed, dim=2, resolution=3)
        u = sd.g
        for phase, plain_ds in ((0, DensitySet.simple(
                bulk_density("frobenius_power"),
                surface_density("jump_magnitude"))),
                (1, DensitySet.simple(bulk_density("zero"), PSI_ABS))):
            chi = PhaseField.constant(u.mesh, phase)
            assert design_energy(chi, u, ds) == pytest.approx(
                energy(u, plain_ds), abs=1e-12)


def test_design_energy_two_cell_hand_oracle():
    mesh = GridMesh(Box((0.0, 0.0), (1.0, 1.0)), (2, 1))
    A = np.array([[0.2, 0.0], [0.0, 0.3]])
    lam = np.array([0.6, -0.4])
    gradients = np.stack([A, A])
    offsets = np.stack([np.zeros(2), lam])  # constant jump lam across x=1/2
    u = GridField(mesh, gradients, offsets)
    chi = PhaseField(mesh, np.array([0, 1]))
    ds = DensitySet.design(bulk_density("frobenius_power"),
                           bulk_density("frobenius_power"),
                           PSI_ABS, PSI_ABS,
                           interface_density("phase_gap_normal_jump"))
    # Each half contributes its bulk integral; the single interior face
    # carries perimeter 1 and the phase-gap kernel |a-b| |lam . e1|.
    expected = (0.5 * float(np.linalg.norm(A)) ** 2 * 2
                + 1.0 + abs(lam[0]))
    assert design_energy(chi, u, ds) == pytest.approx(expected, abs=1e-12)
    # Without the phase flip the same face costs only the phase-0 kernel.
    chi0 = PhaseField.constant(mesh, 0)
    expected0 = float(np.linalg.norm(A)) ** 2 + abs(lam[0])
    assert design_energy(chi0, u, ds) == pytest.approx(expected0, abs=1e-12)


def test_design_energy_validates_meshes_and_field_kind():
    mesh = _square_mesh((2, 2))
    other = _square_mesh((3, 3))
    sd = random_structured_deformation(0, dim=2, resolution=2)
    chi_wrong = PhaseField.constant(other, 1)
    with pytest.raises(MeshMismatchError):
        design_energy(chi_wrong, sd.g, DS_DESIGN)
    from sdrelax.fields import broken_ramp
    chi1 = PhaseField.constant(GridMesh(Box((0.0,), (1.0,)), (4,)), 1)
    with pytest.raises(MeshMismatchError):
        design_energy(chi1, broken_ramp(4), DS_DESIGN)


def test_interface_cell_boundary_data_validation():
    nu = np.array([0.0, 1.0])
    c = np.array([0.3, 0.4])
    with pytest.raises(ValueError):
        DesignBoundaryData(2, 0, c, c, nu)
    with pytest.raises(DimensionMismatchError):
        DesignBoundaryData(1, 0, c, np.zeros(3), nu)
    data = DesignBoundaryData(1, 0, c, np.zeros(2), nu)
    assert np.allclose(data.jump, c)


def test_interface_cell_vanishes_without_any_jump():
    nu = np.array([0.0, 1.0])
    c = np.array([0.3, 0.4])
    for phase in (0, 1):
        sol = estimate_interface_cell(
            DesignBoundaryData(phase, phase, c, c, nu), DS_DESIGN)
        assert sol.value == 0.0
        assert sol.competitor["phase_jump_slots"] == []
        assert sol.competitor["deformation_jump_slots"] == []


def test_interface_cell_pure_phase_jump_costs_the_perimeter():
    nu = np.array([0.0, 1.0])
    c = np.array([0.3, 0.4])
    sol = estimate_interface_cell(DesignBoundaryData(1, 0, c, c, nu),
                                  DS_DESIGN)
    assert sol.value == pytest.approx(1.0, abs=1e-9)
    assert len(sol.competitor["phase_jump_slots"]) == 1


def test_interface_cell_pure_deformation_jump_skips_the_perimeter():
    nu = np.array([0.0, 1.0])
    c = np.array([0.3, 0.9])
    d = np.array([0.3, 0.4])
    sol = estimate_interface_cell(DesignBoundaryData(1, 1, c, d, nu),
                                  DS_DESIGN)
    assert sol.value == pytest.approx(abs(float((c - d) @ nu)), abs=1e-9)
    assert sol.competitor["phase_jump_slots"] == []


def test_interface_cell_prefers_coincident_planes_when_pairing_is_free():
    # With a vanishing pair kernel, stacking both jumps on one plane costs
    # just the perimeter; any separated layout also pays the deformation
    # kernel. The enumeration must find the coincident layout.
    ds_free = DensitySet.design(bulk_density("zero"), bulk_density("zero"),
                                PSI_ABS, PSI_ABS, interface_density("zero"))
    nu = np.array([0.0, 1.0])
    c = np.array([0.0, 0.8])
    d = np.zeros(2)
    sol = estimate_interface_cell(DesignBoundaryData(1, 0, c, d, nu), ds_free)
    assert sol.value == pytest.approx(1.0, abs=1e-9)
    assert (sol.competitor["phase_jump_slots"]
            == sol.competitor["deformation_jump_slots"])
    # The phase-gap kernel makes pairing cost |lam . nu| either way.
    sol2 = estimate_interface_cell(DesignBoundaryData(1, 0, c, d, nu),
                                   DS_DESIGN)
    assert sol2.value == pytest.approx(1.0 + 0.8, abs=1e-9)


def test_phase_bulk_estimate_selects_the_phase_densities():
    A = np.array([[1.1, 0.2], [0.0, 0.4]])
    B = np.array([[0.3, -0.1], [0.2, 0.6]])
    ds = DensitySet.design(bulk_density("zero"), bulk_density("frobenius_power"),
                           PSI_ABS, PSI_ABS,
                           interface_density("phase_gap_normal_jump"))
    sol0 = estimate_phase_relaxed_bulk(0, A, B, ds)
    plain0 = estimate_relaxed_bulk(A, B, DensitySet.simple(
        bulk_density("zero"), PSI_ABS))
    assert sol0.value == pytest.approx(plain0.value, abs=1e-12)
    assert sol0.meta["phase"] == 0
    sol1 = estimate_phase_relaxed_bulk(1, A, B, ds)
    assert sol1.value > sol0.value  # phase 1 pays the bulk well too
    with pytest.raises(ValueError):
        estimate_phase_relaxed_bulk(2, A, B, ds)


def test_relaxed_design_energy_with_closed_form_tables():
    # Plumbing check against hand-computed totals: exact trace-abs bulk
    # table, interface table charging perimeter plus normal jump.
    mesh = GridMesh(Box((0.0, 0.0), (1.0, 1.0)), (2, 1))
    A = np.array([[0.5, 0.0], [0.0, 0.1]])
    u = GridField(mesh, np.stack([A, A]), np.zeros((2, 2)))
    G = np.stack([A - np.diag([0.4, 0.0]), A - np.diag([0.0, -0.7])])

    class SD:
        pass

    sd = SD()
    sd.g = u
    sd.G = G
    tables = DesignDensityTables(
        bulk=lambda i, Ag, Bg: abs(float(np.trace(Ag - Bg))),
        interface=lambda a, b, c, d, nu: (abs(a - b)
                                          + abs(float((np.asarray(c)
                                                       - np.asarray(d)) @ nu))))
    chi_const = PhaseField.constant(mesh, 1)
    # Continuous deformation, no phase flip: bulk terms only.
    assert relaxed_design_energy(chi_const, sd, tables) == pytest.approx(
        0.5 * 0.4 + 0.5 * 0.7, abs=1e-12)
    # A phase flip adds the unit-area interface with coinciding traces.
    chi_split = PhaseField(mesh, np.array([0, 1]))
    assert relaxed_design_energy(chi_split, sd, tables) == pytest.approx(
        0.5 * 0.4 + 0.5 * 0.7 + 1.0, abs=1e-12)


def test_relaxed_design_energy_from_numerical_tables_in_one_dimension():
    mesh = GridMesh(Box((0.0,), (1.0,)), (2,))
    u = GridField(mesh, np.full((2, 1, 1), 2.0), np.zeros((2, 1)))
    sd_g = u

    class SD:
        pass

    sd = SD()
    sd.g = sd_g
    sd.G = np.full((2, 1, 1), 1.0)
    tables = DesignDensityTables.from_estimators(DS_DESIGN)
    chi_split = PhaseField(mesh, np.array([0, 1]))
    # Both cells give the scalar cell value |2 - 1| = 1; the phase flip
    # adds an interface cell worth exactly the perimeter.
    value = relaxed_design_energy(chi_split, sd, tables)
    assert value == pytest.approx(0.5 + 0.5 + 1.0, abs=1e-9)
    # Memoization returns identical numbers on repeat evaluation.
    assert relaxed_design_energy(chi_split, sd, tables) == value
