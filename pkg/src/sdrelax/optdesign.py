"""Two-phase optimal design on fractured media.

A phase field chi marks each mesh cell as material 0 or 1. The design
energy selects the bulk and surface densities by phase, charges a pair
density on facets where the deformation and the phase jump together, and
adds the perimeter of the phase interface. The relaxed counterparts are
estimated with the same competitor philosophy as the plain cell problems:

* bulk: the phase-i cell problem simply delegates to the staircase
  estimate with the phase-i densities;
* interface: layered competitors, piecewise constant in the direction of
  the interface normal with at most two jump planes per field. Only the
  ordering and coincidence of the planes matter (every plane section of
  the rotated unit cube has unit area), so the search is an exact
  enumeration over plane patterns plus a one-dimensional optimization of
  the free intermediate value.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy import optimize

from .cell import CellSolution, OptimizerBudget, estimate_relaxed_bulk
from .core import as_unit_vector
from .energy import DensitySet
from .errors import DimensionMismatchError, MeshMismatchError
from .fields import GridField, GridMesh, _facet_from_face

_SLOTS = (-0.25, 0.0, 0.25)


@dataclass(frozen=True)
class PhaseField:
    """Cellwise material indicator on a grid mesh; values are exactly 0 or 1."""

    mesh: GridMesh
    cell_value: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.cell_value)
        if vals.shape != (self.mesh.n_cells,):
            raise DimensionMismatchError(
                f"cell_value shape {vals.shape} does not fit the mesh")
        as_int = vals.astype(int)
        if np.any(as_int != vals) or not np.all((as_int == 0) | (as_int == 1)):
            raise ValueError("phase values must be exactly 0 or 1")
        frozen = as_int.copy()
        frozen.setflags(write=False)
        object.__setattr__(self, "cell_value", frozen)

    @classmethod
    def constant(cls, mesh, value):
        return cls(mesh, np.full(mesh.n_cells, int(value)))

    @classmethod
    def from_indicator(cls, mesh, indicator):
        """Sample a point predicate at cell centers."""
        centers = mesh.to_physical(mesh.centers())
        return cls(mesh, np.array([1 if indicator(x) else 0 for x in centers]))

    @cached_property
    def phase_facets(self):
        """Interfaces between cells of different phase: (area, normal, face key)."""
        out = []
        for axis, fixed, flo, fhi, free_axes, bounds in self.mesh.interior_faces():
            if self.cell_value[flo] == self.cell_value[fhi]:
                continue
            area = float(np.prod([b - a for a, b in bounds])) if bounds else 1.0
            out.append((area, self.mesh.face_normal(axis), (axis, fixed, flo, fhi)))
        return tuple(out)

    def consistent(self):
        """Recompute the interface list and compare against cell values."""
        recomputed = {key for _, _, key in self.phase_facets}
        fresh = set()
        for axis, fixed, flo, fhi, _, _ in self.mesh.interior_faces():
            if self.cell_value[flo] != self.cell_value[fhi]:
                fresh.add((axis, fixed, flo, fhi))
        return recomputed == fresh


@dataclass(frozen=True)
class DesignBoundaryData:
    """Boundary datum of the interface cell problem on the rotated cube.

    The + side of the cube (x . normal > 0) carries phase a and value c,
    the - side phase b and value d.
    """

    a: int
    b: int
    c: np.ndarray
    d: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if v not in (0, 1):
                raise ValueError(f"phase {name} must be 0 or 1, got {v!r}")
            object.__setattr__(self, name, int(v))
        c = np.asarray(self.c, dtype=float).reshape(-1)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if c.shape != d.shape:
            raise DimensionMismatchError("boundary values c and d must match in size")
        nu = as_unit_vector(self.normal)
        for name, v in (("c", c), ("d", d), ("normal", nu)):
            v = v.copy()
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def jump(self):
        return self.c - self.d


def perimeter(chi):
    """Total area of the phase interface."""
    return float(sum(area for area, _, _ in chi.phase_facets))


def _require_same_mesh(mesh_a, mesh_b):
    same = (mesh_a is mesh_b) or (
        mesh_a.box == mesh_b.box and mesh_a.resolution == mesh_b.resolution
        and ((mesh_a.rotation is None and mesh_b.rotation is None)
             or (mesh_a.rotation is not None and mesh_b.rotation is not None
                 and np.max(np.abs(mesh_a.rotation - mesh_b.rotation)) < 1e-12)))
    if not same:
        raise MeshMismatchError("phase field and deformation must share a mesh")


def _grid_face_facet(u, axis, fixed, flo, fhi, free_axes, bounds, keep_all):
    """Facet of a grid field across one mesh face, or None when continuous."""
    R = u.mesh.rotation
    dA = u.gradients[fhi] - u.gradients[flo]
    do = u.offsets[fhi] - u.offsets[flo]
    dA_ref = dA if R is None else dA @ R
    grad_free = dA_ref[:, free_axes]
    const_part = dA_ref[:, axis] * fixed + do
    normal = u.mesh.face_normal(axis)

    def jump_centroid(pts_ref, _c=const_part, _g=grad_free, _fa=free_axes):
        return _c[None, :] + pts_ref[:, _fa] @ _g.T

    return _facet_from_face(u.dim, axis, fixed, bounds, [], normal,
                            jump_centroid, grad_free, R, fixed,
                            keep_all=keep_all)


def _traces_at(u, flo, fhi, points):
    """One-sided values of a grid field at physical facet points."""
    lower = points @ u.gradients[flo].T + u.offsets[flo]
    upper = points @ u.gradients[fhi].T + u.offsets[fhi]
    return upper, lower  # + side first: the face normal points into the upper cell


def design_energy(chi, u, ds):
    """Two-phase energy of (chi, u): phase-selected bulk and surface terms,
    a pair term where the deformation jumps across the phase interface, and
    the perimeter of that interface.
    """
    ds.require_design()
    if not isinstance(u, GridField):
        raise MeshMismatchError("design energies need a grid field")
    _require_same_mesh(chi.mesh, u.mesh)

    vol = u.mesh.cell_volume
    total = 0.0
    for i in range(u.mesh.n_cells):
        W = ds.W1 if chi.cell_value[i] == 1 else ds.W0
        if not W.is_zero:
            total += vol * float(W(u.gradients[i]))

    for axis, fixed, flo, fhi, free_axes, bounds in u.mesh.interior_faces():
        phase_lo = int(chi.cell_value[flo])
        phase_hi = int(chi.cell_value[fhi])
        phase_jumps = phase_lo != phase_hi
        facet = _grid_face_facet(u, axis, fixed, flo, fhi, free_axes, bounds,
                                 keep_all=False)
        if not phase_jumps:
            if facet is not None:
                psi1 = ds.Psi1_1 if phase_lo == 1 else ds.Psi1_0
                total += float(sum(w * psi1(j, facet.normal)
                                   for w, j in zip(facet.quad_weights,
                                                   facet.quad_jumps)))
            continue
        area = float(np.prod([b - a for a, b in bounds])) if bounds else 1.0
        total += area  # perimeter of the phase interface
        if facet is not None:
            up, lo = _traces_at(u, flo, fhi, facet.quad_points)
            total += float(sum(w * ds.Psi2(phase_hi, phase_lo, cu, cl, facet.normal)
                               for w, cu, cl in zip(facet.quad_weights, up, lo)))
    return total


def estimate_phase_relaxed_bulk(phase, A, B, ds, budget=None):
    """Bulk cell problem with the densities of the given phase."""
    ds.require_design()
    if phase not in (0, 1):
        raise ValueError(f"phase must be 0 or 1, got {phase!r}")
    W, psi1 = ds.phase(phase)
    sol = estimate_relaxed_bulk(A, B, DensitySet.simple(W, psi1), budget)
    meta = dict(sol.meta)
    meta["phase"] = int(phase)
    return CellSolution(value=sol.value, kind=sol.kind, frame=sol.frame,
                        decomposition=sol.decomposition, splits=sol.splits,
                        refinement_n=sol.refinement_n, competitor=sol.competitor,
                        method=sol.method, meta=meta)


def _chi_patterns(a, b):
    """Slot subsets where the phase flips, ordered simplest first."""
    idx = range(len(_SLOTS))
    if a == b:
        return [()] + [p for p in combinations(idx, 2)]
    return [(i,) for i in idx]


def _u_patterns(c, d):
    """Slot subsets where the deformation jumps, ordered simplest first."""
    idx = range(len(_SLOTS))
    out = []
    if float(np.linalg.norm(c - d)) == 0.0:
        out.append(())
    out.extend((i,) for i in idx)
    out.extend(p for p in combinations(idx, 2))
    return out


def _layer_values(start, end, pattern, middle):
    """Per-layer values when the field jumps at the pattern's slots.

    Layer i lies between slot i-1 and slot i; a jump at slot s separates
    layers s and s+1. Two-jump patterns place the middle value between.
    """
    layers = []
    for layer in range(len(_SLOTS) + 1):
        taken = sum(1 for s in pattern if s < layer)
        if taken == len(pattern):
            layers.append(end)
        elif taken == 0:
            layers.append(start)
        else:
            layers.append(middle)
    return layers


def _pattern_cost(data, ds, chi_pat, u_pat, w):
    """Energy of the layered competitor with the given jump patterns."""
    other = 1 - data.a if data.a == data.b else None
    chi_layers = _layer_values(data.b, data.a, chi_pat, other)
    u_layers = _layer_values(data.d, data.c, u_pat, w)
    nu = data.normal
    cost = 0.0
    for s in range(len(_SLOTS)):
        chi_l, chi_r = chi_layers[s], chi_layers[s + 1]
        u_l, u_r = u_layers[s], u_layers[s + 1]
        chi_jumps = chi_l != chi_r
        u_jumps = float(np.linalg.norm(np.asarray(u_r) - np.asarray(u_l))) > 0.0
        if chi_jumps:
            cost += 1.0  # perimeter: unit plane section
            if u_jumps:
                cost += float(ds.Psi2(chi_r, chi_l, np.asarray(u_r),
                                      np.asarray(u_l), nu))
        elif u_jumps:
            psi1 = ds.Psi1_1 if chi_l == 1 else ds.Psi1_0
            cost += float(psi1(np.asarray(u_r) - np.asarray(u_l), nu))
    return cost


def estimate_interface_cell(data, ds, budget=None):
    """Upper estimate of the two-field interface cell problem.

    Minimizes over layered competitors: both fields piecewise constant
    between planes normal to the boundary datum's direction, with at most
    two jump planes each on three candidate slots. Plane positions only
    matter through coincidence, so patterns are enumerated exactly; the
    free intermediate deformation value of two-plane profiles is optimized
    by Nelder-Mead from deterministic starts.
    """
    ds.require_design()
    budget = budget or OptimizerBudget()
    best = None
    nm_options = {"maxiter": budget.max_iterations,
                  "xatol": budget.simplex_tolerance,
                  "fatol": budget.simplex_tolerance}
    for chi_pat in _chi_patterns(data.a, data.b):
        for u_pat in _u_patterns(data.c, data.d):
            if len(u_pat) < 2:
                value = _pattern_cost(data, ds, chi_pat, u_pat, None)
                w_best = None
            else:
                def cost_of(wvec):
                    return _pattern_cost(data, ds, chi_pat, u_pat, wvec)

                value = np.inf
                w_best = None
                for w0 in (0.5 * (data.c + data.d), data.d.copy(), data.c.copy()):
                    res = optimize.minimize(cost_of, w0, method="Nelder-Mead",
                                            options=nm_options)
                    if res.fun < value - 1e-15:
                        value = float(res.fun)
                        w_best = np.asarray(res.x, dtype=float)
            if best is None or value < best[0] - 1e-12:
                best = (float(value), chi_pat, u_pat, w_best)
    value, chi_pat, u_pat, w_best = best
    intermediate = None if w_best is None else tuple(float(x) for x in w_best)
    meta = {"slots": _SLOTS, "chi_slots": chi_pat, "u_slots": u_pat,
            "intermediate": intermediate}
    competitor = {"family": "layered-planes",
                  "phase_jump_slots": [_SLOTS[i] for i in chi_pat],
                  "deformation_jump_slots": [_SLOTS[i] for i in u_pat],
                  "intermediate_value": None if intermediate is None
                  else list(intermediate)}
    return CellSolution(value=value, kind="interface", competitor=competitor,
                        method="layered-enumeration", meta=meta)


@dataclass(frozen=True)
class DesignDensityTables:
    """Relaxed design densities as callables: bulk(i, A, B), interface(a, b, c, d, nu)."""

    bulk: object
    interface: object

    @classmethod
    def from_estimators(cls, ds, budget=None):
        """Memoized numerical tables built from the two design estimators."""
        ds.require_design()
        budget = budget or OptimizerBudget()
        bulk_memo = {}
        iface_memo = {}

        def bulk(i, A, B):
            A = np.asarray(A, dtype=float)
            B = np.asarray(B, dtype=float)
            key = (int(i), A.tobytes(), B.tobytes(), A.shape)
            if key not in bulk_memo:
                bulk_memo[key] = estimate_phase_relaxed_bulk(i, A, B, ds, budget).value
            return bulk_memo[key]

        def interface(a, b, c, d, nu):
            c = np.asarray(c, dtype=float).reshape(-1)
            d = np.asarray(d, dtype=float).reshape(-1)
            nu = np.asarray(nu, dtype=float).reshape(-1)
            key = (int(a), int(b), c.tobytes(), d.tobytes(), nu.tobytes())
            if key not in iface_memo:
                data = DesignBoundaryData(a, b, c, d, nu)
                iface_memo[key] = estimate_interface_cell(data, ds, budget).value
            return iface_memo[key]

        return cls(bulk=bulk, interface=interface)


def relaxed_design_energy(chi, sd, tables):
    """Relaxed two-phase functional of (chi, structured deformation).

    The bulk term selects the phase of each cell; the surface term runs
    over the union of the phase interface and the deformation's jump set,
    feeding one-sided traces of both fields to the interface density. On
    facets where only one field jumps the other's traces coincide.
    """
    g = sd.g
    _require_same_mesh(chi.mesh, g.mesh)
    vol = g.mesh.cell_volume
    total = 0.0
    for i in range(g.mesh.n_cells):
        total += vol * float(tables.bulk(int(chi.cell_value[i]),
                                         g.gradients[i], sd.G[i]))

    for axis, fixed, flo, fhi, free_axes, bounds in g.mesh.interior_faces():
        phase_lo = int(chi.cell_value[flo])
        phase_hi = int(chi.cell_value[fhi])
        phase_jumps = phase_lo != phase_hi
        facet = _grid_face_facet(g, axis, fixed, flo, fhi, free_axes, bounds,
                                 keep_all=phase_jumps)
        if facet is None:
            continue  # neither field jumps across this face
        up, lo = _traces_at(g, flo, fhi, facet.quad_points)
        total += float(sum(w * tables.interface(phase_hi, phase_lo, cu, cl,
                                                facet.normal)
                           for w, cu, cl in zip(facet.quad_weights, up, lo)))
    return total
