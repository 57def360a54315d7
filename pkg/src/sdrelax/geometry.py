"""Axis-aligned box geometry, plane sections, and small quadrature rules.

Everything in this module works in reference coordinates, where boxes are
axis aligned and dimensions run from 1 to 3. Rotated domains are handled by
the field classes, which map physical points into reference coordinates
before calling in here. Planar measures follow the codimension-one
convention: a point in 1-d counts with measure 1, a segment in 2-d with its
length, a polygon in 3-d with its area.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError, DomainError

# Degenerate geometry below this size is discarded.
MEASURE_EPS = 1e-12


def _as_point(p, dim):
    a = np.asarray(p, dtype=float).reshape(-1)
    if a.size != dim:
        raise DimensionMismatchError(f"expected a point in R^{dim}, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box, lo and hi stored as float tuples."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not 1 <= len(lo) <= 3:
            raise DimensionMismatchError("box corners must share a dimension in {1, 2, 3}")
        if any(h <= l for l, h in zip(lo, hi)):
            raise DomainError(f"empty box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def widths(self):
        return np.array(self.hi) - np.array(self.lo)

    @property
    def volume(self):
        return float(np.prod(self.widths))

    @property
    def center(self):
        return 0.5 * (np.array(self.lo) + np.array(self.hi))

    def contains(self, y, tol=1e-12):
        y = _as_point(y, self.dim)
        return bool(np.all(y >= np.array(self.lo) - tol) and np.all(y <= np.array(self.hi) + tol))

    def shrink(self, margin):
        if 2.0 * margin >= float(np.min(self.widths)):
            raise DomainError(f"margin {margin} collapses box of widths {self.widths}")
        return Box(tuple(l + margin for l in self.lo), tuple(h - margin for h in self.hi))

    def split(self, axis, t):
        if not self.lo[axis] < t < self.hi[axis]:
            raise DomainError(f"split value {t} outside axis {axis} range")
        lo, hi = list(self.lo), list(self.hi)
        hi_a, lo_b = hi.copy(), lo.copy()
        hi_a[axis] = t
        lo_b[axis] = t
        return Box(tuple(lo), tuple(hi_a)), Box(tuple(lo_b), tuple(hi))

    def vertices(self):
        corners = itertools.product(*zip(self.lo, self.hi))
        return np.array(list(corners), dtype=float)


def unit_cube(dim):
    """Centered unit cube (-1/2, 1/2)^dim used by the cell problems."""
    return Box((-0.5,) * dim, (0.5,) * dim)


def corner_cube(dim):
    """Unit box (0, 1)^dim used by the worked staircase examples."""
    return Box((0.0,) * dim, (1.0,) * dim)


@lru_cache(maxsize=32)
def gauss_rule(order):
    """Gauss-Legendre nodes/weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def interval_quadrature(a, b, order=4):
    x, w = gauss_rule(order)
    return a + (b - a) * x, (b - a) * w


def tensor_gauss(box, order=4):
    """Tensor-product Gauss points/weights over a box."""
    pts_1d, wts_1d = [], []
    for l, h in zip(box.lo, box.hi):
        x, w = interval_quadrature(l, h, order)
        pts_1d.append(x)
        wts_1d.append(w)
    grids = np.meshgrid(*pts_1d, indexing="ij")
    points = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weights = wts_1d[0]
    for w in wts_1d[1:]:
        weights = np.multiply.outer(weights, w)
    return points, weights.reshape(-1)


def plane_range(box, mu):
    """Range of y . mu over the box (min, max)."""
    mu = _as_point(mu, box.dim)
    lo, hi = np.array(box.lo), np.array(box.hi)
    m_lo = float(np.sum(np.minimum(mu * lo, mu * hi)))
    m_hi = float(np.sum(np.maximum(mu * lo, mu * hi)))
    return m_lo, m_hi


def orthonormal_tangents(mu):
    """Deterministic orthonormal basis of the plane orthogonal to unit mu."""
    mu = np.asarray(mu, dtype=float)
    n = mu.size
    k = int(np.argmin(np.abs(mu)))
    t1 = np.eye(n)[k] - mu[k] * mu
    t1 /= np.linalg.norm(t1)
    if n == 2:
        return (t1,)
    t2 = np.cross(mu, t1)
    t2 /= np.linalg.norm(t2)
    return (t1, t2)


def clip_polygon_halfspace(verts, normal, offset):
    """Sutherland-Hodgman clip keeping the side normal . v <= offset."""
    if len(verts) == 0:
        return verts
    out = []
    n = len(verts)
    dist = verts @ normal - offset
    for i in range(n):
        j = (i + 1) % n
        di, dj = dist[i], dist[j]
        if di <= MEASURE_EPS:
            out.append(verts[i])
            if dj > MEASURE_EPS and di < -MEASURE_EPS:
                t = di / (di - dj)
                out.append(verts[i] + t * (verts[j] - verts[i]))
        elif dj < -MEASURE_EPS:
            t = di / (di - dj)
            out.append(verts[i] + t * (verts[j] - verts[i]))
    return np.array(out) if out else np.empty((0, verts.shape[1]))


def planar_polygon_area(verts):
    """Area of a planar polygon embedded in R^3 (vertices in order)."""
    if len(verts) < 3:
        return 0.0
    v0 = verts[0]
    cross_sum = np.zeros(3)
    for i in range(1, len(verts) - 1):
        cross_sum += np.cross(verts[i] - v0, verts[i + 1] - v0)
    return 0.5 * float(np.linalg.norm(cross_sum))


def plane_section(box, mu, c):
    """Intersection of the plane {y . mu = c} with a box.

    Returns (measure, vertices) where vertices is an (m, dim) array of the
    section's corners in reference coordinates, or (0.0, None) when the
    plane misses the box interior. mu must be a unit vector.
    """
    mu = _as_point(mu, box.dim)
    dim = box.dim
    m_lo, m_hi = plane_range(box, mu)
    if not m_lo + MEASURE_EPS < c < m_hi - MEASURE_EPS:
        return 0.0, None

    if dim == 1:
        return 1.0, np.array([[c / mu[0]]])

    if dim == 2:
        t = np.array([-mu[1], mu[0]])
        p0 = c * mu
        s_lo, s_hi = -np.inf, np.inf
        for k in range(2):
            if abs(t[k]) < 1e-15:
                continue
            a = (box.lo[k] - p0[k]) / t[k]
            b = (box.hi[k] - p0[k]) / t[k]
            s_lo = max(s_lo, min(a, b))
            s_hi = min(s_hi, max(a, b))
        if s_hi - s_lo <= MEASURE_EPS:
            return 0.0, None
        verts = np.array([p0 + s_lo * t, p0 + s_hi * t])
        return float(s_hi - s_lo), verts

    t1, t2 = orthonormal_tangents(mu)
    q0 = box.center + (c - float(box.center @ mu)) * mu
    rad = 2.0 * float(np.linalg.norm(box.widths))
    verts = np.array([
        q0 - rad * t1 - rad * t2,
        q0 + rad * t1 - rad * t2,
        q0 + rad * t1 + rad * t2,
        q0 - rad * t1 + rad * t2,
    ])
    eye = np.eye(3)
    for k in range(3):
        verts = clip_polygon_halfspace(verts, eye[k], box.hi[k])
        verts = clip_polygon_halfspace(verts, -eye[k], -box.lo[k])
        if len(verts) < 3:
            return 0.0, None
    area = planar_polygon_area(verts)
    if area <= MEASURE_EPS:
        return 0.0, None
    return area, verts


# ---------------------------------------------------------------------------
# 2-d polygon helpers, used for facet subdivision in face coordinates.

def polygon_area2(verts):
    if len(verts) < 3:
        return 0.0
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def split_polygon_by_line(verts, g, b, tol=1e-14):
    """Split a convex 2-d polygon by the line {g . w = b}.

    Returns (below, above) vertex arrays; either may be empty.
    """
    below = clip_polygon_halfspace(verts, np.asarray(g, dtype=float), b + tol)
    above = clip_polygon_halfspace(verts, -np.asarray(g, dtype=float), -(b - tol))
    return below, above


# Degree-2 triangle rule: midpoints of edges, equal weights. Exact for all
# polynomials of degree <= 2, in particular for affine jump integrands.
_TRI_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def polygon_quadrature2(verts):
    """Quadrature points/weights over a convex 2-d polygon (fan triangulation)."""
    if len(verts) < 3:
        return np.empty((0, 2)), np.empty(0)
    pts, wts = [], []
    v0 = verts[0]
    for i in range(1, len(verts) - 1):
        tri = np.array([v0, verts[i], verts[i + 1]])
        area = polygon_area2(tri)
        if area <= MEASURE_EPS:
            continue
        pts.append(_TRI_BARY @ tri)
        wts.append(np.full(3, area / 3.0))
    if not pts:
        return np.empty((0, 2)), np.empty(0)
    return np.vstack(pts), np.concatenate(wts)


def subdivide_interval(a, b, cuts, tol=1e-14):
    """Sorted subintervals of (a, b) split at interior cut points."""
    interior = sorted(c for c in cuts if a + tol < c < b - tol)
    knots = [a] + interior + [b]
    return [(knots[i], knots[i + 1]) for i in range(len(knots) - 1)]


def rotation_from_last_axis(nu):
    """Orthogonal matrix whose last column is the unit vector nu.

    Completes nu to an orthonormal basis deterministically; used to set up
    rotated-cube domains whose last reference axis is the jump direction.
    """
    nu = np.asarray(nu, dtype=float)
    n = nu.size
    if n == 1:
        return np.array([[nu[0]]])
    cols = list(orthonormal_tangents(nu)) + [nu]
    return np.column_stack(cols)
