"""Dimension-generic vector and simplex primitives.

A k-simplex in R^d (k <= d) is given by a (k+1, d) array of vertex
coordinates.  Everything here is double precision; degeneracy is decided
against a scale-relative threshold rather than exact predicates, since all
downstream constraints are metric, not combinatorial.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .errors import DegeneracyError

# A simplex is degenerate when measure < DEGENERACY_RTOL * longest_edge**k.
DEGENERACY_RTOL = 1e-12
# Barycentric slack when deciding whether a hull foot lies inside a facet.
CONTAINMENT_TOL = 1e-12


class SimplexGeometry:
    """A k-simplex with cached edge basis and k-dimensional measure."""

    def __init__(self, vertices):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        if not np.all(np.isfinite(v)):
            raise ValueError("simplex vertices must be finite")
        if v.shape[0] - 1 > v.shape[1]:
            raise ValueError(
                f"a {v.shape[0] - 1}-simplex cannot be embedded in R^{v.shape[1]}"
            )
        self.vertices = v

    @property
    def k(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def edges(self) -> np.ndarray:
        """Edge basis: rows are vertex[i] - vertex[0], shape (k, dim)."""
        return self.vertices[1:] - self.vertices[0]

    @cached_property
    def measure(self) -> float:
        """k-dimensional volume; a 0-simplex has measure 1 by convention.

        Computed as sqrt(det(E E^T)) / k!, valid for any embedding dimension.
        """
        if self.k == 0:
            return 1.0
        gram = self.edges @ self.edges.T
        det = float(np.linalg.det(gram))
        return math.sqrt(max(det, 0.0)) / math.factorial(self.k)

    @cached_property
    def longest_edge(self) -> float:
        v = self.vertices
        diffs = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diffs**2).sum(axis=2)).max())

    @property
    def is_degenerate(self) -> bool:
        if self.k == 0:
            return False
        scale = self.longest_edge
        return scale <= 0.0 or self.measure < DEGENERACY_RTOL * scale**self.k

    def facet(self, i: int) -> "SimplexGeometry":
        """The (k-1)-simplex opposite vertex i."""
        idx = [j for j in range(self.k + 1) if j != i]
        return SimplexGeometry(self.vertices[idx])

    def require_nondegenerate(self, what: str = "simplex") -> None:
        if self.is_degenerate:
            raise DegeneracyError(f"degenerate {what}: measure {self.measure:g}")


def _hull_foot(p: np.ndarray, facet: SimplexGeometry):
    """Orthogonal projection of p onto the facet's affine hull.

    Returns (foot, barycentric coordinates of the foot w.r.t. the facet).
    """
    facet.require_nondegenerate("projection target")
    p = np.asarray(p, dtype=float)
    v0 = facet.vertices[0]
    if facet.k == 0:
        return v0.copy(), np.array([1.0])
    E = facet.edges
    # lstsq (SVD) rather than normal equations: the foot stays accurate on
    # badly conditioned facets
    coeff = np.linalg.lstsq(E.T, p - v0, rcond=None)[0]
    foot = v0 + coeff @ E
    bary = np.empty(facet.k + 1)
    bary[0] = 1.0 - coeff.sum()
    bary[1:] = coeff
    return foot, bary


def altitude_distance(s: SimplexGeometry, i: int) -> float:
    """Distance from vertex i to the affine hull of the opposite facet."""
    s.require_nondegenerate()
    if not 0 <= i <= s.k:
        raise IndexError(f"vertex index {i} out of range for a {s.k}-simplex")
    foot, _ = _hull_foot(s.vertices[i], s.facet(i))
    return float(np.linalg.norm(s.vertices[i] - foot))


def project_to_hyperplane(p, facet: SimplexGeometry) -> np.ndarray:
    """Orthogonal projection of p onto the facet's affine hull.

    Raises DegeneracyError when p already lies on the hull (within the
    scale-relative tolerance), since callers rely on a nonzero offset.
    """
    p = np.asarray(p, dtype=float)
    foot, _ = _hull_foot(p, facet)
    offset = float(np.linalg.norm(p - foot))
    scale = max(facet.longest_edge, float(np.linalg.norm(p - facet.vertices[0])))
    if offset <= DEGENERACY_RTOL * max(scale, 1e-300):
        raise DegeneracyError("point lies on the facet's affine hull")
    return foot


def closest_point_in_facet(p, facet: SimplexGeometry) -> np.ndarray:
    """Nearest point of the closed facet (convex hull of its vertices) to p.

    Recursive face enumeration: if the hull foot has nonnegative barycentric
    coordinates it is the answer, otherwise the nearest point lies on a
    proper face.  Exact for the tiny dimensions used here.
    """
    p = np.asarray(p, dtype=float)
    if facet.k == 0:
        return facet.vertices[0].copy()
    facet.require_nondegenerate()
    foot, bary = _hull_foot(p, facet)
    if bary.min() >= -CONTAINMENT_TOL:
        return foot
    best = None
    best_d2 = math.inf
    for i in range(facet.k + 1):
        cand = closest_point_in_facet(p, facet.facet(i))
        d2 = float(((p - cand) ** 2).sum())
        if d2 < best_d2:
            best, best_d2 = cand, d2
    return best


def clearance_ratio(p, facet: SimplexGeometry) -> float:
    """Ratio of hull distance to closed-facet distance, in (0, 1].

    Equals exactly 1 when the orthogonal projection of p lands inside the
    closed facet; otherwise it is the sine of the angle at the nearest facet
    point, which governs how steeply the front may tilt across that facet.
    """
    p = np.asarray(p, dtype=float)
    facet.require_nondegenerate()
    foot, bary = _hull_foot(p, facet)
    dist_hull = float(np.linalg.norm(p - foot))
    scale = max(facet.longest_edge, float(np.linalg.norm(p - facet.vertices[0])))
    if dist_hull <= DEGENERACY_RTOL * max(scale, 1e-300):
        raise DegeneracyError("point lies on the facet's affine hull")
    if bary.min() >= -CONTAINMENT_TOL:
        return 1.0
    nearest = closest_point_in_facet(p, facet)
    return dist_hull / float(np.linalg.norm(p - nearest))


def time_gradient(coords, times) -> np.ndarray:
    """Gradient of the affine time function interpolating lifted vertices.

    coords is (k+1, d), times is (k+1,).  The result is the ambient d-vector
    lying in the simplex's affine hull; its Euclidean norm is the maximum
    slope of the lifted facet.
    """
    s = SimplexGeometry(coords)
    s.require_nondegenerate("spatial simplex of a lifted facet")
    t = np.asarray(times, dtype=float)
    if t.shape != (s.k + 1,):
        raise ValueError("times must supply one value per vertex")
    E = s.edges
    dt = t[1:] - t[0]
    # Minimal-norm solution of E g = dt lies in the row space of E; lstsq
    # (SVD) keeps full accuracy on badly conditioned simplices.
    return np.linalg.lstsq(E, dt, rcond=None)[0]
