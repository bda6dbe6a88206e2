"""Immutable simplicial ground mesh and its precomputed constants.

The ground mesh is the d-dimensional spatial input (d in {1,2,3}).  All
geometric quantities the advancing front needs per lift are computed once
here: vertex altitudes, the per-vertex minimum altitude, projection
clearance ratios, per-face gradient caps for d = 3, and flattened scalar
records that let the hot loop evaluate every bound without array math.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry
from .errors import MeshValidationError
from .geometry import SimplexGeometry

SpeedSchedule = Callable[[int, float], float]


class GroundMesh:
    """Validated d-dimensional simplicial complex with adjacency.

    Wave speed is stored per element (constant in time, default 1).  An
    optional speed schedule, a callable (element, time) -> speed that must
    be non-increasing in time, overrides the static speeds; it is always
    evaluated at the earliest time of the element under consideration so
    the fastest (most restrictive) speed is used.
    """

    def __init__(
        self,
        dim: int,
        vertices,
        elements,
        speeds=None,
        initial_times=None,
        speed_schedule: Optional[SpeedSchedule] = None,
        allow_isolated: bool = False,
    ):
        if dim not in (1, 2, 3):
            raise MeshValidationError(f"unsupported dimension {dim} (need 1, 2 or 3)")
        self.dim = dim
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != dim:
            raise MeshValidationError(
                f"vertices must have shape (n, {dim}), got {self.vertices.shape}"
            )
        if not np.all(np.isfinite(self.vertices)):
            raise MeshValidationError("vertex coordinates must be finite")
        self.elements = np.asarray(elements, dtype=int)
        if self.elements.ndim != 2 or self.elements.shape[1] != dim + 1:
            raise MeshValidationError(
                f"elements must have shape (m, {dim + 1}), got {self.elements.shape}"
            )
        n = len(self.vertices)
        if self.elements.size and (
            self.elements.min() < 0 or self.elements.max() >= n
        ):
            bad = np.argwhere((self.elements < 0) | (self.elements >= n))[0]
            raise MeshValidationError(
                f"element {bad[0]} references vertex index out of range"
            )
        for e, elem in enumerate(self.elements):
            if len(set(elem.tolist())) != dim + 1:
                raise MeshValidationError(f"element {e} repeats a vertex")
            if SimplexGeometry(self.vertices[elem]).is_degenerate:
                raise MeshValidationError(f"element {e} is degenerate (zero measure)")

        if speeds is None:
            self.speeds = np.ones(len(self.elements))
        else:
            self.speeds = np.asarray(speeds, dtype=float)
            if self.speeds.shape != (len(self.elements),):
                raise MeshValidationError("speeds must supply one value per element")
            if not np.all(self.speeds > 0):
                bad = int(np.argwhere(self.speeds <= 0)[0][0])
                raise MeshValidationError(f"element {bad} has non-positive wave speed")
        self.speed_schedule = speed_schedule

        self.initial_times = None
        if initial_times is not None:
            self.initial_times = np.asarray(initial_times, dtype=float)
            if self.initial_times.shape != (n,):
                raise MeshValidationError("initial_times must supply one value per vertex")

        # stars[v] holds (element id, local index of v) pairs
        self.stars: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for e, elem in enumerate(self.elements):
            for li, v in enumerate(elem.tolist()):
                self.stars[v].append((e, li))
        isolated = [v for v in range(n) if not self.stars[v]]
        if isolated:
            if allow_isolated:
                warnings.warn(f"mesh has isolated vertices {isolated}", stacklevel=2)
            else:
                raise MeshValidationError(
                    f"isolated vertex {isolated[0]} can never be advanced"
                )

        neighbor_sets: list[set[int]] = [set() for _ in range(n)]
        for elem in self.elements:
            vs = elem.tolist()
            for a in vs:
                for b in vs:
                    if a != b:
                        neighbor_sets[a].add(b)
        self.neighbors = [sorted(s) for s in neighbor_sets]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def star(self, v: int) -> list[int]:
        """Element ids of all elements containing vertex v."""
        if not 0 <= v < self.n_vertices:
            raise IndexError(f"vertex index {v} out of range")
        return [e for e, _ in self.stars[v]]

    def speed_at(self, e: int, time: float) -> float:
        if self.speed_schedule is not None:
            c = float(self.speed_schedule(e, time))
            if c <= 0:
                raise MeshValidationError(
                    f"speed schedule returned non-positive speed for element {e}"
                )
            return c
        return float(self.speeds[e])

    def slope_cap(self, e: int, time: float) -> float:
        """Admissible time-gradient norm on element e near the given time."""
        return 1.0 / self.speed_at(e, time)


def load(raw: dict) -> GroundMesh:
    """Build a GroundMesh from the parsed json-mesh structure."""
    for key in ("dim", "vertices", "elements"):
        if key not in raw:
            raise MeshValidationError(f"mesh description missing '{key}'")
    return GroundMesh(
        int(raw["dim"]),
        raw["vertices"],
        raw["elements"],
        speeds=raw.get("speeds"),
        initial_times=raw.get("initial_times"),
    )


@dataclass
class MeshConstants:
    """Geometry constants precomputed from the ground mesh alone.

    Flattened per-(element, vertex) records drive the lift-bound hot loop:

    * cone_recs[e][i]: scalar data for the full-element cone ceiling when
      lifting local vertex i (layout depends on dim, see pitcher).
    * progress_recs[e][i] (d = 2): (j, k, w) with w the altitude of i.
    * face_recs[e][i] (d = 3): per triangular face of e containing i,
      (j, k, beta, inv_len, w_face, kappa).
    * slope_recs[e] / face_state_recs[e]: inverse-Gram data used to
      re-validate the front state after each lift.
    """

    epsilon: float
    dim: int
    altitudes: np.ndarray            # (m, d+1)
    omega: np.ndarray                # (n,) min altitude over incident elements
    omega_speed: np.ndarray          # (n,) min altitude/speed (progress floor, d<=2)
    progress_floor: np.ndarray       # (n,) floor incl. capped faces for d=3
    sigma: Optional[np.ndarray]      # (m, d+1) clearance ratios, d >= 2
    kappa: Optional[np.ndarray]      # (m, d+1) cap of face opposite vertex l, d=3
    element_measure: np.ndarray      # (m,)
    element_perimeter: np.ndarray    # (m,) sum of facet measures
    cone_recs: list = field(repr=False, default_factory=list)
    progress_recs: Optional[list] = field(repr=False, default=None)
    face_recs: Optional[list] = field(repr=False, default=None)
    slope_recs: list = field(repr=False, default_factory=list)
    face_state_recs: Optional[list] = field(repr=False, default=None)

    @property
    def inverse_omega_sum(self) -> float:
        return float(np.sum(1.0 / self.omega))


def _triangle_records(coords, ids):
    """Per-vertex (j, k, beta, inv_len, w) records for one triangle.

    beta places the foot of the altitude along the opposite edge, so the
    cone ceiling is t_j + beta*(t_k - t_j) + w*sqrt(cap^2 - mu^2) with
    mu = (t_k - t_j)*inv_len.
    """
    recs = []
    for i in range(3):
        j, k = [x for x in range(3) if x != i]
        edge = coords[k] - coords[j]
        L2 = float(edge @ edge)
        beta = float((coords[i] - coords[j]) @ edge) / L2
        foot = coords[j] + beta * edge
        w = float(np.linalg.norm(coords[i] - foot))
        recs.append((int(ids[j]), int(ids[k]), beta, 1.0 / math.sqrt(L2), w))
    return recs


def _sym2_inverse(g11, g12, g22):
    det = g11 * g22 - g12 * g12
    return (g22 / det, -g12 / det, g11 / det)


def precompute(mesh: GroundMesh, epsilon: float = 0.1) -> MeshConstants:
    """Compute all front-independent constants of the ground mesh.

    epsilon enters only the face gradient caps (d = 3): the cap of the
    triangular face opposite vertex l inside element e is
    (1 - epsilon) * sigma[e][l], instantiating the strictest-constraint
    rule one recursion level deep (deeper levels would only matter for
    d >= 4 meshes, which are rejected at load).
    """
    if not 0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must be in (0, 1/2], got {epsilon}")
    d = mesh.dim
    m, n = mesh.n_elements, mesh.n_vertices
    altitudes = np.zeros((m, d + 1))
    sigma = np.zeros((m, d + 1)) if d >= 2 else None
    kappa = np.zeros((m, d + 1)) if d == 3 else None
    measures = np.zeros(m)
    perimeters = np.zeros(m)
    cone_recs: list = []
    progress_recs: list | None = [] if d == 2 else None
    face_recs: list | None = [] if d == 3 else None
    slope_recs: list = []
    face_state_recs: list | None = [] if d == 3 else None

    for e in range(m):
        ids = mesh.elements[e]
        coords = mesh.vertices[ids]
        simplex = SimplexGeometry(coords)
        measures[e] = simplex.measure
        facet_measures = [simplex.facet(i).measure for i in range(d + 1)]
        perimeters[e] = sum(facet_measures)
        for i in range(d + 1):
            # altitude = k * |simplex| / |opposite facet|
            altitudes[e, i] = d * simplex.measure / facet_measures[i]
            if d >= 2:
                sigma[e, i] = geometry.clearance_ratio(coords[i], simplex.facet(i))
        if d == 3:
            kappa[e] = (1.0 - epsilon) * sigma[e]

        if d == 1:
            L = float(np.linalg.norm(coords[1] - coords[0]))
            cone_recs.append(
                [(int(ids[1]), L), (int(ids[0]), L)]
            )
            slope_recs.append((int(ids[0]), int(ids[1]), 1.0 / L))
        elif d == 2:
            tri = _triangle_records(coords, ids)
            cone_recs.append(tri)
            progress_recs.append([(j, k, w) for (j, k, _, _, w) in tri])
            E = simplex.edges
            g = E @ E.T
            h11, h12, h22 = _sym2_inverse(g[0, 0], g[0, 1], g[1, 1])
            slope_recs.append(
                (int(ids[0]), int(ids[1]), int(ids[2]), h11, h12, h22)
            )
        else:
            elem_cone = []
            elem_faces = []
            for i in range(4):
                others = [x for x in range(4) if x != i]
                # full-element cone record: project vertex i onto the
                # opposite facet plane, cache the Gram inverse of the facet
                # edge basis and the foot's edge-coordinates.
                fverts = coords[others]
                u1 = fverts[1] - fverts[0]
                u2 = fverts[2] - fverts[0]
                g11, g12, g22 = (
                    float(u1 @ u1),
                    float(u1 @ u2),
                    float(u2 @ u2),
                )
                h11, h12, h22 = _sym2_inverse(g11, g12, g22)
                rel = coords[i] - fverts[0]
                c1, c2 = float(u1 @ rel), float(u2 @ rel)
                a1 = h11 * c1 + h12 * c2
                a2 = h12 * c1 + h22 * c2
                foot = fverts[0] + a1 * u1 + a2 * u2
                w = float(np.linalg.norm(coords[i] - foot))
                b1 = float(u1 @ (foot - fverts[0]))
                b2 = float(u2 @ (foot - fverts[0]))
                elem_cone.append(
                    (
                        int(ids[others[0]]),
                        int(ids[others[1]]),
                        int(ids[others[2]]),
                        h11,
                        h12,
                        h22,
                        b1,
                        b2,
                        w,
                    )
                )
                # triangular faces of e containing vertex i: one per
                # excluded vertex l != i; the face inherits cap kappa[e][l]
                frecs = []
                for l in others:
                    face_local = [x for x in range(4) if x != l]
                    fc = coords[face_local]
                    fids = ids[face_local]
                    tri = _triangle_records(fc, fids)
                    pos = face_local.index(i)
                    j, k, beta, inv_len, wf = tri[pos]
                    frecs.append((j, k, beta, inv_len, wf, float(kappa[e, l])))
                elem_faces.append(frecs)
            cone_recs.append(elem_cone)
            face_recs.append(elem_faces)

            E = simplex.edges
            g = E @ E.T
            slope_recs.append(
                (tuple(int(x) for x in ids), np.linalg.inv(g))
            )
            fstates = []
            for l in range(4):
                face_local = [x for x in range(4) if x != l]
                fc = coords[face_local]
                fids = ids[face_local]
                u1, u2 = fc[1] - fc[0], fc[2] - fc[0]
                h11, h12, h22 = _sym2_inverse(
                    float(u1 @ u1), float(u1 @ u2), float(u2 @ u2)
                )
                tri = _triangle_records(fc, fids)
                ws = (tri[0][4], tri[1][4], tri[2][4])
                fstates.append(
                    (
                        int(fids[0]),
                        int(fids[1]),
                        int(fids[2]),
                        h11,
                        h12,
                        h22,
                        float(kappa[e, l]),
                        ws,
                    )
                )
            face_state_recs.append(fstates)

    omega = np.full(n, np.inf)
    omega_speed = np.full(n, np.inf)
    progress_floor = np.full(n, np.inf)
    for v in range(n):
        for e, li in mesh.stars[v]:
            omega[v] = min(omega[v], altitudes[e, li])
            scaled = altitudes[e, li] / mesh.speeds[e]
            omega_speed[v] = min(omega_speed[v], scaled)
            progress_floor[v] = min(progress_floor[v], scaled)
            if d == 3:
                for (_, _, _, _, wf, kap) in face_recs[e][li]:
                    progress_floor[v] = min(
                        progress_floor[v], kap * wf / mesh.speeds[e]
                    )

    return MeshConstants(
        epsilon=epsilon,
        dim=d,
        altitudes=altitudes,
        omega=omega,
        omega_speed=omega_speed,
        progress_floor=progress_floor,
        sigma=sigma,
        kappa=kappa,
        element_measure=measures,
        element_perimeter=perimeters,
        cone_recs=cone_recs,
        progress_recs=progress_recs,
        face_recs=face_recs,
        slope_recs=slope_recs,
        face_state_recs=face_state_recs,
    )
