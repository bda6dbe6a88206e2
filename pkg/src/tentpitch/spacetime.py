"""Output space-time mesh: vertices, elements, patches, causal order.

Patches are stored in creation order, which is by construction a linear
extension of the inter-patch dependency order: every inflow facet of a
patch was produced either by the initial front or by a strictly earlier
patch.  The verifier re-checks this rather than trusting it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import PatchConsistencyError
from .ground_mesh import GroundMesh


class Facet(NamedTuple):
    """One front facet of a ground element at some stage of the run.

    vertices are space-time vertex ids in the ground element's local order;
    producer is the patch id that created the facet, or -1 for the initial
    front.
    """

    ground_element: int
    vertices: tuple[int, ...]
    producer: int


@dataclass
class Patch:
    """One tent: every element shares the edge from base to apex vertex."""

    id: int
    vertex: int                      # lifted ground vertex
    base: int                        # space-time id of the old position
    apex: int                        # space-time id of the new position
    elements: list[int]
    inflow: list[Facet]
    outflow: list[Facet]


class SpaceTimeMesh:
    """Accumulated (d+1)-dimensional simplicial mesh grouped into patches."""

    def __init__(self, ground: GroundMesh):
        self.ground = ground
        self.vertices: list[tuple[float, ...]] = []   # (*space, time)
        self.vertex_ground: list[int] = []
        self.elements: list[tuple[int, ...]] = []
        self.element_patch: list[int] = []
        self.patches: list[Patch] = []
        self.current_vertex: list[int] = []
        self.frontier: list[Facet] = []
        self.initial_facets: list[Facet] = []
        self.build_seconds: float = 0.0

    @classmethod
    def initial(cls, ground: GroundMesh, times) -> "SpaceTimeMesh":
        mesh = cls(ground)
        for v in range(ground.n_vertices):
            coords = ground.vertices[v]
            mesh.vertices.append((*coords.tolist(), float(times[v])))
            mesh.vertex_ground.append(v)
        mesh.current_vertex = list(range(ground.n_vertices))
        for e in range(ground.n_elements):
            facet = Facet(e, tuple(int(x) for x in ground.elements[e]), -1)
            mesh.frontier.append(facet)
        mesh.initial_facets = list(mesh.frontier)
        return mesh

    @property
    def dim(self) -> int:
        return self.ground.dim + 1

    def n_patches(self) -> int:
        return len(self.patches)

    def vertex_time(self, i: int) -> float:
        return self.vertices[i][-1]

    def add_vertex(self, ground_vertex: int, time: float) -> int:
        coords = self.ground.vertices[ground_vertex]
        self.vertices.append((*coords.tolist(), float(time)))
        self.vertex_ground.append(ground_vertex)
        return len(self.vertices) - 1

    def add_element(self, vertex_ids: tuple[int, ...], patch_id: int) -> int:
        self.elements.append(vertex_ids)
        self.element_patch.append(patch_id)
        return len(self.elements) - 1

    def append_patch(self, patch: Patch) -> int:
        """Commit a patch: validate its inflow against the frontier, then
        replace the consumed frontier facets with the patch's outflow."""
        if patch.id != len(self.patches):
            raise PatchConsistencyError(
                f"patch id {patch.id} out of order (expected {len(self.patches)})"
            )
        for f in patch.inflow:
            cur = self.frontier[f.ground_element]
            if cur.vertices != f.vertices or cur.producer != f.producer:
                raise PatchConsistencyError(
                    f"patch {patch.id} inflow facet on ground element "
                    f"{f.ground_element} is not on the current frontier"
                )
        for f in patch.outflow:
            self.frontier[f.ground_element] = f
        self.current_vertex[patch.vertex] = patch.apex
        self.patches.append(patch)
        return patch.id

    def times_array(self) -> np.ndarray:
        return np.array([v[-1] for v in self.vertices])


@dataclass
class SweepResult:
    ok: bool
    patches_visited: int
    failed_patch: Optional[int] = None
    message: str = ""


def _sweep(initial_facets, patches, visitor=None) -> SweepResult:
    tokens: dict[tuple[int, tuple[int, ...]], object] = {}
    for f in initial_facets:
        tokens[(f.ground_element, f.vertices)] = "initial"
    for count, patch in enumerate(patches):
        inflow_tokens = []
        for f in patch.inflow:
            key = (f.ground_element, f.vertices)
            if key not in tokens:
                return SweepResult(
                    False,
                    count,
                    failed_patch=patch.id,
                    message=(
                        f"patch {patch.id} consumes facet {key} "
                        "before it was produced"
                    ),
                )
            inflow_tokens.append(tokens.pop(key))
        if visitor is not None:
            out_token = visitor(patch, inflow_tokens)
        else:
            out_token = patch.id
        for f in patch.outflow:
            tokens[(f.ground_element, f.vertices)] = out_token
    return SweepResult(True, len(patches))


def causal_sweep(mesh: SpaceTimeMesh, visitor: Optional[Callable] = None) -> SweepResult:
    """Visit patches in creation order, asserting every inflow facet was
    already produced.  The visitor mocks a patch-at-a-time solver: it
    receives (patch, inflow tokens) and returns an opaque outflow token.
    """
    return _sweep(mesh.initial_facets, mesh.patches, visitor)


@dataclass
class MeshStats:
    patches: int
    elements: int
    vertices: int
    duration_min: float
    duration_max: float
    duration_mean: float
    duration_ratio: float
    patch_size_histogram: dict[int, int]
    build_seconds: float
    elements_per_second: float

    def to_dict(self) -> dict:
        return {
            "patches": self.patches,
            "elements": self.elements,
            "vertices": self.vertices,
            "duration_min": self.duration_min,
            "duration_max": self.duration_max,
            "duration_mean": self.duration_mean,
            "duration_ratio": self.duration_ratio,
            "patch_size_histogram": {str(k): v for k, v in
                                     sorted(self.patch_size_histogram.items())},
            "seconds": self.build_seconds,
            "elements_per_second": self.elements_per_second,
        }


def stats(mesh: SpaceTimeMesh) -> MeshStats:
    """Summary counts and element-duration spread of a finished mesh."""
    durations = np.zeros(len(mesh.elements))
    times = mesh.times_array()
    if len(mesh.elements):
        elem = np.array(mesh.elements)
        et = times[elem]
        durations = et.max(axis=1) - et.min(axis=1)
    hist: dict[int, int] = {}
    for p in mesh.patches:
        size = len(p.elements)
        hist[size] = hist.get(size, 0) + 1
    n_el = len(mesh.elements)
    dmin = float(durations.min()) if n_el else 0.0
    dmax = float(durations.max()) if n_el else 0.0
    return MeshStats(
        patches=len(mesh.patches),
        elements=n_el,
        vertices=len(mesh.vertices),
        duration_min=dmin,
        duration_max=dmax,
        duration_mean=float(durations.mean()) if n_el else 0.0,
        duration_ratio=(dmax / dmin) if n_el and dmin > 0 else 0.0,
        patch_size_histogram=hist,
        build_seconds=mesh.build_seconds,
        elements_per_second=(n_el / mesh.build_seconds)
        if mesh.build_seconds > 0
        else 0.0,
    )
