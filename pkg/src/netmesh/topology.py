"""Entity storage, grid container and staged factory.

Grids hold 1- or 2-simplices embedded in R^w (w >= dim).  Any number of
elements may share a facet, so T- and Y-junctions need no special casing.
Entities live in per-level arenas and are addressed by (level, slot)
pairs; slots are stable under append and are remapped only when a
coarsening or growth transaction compacts the arenas.

A vertex that appears on several levels is stored once per level; the
copies are linked through ``father``/``finer`` and share one persistent
id, so they act as a single logical vertex across the hierarchy.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    FactoryError,
    StaleEntityError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimplexKind:
    """Element kind token; only simplices of the grid dimension are valid."""

    dim: int


LINE = SimplexKind(1)
TRIANGLE = SimplexKind(2)


@dataclass(frozen=True)
class GridConfig:
    """Intrinsic grid dimension and embedding dimension."""

    dim: int
    world_dim: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DimensionMismatchError(f"grid dimension must be 1 or 2, got {self.dim}")
        if self.world_dim < self.dim:
            raise DimensionMismatchError(
                f"world dimension {self.world_dim} smaller than grid dimension {self.dim}"
            )


# Local subentity numbering of a triangle: corners in insertion order,
# edge 0 = (0,1), edge 1 = (0,2), edge 2 = (1,2).
TRIANGLE_EDGES = ((0, 1), (0, 2), (1, 2))

# Children of a refined simplex: corner tokens ('c', i) are copies of the
# father's corner i, ('m', k) the midpoint of the father's local edge k.
CHILD_VERTEX_SOURCES = {
    1: (
        (("c", 0), ("m", 0)),
        (("m", 0), ("c", 1)),
    ),
    2: (
        (("c", 0), ("m", 0), ("m", 1)),
        (("m", 0), ("c", 1), ("m", 2)),
        (("m", 1), ("m", 2), ("c", 2)),
        (("m", 0), ("m", 2), ("m", 1)),
    ),
}

# Corner coordinates of each child inside the father's reference simplex.
CHILD_CORNERS_IN_FATHER = {
    1: (
        np.array([[0.0], [0.5]]),
        np.array([[0.5], [1.0]]),
    ),
    2: (
        np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]]),
        np.array([[0.5, 0.0], [1.0, 0.0], [0.5, 0.5]]),
        np.array([[0.0, 0.5], [0.5, 0.5], [0.0, 1.0]]),
        np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]),
    ),
}

# Midpoint of local edge k in the element's own reference coordinates.
EDGE_MIDPOINT_LOCAL = {
    1: (np.array([0.5]),),
    2: (np.array([0.5, 0.0]), np.array([0.0, 0.5]), np.array([0.5, 0.5])),
}


@dataclass
class VertexRec:
    coords: np.ndarray
    id: int
    father: int | None = None   # slot one level down, same chain
    finer: int | None = None    # slot one level up, same chain
    incident: list = field(default_factory=list)  # element slots, same level


@dataclass
class EdgeRec:
    v: tuple  # two vertex slots at the same level, insertion order
    id: int
    father: int | None = None
    children: tuple = ()        # () or 2 slots: (v[0]-side half, v[1]-side half)
    incident: list = field(default_factory=list)  # triangle slots, same level


@dataclass
class ElemRec:
    v: tuple                    # dim+1 vertex slots at the same level
    id: int
    edges: tuple = ()           # dim==2: 3 edge slots matching TRIANGLE_EDGES
    father: int | None = None
    children: tuple = ()
    root: tuple = (0, 0)        # (level, slot) of the refinement-tree root
    mark: int = 0
    is_new: bool = False
    might_vanish: bool = False
    parametrization: object = None  # callable local -> R^w, tree roots only
    corners_in_father: np.ndarray | None = None
    marker: int | None = None   # insertion marker (e.g. gmsh physical tag)


class Grid:
    """Hierarchical simplicial network grid.

    Purely sequential: readers (views, iterators) must be quiesced while an
    adapt or grow transaction runs.  Constructed through :class:`GridFactory`.
    """

    def __init__(self, config):
        self.config = config
        self._verts = [[]]
        self._edges = [[]]
        self._elems = [[]]
        self._next_id = 0
        self._revision = 0        # bumped by every adapt/grow commit
        self._srev = 0            # bumped only when slots are remapped
        self._adapt_phase = "idle"   # idle -> preadapted -> adapted -> idle
        self._grow_phase = "idle"    # idle -> grown -> idle
        self._queued_vertices = []
        self._queued_elements = []
        self._queued_removals = []
        self._growth_report = None
        self._queue_base = None
        self._queue_leaf_vertices = None
        self._edge_lookup = [None]

    # -- basic properties -------------------------------------------------

    @property
    def dim(self):
        return self.config.dim

    @property
    def world_dim(self):
        return self.config.world_dim

    @property
    def max_level(self):
        return len(self._elems) - 1

    def _new_id(self):
        i = self._next_id
        self._next_id += 1
        return i

    def _ensure_level(self, level):
        while len(self._elems) <= level:
            self._elems.append([])
            self._verts.append([])
            self._edges.append([])
            self._edge_lookup.append(None)

    # -- entity access ----------------------------------------------------

    def element(self, level, slot):
        return Element(self, level, slot)

    def vertex(self, level, slot):
        return Vertex(self, level, slot)

    def edge(self, level, slot):
        if self.dim != 2:
            raise DimensionMismatchError("edge entities exist only for dim == 2 grids")
        return Edge(self, level, slot)

    def facet(self, element, i):
        """Codim-1 subentity i of an element (vertex for dim 1, edge for dim 2)."""
        return element.sub_entity(1, i)

    # -- views and ids ----------------------------------------------------

    def leaf_view(self):
        from .views import GridView

        return GridView(self, None)

    def level_view(self, level):
        from .views import GridView

        if not 0 <= level <= self.max_level:
            raise StaleEntityError(f"no level {level} in grid with max level {self.max_level}")
        return GridView(self, level)

    @property
    def id_set(self):
        from .views import IdSet

        return IdSet(self)

    # -- adapt lifecycle (implementation in adaptivity module) ------------

    def mark(self, ref_count, element):
        from . import adaptivity

        return adaptivity.mark(self, ref_count, element)

    def get_mark(self, element):
        from . import adaptivity

        return adaptivity.get_mark(self, element)

    def pre_adapt(self):
        from . import adaptivity

        return adaptivity.pre_adapt(self)

    def adapt(self):
        from . import adaptivity

        return adaptivity.adapt(self)

    def post_adapt(self):
        from . import adaptivity

        adaptivity.post_adapt(self)

    # -- growth lifecycle (implementation in growth module) ---------------

    def queue_vertex(self, coords):
        from . import growth

        return growth.queue_vertex(self, coords)

    def queue_element(self, kind, vertex_indices, parametrization=None):
        from . import growth

        return growth.queue_element(self, kind, vertex_indices, parametrization)

    def remove_element(self, element):
        from . import growth

        growth.remove_element(self, element)

    def grow(self):
        from . import growth

        return growth.grow(self)

    def post_grow(self):
        from . import growth

        growth.post_grow(self)

    @property
    def growth_report(self):
        return self._growth_report

    # -- internal helpers shared by adaptivity/growth ---------------------

    def _check_alive(self, srev):
        if srev != self._srev:
            raise StaleEntityError("entity handle outlived a compacting grid transaction")

    def _edge_index(self, level):
        """Lazy map unordered vertex-slot pair -> edge slot for one level."""
        lookup = self._edge_lookup[level]
        if lookup is None:
            lookup = {}
            for slot, rec in enumerate(self._edges[level]):
                lookup[frozenset(rec.v)] = slot
            self._edge_lookup[level] = lookup
        return lookup

    def _get_or_make_edge(self, level, va, vb):
        lookup = self._edge_index(level)
        key = frozenset((va, vb))
        slot = lookup.get(key)
        if slot is None:
            slot = len(self._edges[level])
            self._edges[level].append(EdgeRec(v=(va, vb), id=self._new_id()))
            lookup[key] = slot
        return slot

    def _vertex_copy(self, level, slot):
        """Slot of the chain copy at ``level + 1``, creating it if absent."""
        rec = self._verts[level][slot]
        if rec.finer is not None:
            return rec.finer
        self._ensure_level(level + 1)
        fine = len(self._verts[level + 1])
        self._verts[level + 1].append(
            VertexRec(coords=rec.coords.copy(), id=rec.id, father=slot)
        )
        rec.finer = fine
        return fine

    def _element_is_leaf(self, level, slot):
        return not self._elems[level][slot].children


# -- entity wrappers ------------------------------------------------------


class _Entity:
    __slots__ = ("grid", "level", "slot", "_srev")

    codim = None

    def __init__(self, grid, level, slot):
        self.grid = grid
        self.level = level
        self.slot = slot
        self._srev = grid._srev

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.grid is other.grid
            and self.level == other.level
            and self.slot == other.slot
        )

    def __hash__(self):
        return hash((type(self).__name__, id(self.grid), self.level, self.slot))

    def __repr__(self):
        return f"{type(self).__name__}(level={self.level}, slot={self.slot})"


class Element(_Entity):
    """Codim-0 entity: a line segment (dim 1) or triangle (dim 2)."""

    codim = 0

    def _rec(self):
        self.grid._check_alive(self._srev)
        try:
            return self.grid._elems[self.level][self.slot]
        except IndexError:
            raise StaleEntityError(f"no element at level {self.level} slot {self.slot}")

    @property
    def id(self):
        return self._rec().id

    @property
    def kind(self):
        return LINE if self.grid.dim == 1 else TRIANGLE

    @property
    def is_leaf(self):
        return not self._rec().children

    @property
    def is_new(self):
        return self._rec().is_new

    @property
    def might_vanish(self):
        return self._rec().might_vanish

    @property
    def marker(self):
        """Insertion marker of the refinement-tree root (None if untagged)."""
        rl, rs = self._rec().root
        return self.grid._elems[rl][rs].marker

    def father(self):
        rec = self._rec()
        if rec.father is None:
            return None
        return Element(self.grid, self.level - 1, rec.father)

    def children(self):
        rec = self._rec()
        return [Element(self.grid, self.level + 1, s) for s in rec.children]

    def vertices(self):
        rec = self._rec()
        return [Vertex(self.grid, self.level, s) for s in rec.v]

    def sub_entity(self, codim, i):
        """Subentity ``i`` of the given codimension (0 returns the element)."""
        rec = self._rec()
        d = self.grid.dim
        if codim == 0:
            if i != 0:
                raise IndexError(f"subentity index {i} out of range")
            return self
        if codim == d:  # vertices
            if not 0 <= i < d + 1:
                raise IndexError(f"subentity index {i} out of range")
            return Vertex(self.grid, self.level, rec.v[i])
        if codim == 1 and d == 2:
            if not 0 <= i < 3:
                raise IndexError(f"subentity index {i} out of range")
            return Edge(self.grid, self.level, rec.edges[i])
        raise DimensionMismatchError(f"no codim {codim} subentity on a dim-{d} grid element")

    @property
    def geometry(self):
        from .geometry import AffineGeometry

        rec = self._rec()
        verts = self.grid._verts[self.level]
        return AffineGeometry(np.stack([verts[s].coords for s in rec.v]))

    def root_element(self):
        rl, rs = self._rec().root
        return Element(self.grid, rl, rs)


class Edge(_Entity):
    """Codim-1 entity of a dim-2 grid."""

    codim = 1

    def _rec(self):
        self.grid._check_alive(self._srev)
        try:
            return self.grid._edges[self.level][self.slot]
        except IndexError:
            raise StaleEntityError(f"no edge at level {self.level} slot {self.slot}")

    @property
    def id(self):
        return self._rec().id

    @property
    def is_leaf(self):
        from .views import edge_in_leaf_view

        return edge_in_leaf_view(self.grid, self.level, self.slot)

    def father(self):
        rec = self._rec()
        if rec.father is None:
            return None
        return Edge(self.grid, self.level - 1, rec.father)

    def children(self):
        rec = self._rec()
        return [Edge(self.grid, self.level + 1, s) for s in rec.children]

    def vertices(self):
        rec = self._rec()
        return [Vertex(self.grid, self.level, s) for s in rec.v]

    def sub_entity(self, codim, i):
        if codim != 2:
            raise DimensionMismatchError("edge subentities: only codim 2 (vertices)")
        if not 0 <= i < 2:
            raise IndexError(f"subentity index {i} out of range")
        return Vertex(self.grid, self.level, self._rec().v[i])

    @property
    def geometry(self):
        from .geometry import AffineGeometry

        rec = self._rec()
        verts = self.grid._verts[self.level]
        return AffineGeometry(np.stack([verts[s].coords for s in rec.v]))

    def incident_elements(self):
        rec = self._rec()
        return [Element(self.grid, self.level, s) for s in rec.incident]


class Vertex(_Entity):
    """Codim-d entity; one record per level the logical vertex lives on."""

    @property
    def codim(self):
        return self.grid.dim

    def _rec(self):
        self.grid._check_alive(self._srev)
        try:
            return self.grid._verts[self.level][self.slot]
        except IndexError:
            raise StaleEntityError(f"no vertex at level {self.level} slot {self.slot}")

    @property
    def id(self):
        return self._rec().id

    @property
    def coords(self):
        return self._rec().coords

    @property
    def is_leaf(self):
        from .views import vertex_in_leaf_view

        return vertex_in_leaf_view(self.grid, self.level, self.slot)

    def father(self):
        rec = self._rec()
        if rec.father is None:
            return None
        return Vertex(self.grid, self.level - 1, rec.father)

    def finer_copy(self):
        rec = self._rec()
        if rec.finer is None:
            return None
        return Vertex(self.grid, self.level + 1, rec.finer)

    def leaf_copy(self):
        """Finest copy of this logical vertex."""
        level, slot = self.level, self.slot
        rec = self.grid._verts[level][slot]
        while rec.finer is not None:
            level, slot = level + 1, rec.finer
            rec = self.grid._verts[level][slot]
        return Vertex(self.grid, level, slot)

    @property
    def geometry(self):
        from .geometry import AffineGeometry

        return AffineGeometry(self._rec().coords.reshape(1, -1))

    def incident_elements(self):
        rec = self._rec()
        return [Element(self.grid, self.level, s) for s in rec.incident]


# -- staged factory -------------------------------------------------------


class GridFactory:
    """Collects macro vertices and elements, then builds a level-0 grid."""

    def __init__(self, config):
        if not isinstance(config, GridConfig):
            config = GridConfig(*config)
        self.config = config
        self._coords = []
        self._elements = []  # (vertex tuple, parametrization, marker)

    def insert_vertex(self, coords):
        """Stage a vertex; returns its insertion index."""
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.config.world_dim,):
            raise DimensionMismatchError(
                f"expected {self.config.world_dim} coordinates, got shape {coords.shape}"
            )
        self._coords.append(coords.copy())
        return len(self._coords) - 1

    def insert_element(self, kind, vertex_indices, parametrization=None, marker=None):
        """Stage an element over previously inserted vertices.

        Degenerate (zero-measure) elements are accepted; geometry operations
        on them raise :class:`SingularGeometryError` later.
        """
        if not isinstance(kind, SimplexKind) or kind.dim != self.config.dim:
            raise FactoryError(f"element kind {kind!r} does not match grid dimension {self.config.dim}")
        idx = tuple(int(i) for i in vertex_indices)
        if len(idx) != self.config.dim + 1:
            raise FactoryError(
                f"need {self.config.dim + 1} vertex indices, got {len(idx)}"
            )
        if len(set(idx)) != len(idx):
            raise FactoryError(f"repeated vertex index in {idx}")
        for i in idx:
            if not 0 <= i < len(self._coords):
                raise FactoryError(f"unknown vertex index {i}")
        if parametrization is not None and not callable(parametrization):
            raise FactoryError("parametrization must be callable")
        self._elements.append((idx, parametrization, marker))
        return len(self._elements) - 1

    def create_grid(self):
        """Build the grid; the factory may be reused afterwards."""
        if not self._elements:
            raise FactoryError("cannot create a grid without elements")
        grid = Grid(self.config)
        for coords in self._coords:
            grid._verts[0].append(VertexRec(coords=coords.copy(), id=grid._new_id()))
        for idx, parametrization, marker in self._elements:
            slot = len(grid._elems[0])
            edges = ()
            if self.config.dim == 2:
                edges = tuple(
                    grid._get_or_make_edge(0, idx[a], idx[b]) for a, b in TRIANGLE_EDGES
                )
            rec = ElemRec(
                v=idx,
                id=grid._new_id(),
                edges=edges,
                root=(0, slot),
                parametrization=parametrization,
                marker=marker,
            )
            grid._elems[0].append(rec)
            for e in edges:
                grid._edges[0][e].incident.append(slot)
            for vslot in idx:
                grid._verts[0][vslot].incident.append(slot)
            if parametrization is not None:
                _check_parametrization_corners(grid, slot, parametrization)
        return grid


def _check_parametrization_corners(grid, slot, phi, tol=1e-9):
    """Warn when phi at the reference corners disagrees with stored coordinates."""
    from .geometry import REFERENCE_CORNERS

    rec = grid._elems[0][slot]
    for local, vslot in zip(REFERENCE_CORNERS[grid.dim], rec.v):
        stored = grid._verts[0][vslot].coords
        image = np.asarray(phi(np.asarray(local, dtype=float)), dtype=float)
        if image.shape != stored.shape or np.max(np.abs(image - stored)) > tol:
            warnings.warn(
                f"parametrization of element {slot} maps corner {local.tolist()} to "
                f"{np.asarray(image).tolist()}, but the inserted vertex sits at "
                f"{stored.tolist()}",
                stacklevel=3,
            )
            break


# -- consistency audit ----------------------------------------------------


def audit_grid(grid):
    """Full topology audit; returns a list of problem descriptions (empty = ok)."""
    problems = []
    d = grid.dim
    n_levels = len(grid._elems)
    if not (len(grid._verts) == len(grid._edges) == n_levels):
        problems.append("arena level counts differ between codims")
        return problems

    for level in range(n_levels):
        verts = grid._verts[level]
        edges = grid._edges[level]
        elems = grid._elems[level]

        for slot, rec in enumerate(elems):
            tag = f"element ({level},{slot})"
            if len(rec.v) != d + 1:
                problems.append(f"{tag}: wrong vertex count")
                continue
            if any(not 0 <= s < len(verts) for s in rec.v):
                problems.append(f"{tag}: dangling vertex slot")
                continue
            if len(set(rec.v)) != d + 1:
                problems.append(f"{tag}: repeated vertex")
            if d == 2:
                if len(rec.edges) != 3 or any(not 0 <= e < len(edges) for e in rec.edges):
                    problems.append(f"{tag}: bad edge slots")
                else:
                    for k, (a, b) in enumerate(TRIANGLE_EDGES):
                        if frozenset(edges[rec.edges[k]].v) != frozenset((rec.v[a], rec.v[b])):
                            problems.append(f"{tag}: edge {k} does not match its corner pair")
                        if slot not in edges[rec.edges[k]].incident:
                            problems.append(f"{tag}: missing from edge {k} incidence")
            if rec.father is not None:
                if level == 0 or not 0 <= rec.father < len(grid._elems[level - 1]):
                    problems.append(f"{tag}: dangling father")
                elif slot not in grid._elems[level - 1][rec.father].children:
                    problems.append(f"{tag}: father does not list it as child")
                if rec.corners_in_father is None:
                    problems.append(f"{tag}: has father but no embedding in it")
            if rec.children:
                if not 1 <= len(rec.children) <= 2**d:
                    problems.append(f"{tag}: {len(rec.children)} children")
                for c in rec.children:
                    if level + 1 >= n_levels or not 0 <= c < len(grid._elems[level + 1]):
                        problems.append(f"{tag}: dangling child slot {c}")
                    elif grid._elems[level + 1][c].father != slot:
                        problems.append(f"{tag}: child {c} has wrong father")
            rl, rs = rec.root
            cur_level, cur_slot = level, slot
            while grid._elems[cur_level][cur_slot].father is not None:
                cur_level, cur_slot = cur_level - 1, grid._elems[cur_level][cur_slot].father
            if (cur_level, cur_slot) != (rl, rs):
                problems.append(f"{tag}: root link does not match father chain")
            if rec.mark not in (-1, 0, 1):
                problems.append(f"{tag}: invalid mark {rec.mark}")

        for slot, rec in enumerate(edges):
            tag = f"edge ({level},{slot})"
            if any(not 0 <= s < len(verts) for s in rec.v):
                problems.append(f"{tag}: dangling vertex slot")
            if len(rec.children) not in (0, 2):
                problems.append(f"{tag}: children not absent-or-pair")
            for c in rec.children:
                if level + 1 >= n_levels or not 0 <= c < len(grid._edges[level + 1]):
                    problems.append(f"{tag}: dangling child")
                elif grid._edges[level + 1][c].father != slot:
                    problems.append(f"{tag}: child {c} has wrong father")
            if rec.father is not None:
                if level == 0 or not 0 <= rec.father < len(grid._edges[level - 1]):
                    problems.append(f"{tag}: dangling father")
                elif slot not in grid._edges[level - 1][rec.father].children:
                    problems.append(f"{tag}: father does not list it")
            for t in rec.incident:
                if not 0 <= t < len(elems) or slot not in elems[t].edges:
                    problems.append(f"{tag}: stale incidence entry {t}")

        for slot, rec in enumerate(verts):
            tag = f"vertex ({level},{slot})"
            if rec.coords.shape != (grid.world_dim,):
                problems.append(f"{tag}: wrong coordinate length")
            if rec.father is not None:
                if level == 0 or not 0 <= rec.father < len(grid._verts[level - 1]):
                    problems.append(f"{tag}: dangling father")
                else:
                    frec = grid._verts[level - 1][rec.father]
                    if frec.finer != slot:
                        problems.append(f"{tag}: father does not link back")
                    if frec.id != rec.id:
                        problems.append(f"{tag}: chain id differs from father")
            if rec.finer is not None:
                if level + 1 >= n_levels or not 0 <= rec.finer < len(grid._verts[level + 1]):
                    problems.append(f"{tag}: dangling finer copy")
            for e in rec.incident:
                if not 0 <= e < len(elems) or slot not in elems[e].v:
                    problems.append(f"{tag}: stale incidence entry {e}")
            referenced = bool(rec.incident) or rec.finer is not None
            if not referenced and d == 2:
                referenced = any(slot in er.v for er in edges)
            if not referenced:
                problems.append(f"{tag}: unreferenced")

    # persistent ids must be unique across logical entities alive now
    seen = {}
    for level in range(n_levels):
        for rec in grid._elems[level]:
            if rec.id in seen:
                problems.append(f"duplicate id {rec.id}")
            seen[rec.id] = True
        for rec in grid._edges[level]:
            if rec.id in seen:
                problems.append(f"duplicate id {rec.id}")
            seen[rec.id] = True
        for rec in grid._verts[level]:
            if rec.father is None:  # chain ids are shared on purpose
                if rec.id in seen:
                    problems.append(f"duplicate id {rec.id}")
                seen[rec.id] = True
    return problems
