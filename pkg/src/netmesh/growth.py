"""Runtime grid growth: queued insertion and removal of leaf elements.

Insertions are staged (two-phase commit): ``queue_vertex`` hands out
provisional indices that continue the current leaf-vertex index range,
``queue_element`` mixes provisional and existing leaf-vertex indices,
and ``grow`` resolves and commits everything at once.  An element's
vertices must sit on one common level; when the given leaf copies
disagree, coarser chain copies are substituted and the lowest common
level wins.  Elements whose vertices reach no common level are skipped
silently; the per-element outcome is retrievable from the growth report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, FactoryError, LifecycleError
from .topology import ElemRec, SimplexKind, TRIANGLE_EDGES, VertexRec
from .views import vertex_in_leaf_view

logger = logging.getLogger(__name__)


@dataclass
class GrowthReport:
    """Per-transaction outcome: queue position -> inserted id or skip reason."""

    inserted: list = field(default_factory=list)   # (queue_index, element_id)
    skipped: list = field(default_factory=list)    # (queue_index, reason)
    removed: int = 0

    @property
    def inserted_ids(self):
        return [eid for _, eid in self.inserted]


def _require_idle_adapt(grid):
    if grid._adapt_phase != "idle":
        raise LifecycleError("grow transaction cannot overlap an adapt transaction")


def _queue_base(grid):
    """Leaf-vertex count snapshot; provisional indices continue this range."""
    if grid._queue_base is None:
        leaves = []
        for lev in range(len(grid._verts)):
            for slot in range(len(grid._verts[lev])):
                if vertex_in_leaf_view(grid, lev, slot):
                    leaves.append((lev, slot))
        grid._queue_leaf_vertices = leaves
        grid._queue_base = len(leaves)
    return grid._queue_base


def queue_vertex(grid, coords):
    """Stage a new vertex; returns its provisional index (fixed until grow)."""
    _require_idle_adapt(grid)
    if grid._grow_phase != "idle":
        raise LifecycleError("queue_vertex after grow; call post_grow first")
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (grid.world_dim,):
        raise DimensionMismatchError(
            f"expected {grid.world_dim} coordinates, got shape {coords.shape}"
        )
    base = _queue_base(grid)
    grid._queued_vertices.append(coords.copy())
    return base + len(grid._queued_vertices) - 1


def queue_element(grid, kind, vertex_indices, parametrization=None):
    """Stage a new element over provisional and/or existing leaf vertex indices."""
    _require_idle_adapt(grid)
    if grid._grow_phase != "idle":
        raise LifecycleError("queue_element after grow; call post_grow first")
    if not isinstance(kind, SimplexKind) or kind.dim != grid.dim:
        raise FactoryError(f"element kind {kind!r} does not match grid dimension {grid.dim}")
    if parametrization is not None and not callable(parametrization):
        raise FactoryError("parametrization must be callable")
    base = _queue_base(grid)
    idx = tuple(int(i) for i in vertex_indices)
    if len(idx) != grid.dim + 1:
        raise FactoryError(f"need {grid.dim + 1} vertex indices, got {len(idx)}")
    if len(set(idx)) != len(idx):
        raise FactoryError(f"repeated vertex index in {idx}")
    refs = []
    for i in idx:
        if 0 <= i < base:
            refs.append(("v",) + grid._queue_leaf_vertices[i])
        elif base <= i < base + len(grid._queued_vertices):
            refs.append(("q", i - base))
        else:
            raise FactoryError(f"unknown vertex index {i}")
    grid._queued_elements.append((tuple(refs), parametrization))
    return len(grid._queued_elements) - 1


def remove_element(grid, element):
    """Stage removal of a leaf element (a strict subset of siblings is fine)."""
    _require_idle_adapt(grid)
    if grid._grow_phase != "idle":
        raise LifecycleError("remove_element after grow; call post_grow first")
    rec = element._rec()
    if rec.children:
        raise FactoryError("only leaf elements can be removed")
    key = (element.level, element.slot)
    if key not in grid._queued_removals:
        grid._queued_removals.append(key)


def _chain_levels(grid, level, slot):
    """Every level on which this logical vertex has a copy, with slots."""
    lo_level, lo_slot = level, slot
    rec = grid._verts[level][slot]
    while rec.father is not None:
        lo_level, lo_slot = lo_level - 1, rec.father
        rec = grid._verts[lo_level][lo_slot]
    out = {lo_level: lo_slot}
    while rec.finer is not None:
        lo_level, lo_slot = lo_level + 1, rec.finer
        rec = grid._verts[lo_level][lo_slot]
        out[lo_level] = lo_slot
    return out


def grow(grid):
    """Commit queued insertions and removals; returns True when the grid changed.

    New elements carry ``is_new`` until post_grow and start their own
    refinement tree (no father), so their level may exceed zero.
    """
    _require_idle_adapt(grid)
    if grid._grow_phase != "idle":
        raise LifecycleError("grow called twice without post_grow")
    report = GrowthReport()

    created = {}  # provisional queue slot -> (level, vertex slot)
    for qidx, (refs, parametrization) in enumerate(grid._queued_elements):
        chains = []
        given_levels = []
        unresolved = []
        for ref in refs:
            if ref[0] == "v":
                chains.append(_chain_levels(grid, ref[1], ref[2]))
                given_levels.append(ref[1])
            elif ref[1] in created:
                lev, slot = created[ref[1]]
                chains.append({lev: slot})
                given_levels.append(lev)
            else:
                unresolved.append(ref[1])
        if not chains:
            resolved = 0
        elif len(set(given_levels)) == 1:
            resolved = given_levels[0]
        else:
            common = set(chains[0])
            for c in chains[1:]:
                common &= set(c)
            if not common:
                report.skipped.append((qidx, "vertices reach no common level"))
                continue
            resolved = min(common)
        ok = all(resolved in c for c in chains)
        if not ok:
            report.skipped.append((qidx, "vertices reach no common level"))
            continue

        grid._ensure_level(resolved)
        vslots = []
        for ref in refs:
            if ref[0] == "v":
                vslots.append(_chain_levels(grid, ref[1], ref[2])[resolved])
            elif ref[1] in created:
                vslots.append(created[ref[1]][1])
            else:
                s = len(grid._verts[resolved])
                grid._verts[resolved].append(
                    VertexRec(coords=grid._queued_vertices[ref[1]].copy(), id=grid._new_id())
                )
                created[ref[1]] = (resolved, s)
                vslots.append(s)
        if len(set(vslots)) != grid.dim + 1:
            report.skipped.append((qidx, "vertices coincide after level resolution"))
            continue

        edges = ()
        if grid.dim == 2:
            edges = tuple(
                grid._get_or_make_edge(resolved, vslots[a], vslots[b])
                for a, b in TRIANGLE_EDGES
            )
        slot = len(grid._elems[resolved])
        grid._elems[resolved].append(
            ElemRec(
                v=tuple(vslots),
                id=grid._new_id(),
                edges=edges,
                root=(resolved, slot),
                is_new=True,
                parametrization=parametrization,
            )
        )
        for e in edges:
            grid._edges[resolved][e].incident.append(slot)
        for vs in vslots:
            grid._verts[resolved][vs].incident.append(slot)
        report.inserted.append((qidx, grid._elems[resolved][slot].id))

    if grid._queued_removals:
        from .compaction import remove_elements

        report.removed = len(grid._queued_removals)
        remove_elements(grid, set(grid._queued_removals))

    changed = bool(report.inserted or report.removed)
    for qidx, reason in report.skipped:
        logger.info("growth: skipped queued element %d (%s)", qidx, reason)
    grid._queued_vertices = []
    grid._queued_elements = []
    grid._queued_removals = []
    grid._queue_base = None
    grid._queue_leaf_vertices = None
    grid._growth_report = report
    grid._grow_phase = "grown"
    grid._revision += 1
    return changed


def post_grow(grid):
    """Clear is_new flags and close the grow transaction."""
    if grid._grow_phase != "grown":
        raise LifecycleError("post_grow requires a preceding grow")
    grid._grow_phase = "idle"
    for level_recs in grid._elems:
        for rec in level_recs:
            rec.is_new = False
