"""Arena compaction after element removal (coarsening or growth).

Removing leaf elements can orphan edges, vertex copies and whole
refinement-tree branches.  This module computes the surviving entity
sets, rewrites every slot reference, rebuilds incidence lists and trims
empty trailing levels.  Slot handles are invalidated (the grid's
structural revision is bumped); persistent ids are untouched.

Survival rules:

* an element survives unless listed dead (only leaves are ever listed);
* an edge survives when a surviving triangle uses it, when one of its
  children survives, or when its sibling half survives (edge children
  are kept in pairs so split edges never end up with a single half);
* a vertex copy survives when a surviving element or edge references it
  or when a finer copy survives (father chains stay contiguous).
"""

from __future__ import annotations


def remove_elements(grid, dead):
    """Remove the (level, slot) element set ``dead`` and compact the arenas."""
    if not dead:
        return
    n_levels = len(grid._elems)

    elem_alive = [
        [(lev, s) not in dead for s in range(len(grid._elems[lev]))]
        for lev in range(n_levels)
    ]

    # --- edges ----------------------------------------------------------
    edge_alive = [[False] * len(grid._edges[lev]) for lev in range(n_levels)]
    if grid.dim == 2:
        for lev in range(n_levels):
            for s, rec in enumerate(grid._elems[lev]):
                if elem_alive[lev][s]:
                    for e in rec.edges:
                        edge_alive[lev][e] = True
        # child-to-father propagation, finest level first
        for lev in range(n_levels - 1, 0, -1):
            for s, rec in enumerate(grid._edges[lev]):
                if edge_alive[lev][s] and rec.father is not None:
                    edge_alive[lev - 1][rec.father] = True
        # keep half pairs together
        for lev in range(n_levels):
            for s, rec in enumerate(grid._edges[lev]):
                if edge_alive[lev][s] and rec.children:
                    c0, c1 = rec.children
                    if edge_alive[lev + 1][c0] or edge_alive[lev + 1][c1]:
                        edge_alive[lev + 1][c0] = True
                        edge_alive[lev + 1][c1] = True

    # --- vertices -------------------------------------------------------
    vert_alive = [[False] * len(grid._verts[lev]) for lev in range(n_levels)]
    for lev in range(n_levels):
        for s, rec in enumerate(grid._elems[lev]):
            if elem_alive[lev][s]:
                for v in rec.v:
                    vert_alive[lev][v] = True
        for s, rec in enumerate(grid._edges[lev]):
            if edge_alive[lev][s]:
                for v in rec.v:
                    vert_alive[lev][v] = True
    for lev in range(n_levels - 1, 0, -1):
        for s, rec in enumerate(grid._verts[lev]):
            if vert_alive[lev][s] and rec.father is not None:
                vert_alive[lev - 1][rec.father] = True

    # --- slot remaps ----------------------------------------------------
    def build_map(alive):
        remap, new_slot = {}, 0
        for s, keep in enumerate(alive):
            if keep:
                remap[s] = new_slot
                new_slot += 1
        return remap

    elem_map = [build_map(a) for a in elem_alive]
    edge_map = [build_map(a) for a in edge_alive]
    vert_map = [build_map(a) for a in vert_alive]

    new_elems = [[] for _ in range(n_levels)]
    new_edges = [[] for _ in range(n_levels)]
    new_verts = [[] for _ in range(n_levels)]

    for lev in range(n_levels):
        for s, rec in enumerate(grid._verts[lev]):
            if not vert_alive[lev][s]:
                continue
            rec.father = None if lev == 0 or rec.father is None else vert_map[lev - 1].get(rec.father)
            if rec.finer is not None:
                rec.finer = vert_map[lev + 1].get(rec.finer) if lev + 1 < n_levels else None
            rec.incident = []
            new_verts[lev].append(rec)

        for s, rec in enumerate(grid._edges[lev]):
            if not edge_alive[lev][s]:
                continue
            rec.v = tuple(vert_map[lev][v] for v in rec.v)
            rec.father = None if lev == 0 or rec.father is None else edge_map[lev - 1].get(rec.father)
            if rec.children:
                kids = tuple(
                    edge_map[lev + 1][c]
                    for c in rec.children
                    if lev + 1 < n_levels and c in edge_map[lev + 1]
                )
                rec.children = kids if len(kids) == 2 else ()
            rec.incident = []
            new_edges[lev].append(rec)

        for s, rec in enumerate(grid._elems[lev]):
            if not elem_alive[lev][s]:
                continue
            rec.v = tuple(vert_map[lev][v] for v in rec.v)
            if rec.edges:
                rec.edges = tuple(edge_map[lev][e] for e in rec.edges)
            rec.father = None if lev == 0 or rec.father is None else elem_map[lev - 1].get(rec.father)
            if rec.children:
                rec.children = tuple(
                    elem_map[lev + 1][c]
                    for c in rec.children
                    if lev + 1 < n_levels and c in elem_map[lev + 1]
                )
            rl, rs = rec.root
            rec.root = (rl, elem_map[rl][rs])
            new_elems[lev].append(rec)

    grid._elems, grid._edges, grid._verts = new_elems, new_edges, new_verts

    # trim empty trailing levels
    while len(grid._elems) > 1 and not grid._elems[-1] and not grid._edges[-1] and not grid._verts[-1]:
        grid._elems.pop()
        grid._edges.pop()
        grid._verts.pop()

    # rebuild incidence from scratch
    for lev in range(len(grid._elems)):
        for s, rec in enumerate(grid._elems[lev]):
            for v in rec.v:
                grid._verts[lev][v].incident.append(s)
            for e in rec.edges:
                grid._edges[lev][e].incident.append(s)

    grid._edge_lookup = [None] * len(grid._elems)
    grid._srev += 1
