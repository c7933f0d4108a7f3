"""Exhaustive link-state generation, independent of the basis builder."""
from __future__ import annotations

from itertools import product

from ..algebra import EMPTY, AlgebraFamily, Sector


def _planar_ok(sites, periodic: bool) -> bool:
    arcs = [(i, v) for i, v in enumerate(sites) if v >= 0 and i < v]
    for (a, b), (c, d) in product(arcs, arcs):
        if a < c < b < d:
            return False
    if not periodic:
        thr = [i for i, v in enumerate(sites) if v <= -2]
        if any(a < t < b for a, b in arcs for t in thr):
            return False
    else:
        # on the annulus an arc may enclose through-lines on one side only
        thr = [i for i, v in enumerate(sites) if v <= -2]
        for a, b in arcs:
            inside = any(a < t < b for t in thr)
            outside = any(t < a or t > b for t in thr)
            if inside and outside:
                return False
    return True


def brute_force_basis(family: AlgebraFamily, N: int, sector: Sector) -> set:
    """All site-content tuples of a sector (windings ignored), by filtering every assignment."""
    m = sector.lines
    options = list(range(N)) + [-2]
    if family.dilute:
        options.append(EMPTY)
    out = set()
    for raw in product(options, repeat=N):
        if sum(1 for v in raw if v == -2) != m:
            continue
        ok = True
        for i, v in enumerate(raw):
            if v >= 0 and (v == i or raw[v] != i):
                ok = False
                break
        if not ok:
            continue
        if not family.crossings and not _planar_ok(raw, family.periodic):
            continue
        sites = []
        k = 0
        for v in raw:
            if v == -2:
                sites.append(-2 - k)
                k += 1
            else:
                sites.append(v)
        out.add(tuple(sites))
    return out
