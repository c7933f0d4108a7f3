"""Sector bases of the diagram-algebra standard modules."""
from __future__ import annotations

import csv
import io
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .algebra import EMPTY, AlgebraFamily, Context, LinkState, Sector
from .errors import IncompatibleSector, SizeOverflow
from .params import LoopParams
from .symmetric import irrep_dim, perm_matrix

DEFAULT_CAP = 5_000_000


def _matchings(points, planar: bool):
    """Perfect matchings of an ordered point list (non-crossing ones if planar)."""
    if not points:
        yield ()
        return
    first = points[0]
    for k in range(1, len(points), 2 if planar else 1):
        if planar and (k - 1) % 2:
            continue
        rest_inside = points[1:k]
        rest_outside = points[k + 1:]
        if planar:
            for m1 in _matchings(rest_inside, True):
                for m2 in _matchings(rest_outside, True):
                    yield ((first, points[k]),) + m1 + m2
        else:
            remaining = points[1:k] + points[k + 1:]
            for m in _matchings(remaining, False):
                yield ((first, points[k]),) + m


def _segment(i: int, j: int, N: int) -> frozenset:
    """Boundary segment going rightward from site i to site j, on a doubled circle."""
    out = set()
    pos = 2 * i
    end = 2 * j
    while True:
        out.add(pos)
        if pos == end:
            break
        pos = (pos + 1) % (2 * N)
    return frozenset(out)


def _laminar(segments) -> bool:
    for a, b in combinations(segments, 2):
        inter = a & b
        if inter and inter != a and inter != b:
            return False
    return True


def _annular_windings(arcs, throughs, N, sector_r0: bool):
    """Admissible winding assignments for non-crossing arcs on the annulus.

    Yields tuples of w(i -> j) for each arc (i < j): 0 if the arc's disk side is
    the direct interval, -1 if it wraps across the seam.
    """
    options = []
    for (i, j) in arcs:
        direct = _segment(i, j, N)
        wrap = _segment(j, i, N)
        opts = []
        for w, seg in ((0, direct), (-1, wrap)):
            if any(2 * t in seg for t in throughs):
                continue
            opts.append((w, seg))
        if not opts:
            return
        options.append(opts)
    for choice in product(*options):
        if _laminar([seg for _, seg in choice]):
            yield tuple(w for w, _ in choice)


def _raw_states(family: AlgebraFamily, N: int, sector: Sector, track: bool):
    m = sector.lines
    sites_all = range(N)
    occs = []
    if family.dilute:
        for k in range(m, N + 1):
            if (k - m) % 2 == 0:
                occs.extend(combinations(sites_all, k))
    else:
        occs.append(tuple(sites_all))
    planar = not family.crossings
    for occ in occs:
        for thr in combinations(occ, m):
            thr_set = set(thr)
            rest = [p for p in occ if p not in thr_set]
            for matching in _matchings(rest, planar):
                if planar and thr:
                    # an arc may not enclose a through-line in the strip picture
                    # unless the periodic embedding lets it go round the back
                    if not family.periodic and any(i < t < j for (i, j) in matching for t in thr):
                        continue
                sites = [EMPTY] * N
                for rank, t in enumerate(thr):
                    sites[t] = -2 - rank
                for (i, j) in matching:
                    sites[i], sites[j] = j, i
                if not track:
                    yield LinkState(tuple(sites), (0,) * N)
                    continue
                for ws in _annular_windings(matching, thr, N, m == 0):
                    wind = [0] * N
                    for (i, j), w in zip(matching, ws):
                        wind[i], wind[j] = w, -w
                    yield LinkState(tuple(sites), tuple(wind))


class SectorBasis:
    """Ordered basis of one sector, tensored with the irrep space when labelled."""

    def __init__(self, family: AlgebraFamily, N: int, sector: Sector,
                 params: LoopParams | None = None, cap: int = DEFAULT_CAP):
        self.family = family
        self.N = N
        self.sector = sector
        self.params = params or LoopParams.from_n(1.0)
        self.ctx = Context(family, N, sector, self.params)
        self.states = enumerate_basis(family, N, sector, cap=cap)
        self.index = {s: i for i, s in enumerate(self.states)}
        if self.ctx.labelled:
            lam = sector.lam if sector.lam is not None else (sector.lines,)
            self.lam = tuple(lam)
        else:
            self.lam = None
        self.rep_dim = irrep_dim(self.lam) if self.lam else 1

    @property
    def dim(self) -> int:
        return len(self.states) * self.rep_dim

    def __len__(self):
        return len(self.states)

    def rho(self, perm) -> np.ndarray:
        if not self.lam:
            return np.ones((1, 1))
        return perm_matrix(self.lam, tuple(perm))

    def with_params(self, params: LoopParams) -> "SectorBasis":
        new = object.__new__(SectorBasis)
        new.__dict__.update(self.__dict__)
        new.params = params
        new.ctx = Context(self.family, self.N, self.sector, params)
        return new

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["index", "canonical_encoding", "r", "s_or_lambda", "winding_signature"])
        sec = self.sector
        if sec.lam is not None:
            label = "[" + " ".join(str(x) for x in sec.lam) + "]"
        elif sec.identity_like:
            label = "<1,1>"
        elif sec.twist is not None:
            label = f"z={sec.twist.real:.9g}{sec.twist.imag:+.9g}j"
        else:
            label = "" if sec.s is None else str(sec.s)
        for i, st in enumerate(self.states):
            wr.writerow([i, st.encoding(), str(sec.r), label, st.winding_signature()])
        return buf.getvalue()


@lru_cache(maxsize=256)
def _enumerate_cached(family, N, sector, cap):
    ctx = Context(family, N, sector, LoopParams.from_n(1.0))
    states = sorted(set(_raw_states(family, N, sector, ctx.track)))
    if len(states) > cap:
        raise SizeOverflow(f"basis of size {len(states)} exceeds cap {cap}")
    return tuple(states)


def enumerate_basis(family: AlgebraFamily, N: int, sector: Sector, cap: int = DEFAULT_CAP):
    """Deterministically ordered list of the admissible link states of a sector."""
    if N < 1:
        raise IncompatibleSector("N must be positive")
    sector.validate_for(family, N)
    return list(_enumerate_cached(family, N, sector, cap))


def project_sym_irrep(lam, raw_basis):
    """Irrep data for a crossing-family sector with 2j = |lam| through-lines.

    Returns (classes, dim_lambda, rho) where rho(perm) gives the real
    orthogonal matrix of a through-line permutation.
    """
    from .symmetric import check_partition
    lam = check_partition(lam, sum(lam))
    m = sum(lam)
    for st in raw_basis:
        if sum(1 for v in st.sites if v <= -2) != m:
            raise IncompatibleSector("state with the wrong number of through-lines")
    classes = sorted({LinkState(st.sites, st.wind) for st in raw_basis})
    return classes, irrep_dim(lam), (lambda perm: perm_matrix(lam, tuple(perm)))
