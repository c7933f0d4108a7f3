"""Row transfer matrices of the loop models, defect rows and seam sectors.

Rows are built by sweeping tiles across the sites while auxiliary slots hold
the horizontal strands (the edge entering the current vertex in the axial
geometry, or the defect line).  Each sweep is compiled level by level into
sparse matrices, so applying a row costs one sparse product per tile column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .algebra import EMPTY, AlgebraFamily, LinkState, Sector, Strands
from .basis import SectorBasis
from .errors import IncompatibleSector, NonPositiveK, OpenBoundaryUnsupported
from .ops import RowOperator
from .params import LoopParams

DIAGONAL = "Diagonal"
AXIAL = "Axial"


@dataclass(frozen=True)
class EdgeWeights:
    """Monomer fugacities per edge of one axial row of N vertices.

    ``below[k]``/``above[k]`` are the vertical edges under/over vertex k and
    ``right[k]`` the horizontal edge from vertex k to vertex k+1 (the last one
    wraps around the cylinder).
    """

    below: tuple
    above: tuple
    right: tuple

    @classmethod
    def uniform(cls, N: int, K: float) -> "EdgeWeights":
        return cls((K,) * N, (K,) * N, (K,) * N)


@dataclass(frozen=True)
class ModelParams:
    loop: LoopParams
    K: float = 1.0
    w: float = 0.0
    mu: float = 1.0
    contact: bool | None = None
    edge_weights: EdgeWeights | None = None

    def __post_init__(self):
        if self.K < 0:
            raise NonPositiveK(f"K={self.K} is negative")

    def contact_on(self, geometry: str) -> bool:
        if self.contact is None:
            return geometry == DIAGONAL
        return self.contact


# ---------------------------------------------------------------------------
# compiled sweeps

def _normalize(st: Strands):
    """Absorb through-line phases and renumber labels by slot order.

    Returns the permutation old label -> new label.
    """
    ctx = st.ctx
    if ctx.phases:
        total = sum(st.tw)
        if total:
            st.coeff *= ctx.twist ** (-total)
    rank = {}
    s = st.s
    for k, v in enumerate(s):
        if v <= -2:
            lab = -2 - v
            rank[lab] = len(rank)
            s[k] = -2 - rank[lab]
    m = len(rank)
    st.tw = [0] * m
    st.perm = list(range(m))
    return tuple(rank[a] for a in range(m))


def _key(st: Strands):
    return (tuple(st.s), tuple(st.w))


def _from_key(ctx, key, nlab):
    st = Strands.__new__(Strands)
    st.ctx = ctx
    st.s = list(key[0])
    st.w = list(key[1])
    st.tw = [0] * nlab
    st.perm = list(range(nlab))
    st.coeff = 1.0 + 0j
    return st


class _Transitions:
    def __init__(self):
        self.rows, self.cols, self.vals, self.perms = [], [], [], []

    def add(self, i, j, c, perm):
        self.rows.append(i)
        self.cols.append(j)
        self.vals.append(c)
        self.perms.append(perm)

    def matrix(self, nrows, ncols, basis) -> sp.csr_matrix:
        d = basis.rep_dim
        if d == 1:
            return sp.csr_matrix((np.asarray(self.vals, dtype=complex),
                                  (self.rows, self.cols)), shape=(nrows, ncols))
        R, C, V = [], [], []
        for i, j, c, p in zip(self.rows, self.cols, self.vals, self.perms):
            block = basis.rho(p) * c
            for a in range(d):
                for b in range(d):
                    if block[a, b] != 0:
                        R.append(i * d + a)
                        C.append(j * d + b)
                        V.append(block[a, b])
        return sp.csr_matrix((np.asarray(V, dtype=complex), (R, C)),
                             shape=(nrows * d, ncols * d))


def compile_sweep(basis: SectorBasis, nslots: int, opener, steps, closer):
    """Compile open -> steps -> close into a list of sparse matrices.

    ``opener(st)`` and each step return lists of (Strands, weight);
    ``closer(st)`` returns such a list whose strands only occupy the N sites.
    """
    ctx = basis.ctx
    nlab = basis.sector.lines
    mats = []
    keys: dict = {}
    trans = _Transitions()
    for j, state in enumerate(basis.states):
        st0 = Strands(ctx, state, nslots)
        for st, wgt in opener(st0):
            perm = _normalize(st)
            k = _key(st)
            i = keys.setdefault(k, len(keys))
            trans.add(i, j, st.coeff * wgt, perm)
    mats.append(trans.matrix(len(keys), len(basis.states), basis))
    for step in steps:
        new_keys: dict = {}
        trans = _Transitions()
        for k, j in keys.items():
            for st, wgt in step(_from_key(ctx, k, nlab)):
                if wgt == 0:
                    continue
                perm = _normalize(st)
                k2 = _key(st)
                i = new_keys.setdefault(k2, len(new_keys))
                trans.add(i, j, st.coeff * wgt, perm)
        mats.append(trans.matrix(len(new_keys), len(keys), basis))
        keys = new_keys
    trans = _Transitions()
    for k, j in keys.items():
        for st, wgt in closer(_from_key(ctx, k, nlab)):
            if wgt == 0:
                continue
            out, c = st.finish(basis.N)
            i = basis.index[LinkState(out.sites, out.wind)]
            trans.add(i, j, c * wgt, out.perm or (0,) * 0)
    mats.append(trans.matrix(len(basis.states), len(keys), basis))
    return mats


class ChainOperator(RowOperator):
    """Product of compiled sweep levels, applied right to left."""

    def __init__(self, basis, mats, meta, densify_limit: int = 2500):
        product = None
        if basis.dim <= densify_limit:
            product = mats[0]
            for m in mats[1:]:
                product = (m @ product).tocsr()
            product.eliminate_zeros()
        real = all(not np.iscomplexobj(m.data) for m in mats)
        super().__init__(basis, product, None, meta, float if real else complex)
        self.levels = mats

    def apply(self, v):
        # no bound method stored on self: a self-reference would keep the
        # level matrices alive until the cyclic collector runs
        if self.matrix is not None:
            return self.matrix @ v
        for m in self.levels:
            v = m @ v
        return v


def _copy(st):
    return st.copy()


# ---------------------------------------------------------------------------
# tile kernels

def _axial_vertex(k: int, h: int, hw, model: ModelParams, crossings: bool, contact: bool):
    """Vertex step at site k with the horizontal strand in slot h.

    hw = (bottom, left, top, right) half-edge weights (square roots of K_e).
    """
    hb, hl, ht, hr = hw
    w = model.w if crossings else 0.0
    mu = model.mu

    def step(st):
        ob = st.s[k] != EMPTY
        ol = st.s[h] != EMPTY
        out = []
        if not ob and not ol:
            out.append((st, 1.0))
            s2 = st.copy()
            s2.cup(k, h)
            out.append((s2, ht * hr))
        elif ob and not ol:
            out.append((st.copy(), hb * ht))
            s2 = st
            s2.move(k, h)
            out.append((s2, hb * hr))
        elif ol and not ob:
            out.append((st.copy(), hl * hr))
            s2 = st
            s2.move(h, k)
            out.append((s2, hl * ht))
        else:
            four = hb * hl * ht * hr
            if w:
                out.append((st.copy(), four * w))
            if contact:
                s3 = st.copy()
                if s3.join(k, h):
                    s3.cup(k, h)
                    out.append((s3, four * mu))
                s4 = st.copy()
                s4.relabel(_swapped(len(st.s), k, h), [0] * len(st.s))
                out.append((s4, four * mu))
            s2 = st
            if s2.join(k, h):
                out.append((s2, hb * hl))
        return out

    return step


def _swapped(m, a, b):
    pos = list(range(m))
    pos[a], pos[b] = b, a
    return pos


_DIAG_ONE_MONOMER = ("pass_left", "pass_right", "cap", "cup", "shift_left", "shift_right")


def _diagonal_tile(a: int, b: int, c: int, model: ModelParams, family: AlgebraFamily):
    from .algebra import apply_tile
    K = model.K
    crossing_w = model.w if family.crossings else 0.0
    mu = model.mu

    def step(st):
        out = []
        oa = st.s[a] != EMPTY
        ob = st.s[b] != EMPTY
        if not family.dilute:
            options = [("pass_both", 1.0), ("e", 1.0)]
            if crossing_w:
                options.append(("swap", crossing_w))
        else:
            options = [("empty", 1.0)] + [(t, K) for t in _DIAG_ONE_MONOMER]
            options += [("pass_both", K * K * mu), ("e", K * K * mu)]
            if crossing_w:
                options.append(("swap_occupied", K * K * crossing_w))
        for name, wgt in options:
            if wgt == 0:
                continue
            if name == "swap_occupied":
                if not (oa and ob):
                    continue
                name = "swap"
            s2 = st.copy()
            if apply_tile(s2, name, a, b, c):
                out.append((s2, wgt))
        return out

    return step


def _identity_open(st):
    return [(st, 1.0)]


def _axial_open_periodic(h, g):
    def op(st):
        s2 = st.copy()
        s2.cup(h, g, 0)
        return [(st, 1.0), (s2, 1.0)]
    return op


def _axial_close_periodic(h, g):
    def cl(st):
        oh = st.s[h] != EMPTY
        og = st.s[g] != EMPTY
        if not oh and not og:
            return [(st, 1.0)]
        if oh and og and st.join(h, g, 1):
            return [(st, 1.0)]
        return []
    return cl


def _axial_close_open(h):
    def cl(st):
        return [(st, 1.0)] if st.s[h] == EMPTY else []
    return cl


def _half_edge_weights(model: ModelParams, N: int):
    ew = model.edge_weights or EdgeWeights.uniform(N, model.K)
    if len(ew.below) != N or len(ew.above) != N or len(ew.right) != N:
        raise ValueError("edge weights do not match the row length")
    sq = math.sqrt
    out = []
    for k in range(N):
        left = ew.right[k - 1] if k > 0 else ew.right[N - 1]
        out.append((sq(ew.below[k]), sq(left), sq(ew.above[k]), sq(ew.right[k])))
    return out


def make_basis(family, N, sector, loop: LoopParams) -> SectorBasis:
    return SectorBasis(family, N, sector, loop)


def build_row_transfer(family: AlgebraFamily, N: int, sector: Sector, params: ModelParams,
                       geometry: str = AXIAL, basis: SectorBasis | None = None) -> ChainOperator:
    """Row transfer matrix of the loop model in one sector."""
    if params.K < 0:
        raise NonPositiveK(str(params.K))
    basis = basis or SectorBasis(family, N, sector, params.loop)
    contact = params.contact_on(geometry)
    if geometry == AXIAL:
        if not family.dilute:
            raise IncompatibleSector("the axial vertex model is dilute")
        h, g = N, N + 1
        hws = _half_edge_weights(params, N)
        steps = [_axial_vertex(k, h, hws[k], params, family.crossings, contact) for k in range(N)]
        if family.periodic:
            mats = compile_sweep(basis, N + 2, _axial_open_periodic(h, g), steps,
                                 _axial_close_periodic(h, g))
        else:
            mats = compile_sweep(basis, N + 1, _identity_open, steps, _axial_close_open(h))
    elif geometry == DIAGONAL:
        if params.edge_weights is not None:
            raise ValueError("edge weights are only supported in the axial geometry")
        steps = []
        for start in (0, 1):
            for a in range(start, N, 2):
                if a == N - 1:
                    if not family.periodic or N == 1:
                        continue
                    steps.append(_diagonal_tile(a, 0, 1, params, family))
                else:
                    steps.append(_diagonal_tile(a, a + 1, 0, params, family))
        mats = compile_sweep(basis, N, _identity_open, steps, _identity_open)
    else:
        raise ValueError(f"unknown geometry {geometry}")
    meta = _meta(basis, params, geometry, "PlainRow")
    return ChainOperator(basis, mats, meta)


def _meta(basis, params: ModelParams, geometry, kind):
    sec = basis.sector
    z = sec.twist_value(params.loop)
    return {
        "family": basis.family.kind.value,
        "boundary": basis.family.boundary.value,
        "N": basis.N,
        "sector": sec.tag(),
        "K": params.K,
        "w": params.w,
        "mu": params.mu if params.contact_on(geometry) else None,
        "n": [params.loop.n.real, params.loop.n.imag],
        "z": [z.real, z.imag],
        "geometry": geometry,
        "kind": kind,
    }


# ---------------------------------------------------------------------------
# defect line by auxiliary-strand sweep

def defect_line_levels(basis: SectorBasis, variant: str = "Over"):
    """Sweep of a closed defect line around the cylinder, crossing every strand.

    Each crossing splits per the over/under rule: the pass-through smoothing
    gets (-q)^(-1/2) for an over-crossing and the turn-back smoothing
    (-q)^(1/2); empty sites are transparent.
    """
    if not basis.family.periodic:
        raise OpenBoundaryUnsupported("the closed defect line needs a periodic family")
    N = basis.N
    alpha = basis.params.sqrt_mq
    if variant == "Under":
        alpha = 1 / alpha
    elif variant != "Over":
        raise ValueError(variant)
    a, g = N, N + 1

    def opener(st):
        st.cup(a, g, 0)
        return [(st, 1.0)]

    def crossing(k):
        def step(st):
            if st.s[k] == EMPTY:
                return [(st, 1.0)]
            out = []
            s2 = st.copy()
            s2.relabel(_swapped(len(st.s), k, a), [0] * len(st.s))
            out.append((s2, 1 / alpha))
            if st.join(a, k):
                st.cup(k, a)
                out.append((st, alpha))
            return out
        return step

    def closer(st):
        if st.join(a, g, 1):
            return [(st, 1.0)]
        return []

    return compile_sweep(basis, N + 2, opener, [crossing(k) for k in range(N)], closer)


def defect_line_operator(basis: SectorBasis, variant: str = "Over") -> ChainOperator:
    meta = {"kind": "DefectLine" + variant, "N": basis.N, "sector": basis.sector.tag()}
    return ChainOperator(basis, defect_line_levels(basis, variant), meta)


def build_defect_row(family: AlgebraFamily, N: int, sector: Sector, params: ModelParams,
                     geometry: str = AXIAL, variant: str = "Over") -> ChainOperator:
    """Plain row followed by a horizontal defect line crossing it."""
    if not family.periodic:
        raise OpenBoundaryUnsupported("defect rows need periodic boundary conditions")
    plain = build_row_transfer(family, N, sector, params, geometry)
    line = defect_line_levels(plain.basis, variant)
    mats = list(plain.levels) + line
    meta = _meta(plain.basis, params, geometry, "DefectRow" + variant)
    return ChainOperator(plain.basis, mats, meta)


def seam_twist(q: complex, z: complex | None = None, branch: int = 1) -> complex:
    """Effective twist of the one-leg defect sector: z1 = (-q)^(1/2) z or z2 = (-q)^(-1/2) z."""
    from .params import minus_q_sqrt
    z = q if z is None else z
    a = minus_q_sqrt(q)
    if branch == 1:
        return a * z
    if branch == 2:
        return z / a
    raise ValueError("branch must be 1 or 2")


def build_seam_transfer(family: AlgebraFamily, N: int, params: ModelParams, z: complex | None = None,
                        branch: int = 1, geometry: str = AXIAL) -> ChainOperator:
    """Transfer matrix of the defect Hilbert space (vertical defect line).

    The sector has one through-line and non-contractible windings weighted by
    the effective twist chosen by ``branch``.
    """
    if not family.periodic or family.crossings:
        raise IncompatibleSector("the seam sector needs a periodic planar family")
    if not family.dilute and N % 2 == 0:
        raise IncompatibleSector("one through-line needs odd N in a dense family")
    twist = seam_twist(params.loop.q, z, branch)
    sector = Sector.seam(twist)
    op = build_row_transfer(family, N, sector, params, geometry)
    op.meta["kind"] = "SeamRow"
    op.meta["branch"] = branch
    return op
