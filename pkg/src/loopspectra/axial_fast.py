"""Compiled axial transfer matrix for sectors without winding phases.

Covers the identity-like sector of the dilute families and every irrep
sector of the dilute Brauer family, which is what the critical-point and
exponent scans need.  The sweep structure (which link state goes where, and
with which monomial K^(a/2) w^b n^c mu^d) is built once per (L, sector) with
numba; numerical transfer matrices for any (n, K, w, mu) are then assembled
from the stored monomials without redoing the combinatorics.

Link states are packed four bits per slot: 0 empty, 1 + k for the two ends
of the k-th arc (arcs numbered by their left end), 9 + k for through-line k.
With the two auxiliary slots this allows up to 13 sites.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numba import njit

from .algebra import AlgebraFamily, Sector
from .basis import SectorBasis
from .errors import IncompatibleSector, SizeOverflow
from .ops import RowOperator
from .params import LoopParams

MAX_SITES = 13
_EMPTY = -1


@njit(cache=True)
def _decode(code, nslots, p, first):
    for i in range(8):
        first[i] = -1
    for i in range(nslots):
        c = (code >> (4 * i)) & 15
        if c == 0:
            p[i] = _EMPTY
        elif c <= 8:
            k = c - 1
            if first[k] < 0:
                first[k] = i
                p[i] = _EMPTY  # fixed when the partner is seen
            else:
                j = first[k]
                p[i] = j
                p[j] = i
        else:
            p[i] = -2 - (c - 9)


@njit(cache=True)
def _encode(p, nslots, lab, newlab):
    """Canonical code and the through-line relabelling packed in base 8."""
    for i in range(nslots):
        lab[i] = -1
    for i in range(8):
        newlab[i] = -1
    code = 0
    narc = 0
    nthr = 0
    for i in range(nslots):
        v = p[i]
        if v == _EMPTY:
            c = 0
        elif v >= 0:
            if v > i:
                lab[i] = narc
                c = 1 + narc
                narc += 1
            else:
                c = 1 + lab[v]
        else:
            old = -2 - v
            newlab[old] = nthr
            c = 9 + nthr
            nthr += 1
        code |= c << (4 * i)
    perm = 0
    for old in range(nthr):
        perm += newlab[old] << (3 * old)
    return code, perm


@njit(cache=True)
def _join(p, x, y):
    """Join the strand ends at x and y.  Returns -1 if forbidden, else loops closed."""
    vx = p[x]
    vy = p[y]
    if vx == _EMPTY or vy == _EMPTY:
        return -1
    closed = 0
    if vx >= 0 and vy >= 0:
        if vx == y:
            closed = 1
        else:
            p[vx] = vy
            p[vy] = vx
    elif vx >= 0:
        p[vx] = vy
    elif vy >= 0:
        p[vy] = vx
    else:
        return -1
    p[x] = _EMPTY
    p[y] = _EMPTY
    return closed


@njit(cache=True)
def _move(p, x, y):
    v = p[x]
    p[y] = v
    if v >= 0:
        p[v] = y
    p[x] = _EMPTY


@njit(cache=True)
def _swap(p, x, y):
    vx = p[x]
    vy = p[y]
    if vx >= 0 and vx != y:
        p[vx] = y
    if vy >= 0 and vy != x:
        p[vy] = x
    if vx == y:
        p[x] = y
        p[y] = x
    else:
        p[x] = vy
        p[y] = vx


@njit(cache=True)
def _emit(p, nslots, lab, newlab, table, keys, out_rows, out_cols, out_ex,
          out_perm, cnt, col, a, b, c, d):
    code, perm = _encode(p, nslots, lab, newlab)
    if code in table:
        r = table[code]
    else:
        r = len(table)
        table[code] = r
        keys.append(code)
    out_rows[cnt] = r
    out_cols[cnt] = col
    out_ex[cnt, 0] = a
    out_ex[cnt, 1] = b
    out_ex[cnt, 2] = c
    out_ex[cnt, 3] = d
    out_perm[cnt] = perm
    return cnt + 1


@njit(cache=True)
def _open_level(codes, nslots, h, g, table, keys):
    m = len(codes)
    rows = np.empty(2 * m, np.int32)
    cols = np.empty(2 * m, np.int32)
    ex = np.zeros((2 * m, 4), np.int8)
    perm = np.empty(2 * m, np.int32)
    p = np.empty(nslots, np.int64)
    first = np.empty(8, np.int64)
    lab = np.empty(nslots, np.int64)
    newlab = np.empty(8, np.int64)
    cnt = 0
    for j in range(m):
        _decode(codes[j], nslots, p, first)
        cnt = _emit(p, nslots, lab, newlab, table, keys, rows, cols, ex, perm, cnt,
                    j, 0, 0, 0, 0)
        p[h] = g
        p[g] = h
        cnt = _emit(p, nslots, lab, newlab, table, keys, rows, cols, ex, perm, cnt,
                    j, 0, 0, 0, 0)
    return rows[:cnt], cols[:cnt], ex[:cnt], perm[:cnt]


@njit(cache=True)
def _vertex_level(codes, nslots, k, h, crossing, contact, table, keys):
    m = len(codes)
    cap = 4 * m
    rows = np.empty(cap, np.int32)
    cols = np.empty(cap, np.int32)
    ex = np.zeros((cap, 4), np.int8)
    perm = np.empty(cap, np.int32)
    p = np.empty(nslots, np.int64)
    q = np.empty(nslots, np.int64)
    first = np.empty(8, np.int64)
    lab = np.empty(nslots, np.int64)
    newlab = np.empty(8, np.int64)
    cnt = 0
    for j in range(m):
        _decode(codes[j], nslots, p, first)
        ob = p[k] != _EMPTY
        ol = p[h] != _EMPTY
        if not ob and not ol:
            cnt = _emit(p, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                        cnt, j, 0, 0, 0, 0)
            q[:] = p
            q[k] = h
            q[h] = k
            cnt = _emit(q, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                        cnt, j, 2, 0, 0, 0)
        elif ob and not ol:
            cnt = _emit(p, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                        cnt, j, 2, 0, 0, 0)
            q[:] = p
            _move(q, k, h)
            cnt = _emit(q, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                        cnt, j, 2, 0, 0, 0)
        elif ol and not ob:
            cnt = _emit(p, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                        cnt, j, 2, 0, 0, 0)
            q[:] = p
            _move(q, h, k)
            cnt = _emit(q, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                        cnt, j, 2, 0, 0, 0)
        else:
            if crossing:
                cnt = _emit(p, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                            cnt, j, 4, 1, 0, 0)
            if contact:
                q[:] = p
                loops = _join(q, k, h)
                if loops >= 0:
                    q[k] = h
                    q[h] = k
                    cnt = _emit(q, nslots, lab, newlab, table, keys, rows, cols, ex,
                                perm, cnt, j, 4, 0, loops, 1)
                q[:] = p
                _swap(q, k, h)
                cnt = _emit(q, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                            cnt, j, 4, 0, 0, 1)
            q[:] = p
            loops = _join(q, k, h)
            if loops >= 0:
                cnt = _emit(q, nslots, lab, newlab, table, keys, rows, cols, ex, perm,
                            cnt, j, 2, 0, loops, 0)
    return rows[:cnt], cols[:cnt], ex[:cnt], perm[:cnt]


@njit(cache=True)
def _close_level(codes, nslots, h, g, table):
    m = len(codes)
    rows = np.empty(m, np.int32)
    cols = np.empty(m, np.int32)
    ex = np.zeros((m, 4), np.int8)
    perm = np.empty(m, np.int32)
    p = np.empty(nslots, np.int64)
    first = np.empty(8, np.int64)
    lab = np.empty(nslots, np.int64)
    newlab = np.empty(8, np.int64)
    cnt = 0
    missing = 0
    for j in range(m):
        _decode(codes[j], nslots, p, first)
        oh = p[h] != _EMPTY
        og = p[g] != _EMPTY
        loops = 0
        if oh and og:
            loops = _join(p, h, g)
            if loops < 0:
                continue
        elif oh or og:
            continue
        code, pm = _encode(p, nslots, lab, newlab)
        if code not in table:
            missing += 1
            continue
        rows[cnt] = table[code]
        cols[cnt] = j
        ex[cnt, 2] = loops
        perm[cnt] = pm
        cnt += 1
    return rows[:cnt], cols[:cnt], ex[:cnt], perm[:cnt], missing


@njit(cache=True)
def _to_array(lst):
    out = np.empty(len(lst), np.int64)
    for i in range(len(lst)):
        out[i] = lst[i]
    return out


def _state_code(state) -> int:
    """Engine code of a basis LinkState (auxiliary slots empty)."""
    code = 0
    lab = {}
    narc = 0
    for i, v in enumerate(state.sites):
        if v == _EMPTY:
            c = 0
        elif v >= 0:
            if v > i:
                lab[i] = narc
                c = 1 + narc
                narc += 1
            else:
                c = 1 + lab[v]
        else:
            c = 9 + (-2 - v)
        code |= c << (4 * i)
    return code


def _perm_tuple(code: int, m: int) -> tuple:
    return tuple((code >> (3 * a)) & 7 for a in range(m))


class AxialStructure:
    """Monomial-tagged sweep of the axial dilute transfer matrix in one sector."""

    def __init__(self, family: AlgebraFamily, L: int, sector: Sector, contact: bool = False,
                 crossings: bool | None = None):
        from numba import types
        from numba.typed import Dict, List

        if L > MAX_SITES:
            raise SizeOverflow(f"the packed encoding supports at most {MAX_SITES} sites")
        if not family.dilute or not family.periodic:
            raise IncompatibleSector("the compiled engine covers periodic dilute families")
        if not family.crossings and not sector.identity_like:
            raise IncompatibleSector("planar sectors with lines carry winding phases; "
                                     "use transfer.build_row_transfer")
        self.family = family
        self.L = L
        self.sector = sector
        self.basis = SectorBasis(family, L, sector)
        self.crossings = family.crossings if crossings is None else crossings
        self.contact = contact
        nslots = L + 2
        h, g = L, L + 1
        codes = np.array([_state_code(s) for s in self.basis.states], dtype=np.int64)
        base_table = Dict.empty(types.int64, types.int64)
        for i, c in enumerate(codes):
            base_table[c] = i
        levels = []
        table = Dict.empty(types.int64, types.int64)
        keys = List.empty_list(types.int64)
        levels.append(_open_level(codes, nslots, h, g, table, keys) + (len(keys), len(codes)))
        for k in range(L):
            cur = _to_array(keys)
            table = Dict.empty(types.int64, types.int64)
            keys = List.empty_list(types.int64)
            out = _vertex_level(cur, nslots, k, h, self.crossings, contact, table, keys)
            levels.append(out + (len(keys), len(cur)))
        cur = _to_array(keys)
        rows, cols, ex, perm, missing = _close_level(cur, nslots, h, g, base_table)
        if missing:
            raise AssertionError(f"{missing} closed states fall outside the sector basis")
        levels.append((rows, cols, ex, perm, len(codes), len(cur)))
        self.levels = levels
        m = sector.lines
        self._rho_cache = {}
        self.m = m

    @property
    def dim(self) -> int:
        return self.basis.dim

    def nnz(self) -> int:
        return sum(len(lv[0]) for lv in self.levels)

    def _rho_table(self, perm_codes):
        uniq, inv = np.unique(perm_codes, return_inverse=True)
        mats = np.stack([self.basis.rho(_perm_tuple(int(c), self.m)) for c in uniq])
        return mats, inv

    def level_matrices(self, loop: LoopParams, K: float, w: float = 0.0, mu: float = 1.0):
        n = complex(loop.n)
        real = abs(n.imag) < 1e-300
        dtype = float if real else complex
        nval = n.real if real else n
        sqK = np.sqrt(K)
        powK = np.array([sqK ** a for a in range(5)])
        mats = []
        d = self.basis.rep_dim
        for rows, cols, ex, perm, nr, nc in self.levels:
            vals = (powK[ex[:, 0]] * np.where(ex[:, 1] > 0, w, 1.0)
                    * np.where(ex[:, 3] > 0, mu, 1.0)).astype(dtype)
            vals = vals * np.where(ex[:, 2] > 0, nval, 1.0)
            keep = vals != 0
            if d == 1:
                mats.append(sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(nr, nc)))
                continue
            rho, inv = self._rho_table(perm[keep])
            blocks = rho[inv] * vals[keep][:, None, None]
            ia = np.arange(d)
            R = (rows[keep].astype(np.int64)[:, None, None] * d + ia[None, :, None])
            C = (cols[keep].astype(np.int64)[:, None, None] * d + ia[None, None, :])
            R, C = np.broadcast_arrays(R, C)
            mats.append(sp.csr_matrix((blocks.ravel(), (R.ravel(), C.ravel())),
                                      shape=(nr * d, nc * d)))
        return mats

    def operator(self, loop: LoopParams, K: float, w: float = 0.0, mu: float = 1.0) -> RowOperator:
        from .transfer import ChainOperator
        mats = self.level_matrices(loop, K, w, mu)
        basis = self.basis.with_params(loop)
        meta = {"family": self.family.kind.value, "boundary": self.family.boundary.value,
                "N": self.L, "sector": self.sector.tag(), "K": K, "w": w,
                "mu": mu if self.contact else None, "n": [loop.n.real, loop.n.imag],
                "geometry": "Axial", "kind": "PlainRow", "engine": "compiled"}
        return ChainOperator(basis, mats, meta)
