"""Defect operators: explicit words, closed-form eigenvalues, fusion and relatives."""
from __future__ import annotations

import cmath
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .algebra import (EMPTY, AlgebraFamily, Boundary, Context, Kind, LinkState,
                      Strands, apply_tile, apply_to_sum)
from .basis import SectorBasis
from .errors import DomainMismatch, OpenBoundaryUnsupported, PeriodicBoundaryUnsupported
from .ops import RowOperator, state_map_operator
from .params import LoopParams, minus_q_sqrt
from .transfer import ChainOperator, compile_sweep, _swapped


def _variant_constants(params: LoopParams, variant: str):
    alpha = params.sqrt_mq
    q = params.q
    if variant == "Under":
        return 1 / alpha, 1 / q
    if variant != "Over":
        raise ValueError(variant)
    return alpha, q


def _dense_kind(family: AlgebraFamily) -> AlgebraFamily:
    kind = Kind.Brauer if family.crossings else Kind.DenseTL
    return AlgebraFamily(kind, Boundary.Periodic)


def _compress(state: LinkState):
    occ = [i for i, v in enumerate(state.sites) if v != EMPTY]
    rank = {p: k for k, p in enumerate(occ)}
    sites = []
    for p in occ:
        v = state.sites[p]
        sites.append(rank[v] if v >= 0 else v)
    wind = tuple(state.wind[p] for p in occ)
    return occ, LinkState(tuple(sites), wind, state.perm)


def _expand(occ, N, state: LinkState) -> LinkState:
    sites = [EMPTY] * N
    wind = [0] * N
    for k, p in enumerate(occ):
        v = state.sites[k]
        sites[p] = occ[v] if v >= 0 else v
        wind[p] = state.wind[k]
    return LinkState(tuple(sites), tuple(wind), state.perm)


def _add(acc, vec, scale):
    for s, c in vec.items():
        acc[s] = acc.get(s, 0) + scale * c


def apply_D_word(state: LinkState, ctx: Context, variant: str = "Over") -> dict:
    """D on one link state via the translation-and-braid word.

    D = (-q)^(-m/2) tau (1 - q e_{m-1}) ... (1 - q e_1)
      + (-q)^(m/2) (1 - e_1/q) ... (1 - e_{m-1}/q) tau^{-1},
    with m the number of occupied sites; empty sites are transparent.
    """
    alpha, q = _variant_constants(ctx.params, variant)
    occ, cstate = _compress(state)
    m = len(occ)
    if m == 0:
        return {state: ctx.nc_weight}
    dctx = Context(_dense_kind(ctx.family), m, ctx.sector, ctx.params)
    v0 = {cstate: 1.0 + 0j}
    v = dict(v0)
    for j in range(1, m):
        ev = apply_to_sum(("e", j), v, dctx)
        _add(v, ev, -q)
    first = apply_to_sum(("tau",), v, dctx)
    v = apply_to_sum(("tau_inv",), v0, dctx)
    for j in range(m - 1, 0, -1):
        ev = apply_to_sum(("e", j), v, dctx)
        _add(v, ev, -1 / q)
    out: dict = {}
    _add(out, first, alpha ** (-m))
    _add(out, v, alpha ** m)
    N = ctx.N
    return {_expand(occ, N, s): c for s, c in out.items() if c != 0}


def build_D(basis: SectorBasis, variant: str = "Over") -> RowOperator:
    """Matrix of D (Over) or its mirror image (Under) on a periodic sector."""
    if not basis.family.periodic:
        raise OpenBoundaryUnsupported("use open_defect_d for open boundaries")
    ctx = basis.ctx
    op = state_map_operator(basis, lambda s: apply_D_word(s, ctx, variant),
                            {"kind": "D" + variant, "N": basis.N, "sector": basis.sector.tag()})
    return op


def defect_eigenvalue(r, s, q: complex, identity_like: bool = False, variant: str = "Over",
                      twist: complex | None = None) -> complex:
    """Eigenvalue of D on the standard module W_(r,s), or q + 1/q on <1,1>."""
    q = complex(q)
    if identity_like:
        return q + 1 / q
    alpha = minus_q_sqrt(q)
    if variant == "Under":
        alpha = 1 / alpha
    z = twist if twist is not None else cmath.exp(1j * cmath.pi * float(Fraction(s)))
    twor = int(2 * Fraction(r))
    return z * alpha ** twor + alpha ** (-twor) / z


def fuse_defects(j, D: RowOperator) -> RowOperator:
    """Spin-j defect from the recursion D^(j+1/2) = D^(j) D - D^(j-1/2)."""
    steps = int(2 * Fraction(j))
    eye = sp.identity(D.dim, dtype=complex, format="csr")
    prev, cur = eye, D.matrix.tocsr()
    if steps == 0:
        return RowOperator(D.basis, eye, meta={"kind": "Fused", "j": 0})
    for _ in range(steps - 1):
        prev, cur = cur, (cur @ D.matrix - prev).tocsr()
    return RowOperator(D.basis, cur, meta={"kind": "Fused", "j": str(Fraction(j))})


def chebyshev_weights(n: complex, kmax: int):
    """[1], [2], ... quantum integers as Chebyshev polynomials U_k(n/2)."""
    u = [1.0 + 0j, complex(n)]
    while len(u) < kmax + 1:
        u.append(n * u[-1] - u[-2])
    return u


def _jones_wenzl(st: Strands, slots, n) -> list:
    """Apply the Jones-Wenzl projector on the strands in ``slots``."""
    k = len(slots)
    if k <= 1:
        return [(st, 1.0)]
    u = chebyshev_weights(n, k)
    inner = _jones_wenzl(st, slots[:-1], n)
    out = list(inner)
    ratio = u[k - 2] / u[k - 1]
    a, b = slots[k - 2], slots[k - 1]
    for s1, w1 in inner:
        s2 = s1.copy()
        if not apply_tile(s2, "e", a, b, 0):
            continue
        for s3, w3 in _jones_wenzl(s2, slots[:-1], n):
            out.append((s3, -ratio * w1 * w3))
    return out


def fused_defect_line(basis: SectorBasis, j, variant: str = "Over") -> ChainOperator:
    """Spin-j defect built from 2j parallel defect lines and a Jones-Wenzl projector."""
    if not basis.family.periodic:
        raise OpenBoundaryUnsupported("closed defect lines need periodic boundaries")
    m = int(2 * Fraction(j))
    N = basis.N
    alpha = basis.params.sqrt_mq
    if variant == "Under":
        alpha = 1 / alpha
    aux = list(range(N, N + m))
    ghosts = list(range(N + m, N + 2 * m))
    n = basis.params.n

    def opener(st):
        for a, g in zip(aux, ghosts):
            st.cup(a, g, 0)
        return _jones_wenzl(st, aux, n)

    def crossing(site, a):
        def step(st):
            if st.s[site] == EMPTY:
                return [(st, 1.0)]
            out = []
            s2 = st.copy()
            s2.relabel(_swapped(len(st.s), site, a), [0] * len(st.s))
            out.append((s2, 1 / alpha))
            if st.join(a, site):
                st.cup(site, a)
                out.append((st, alpha))
            return out
        return step

    def closer(st):
        for a, g in zip(aux, ghosts):
            if not st.join(a, g, 1):
                return []
        return [(st, 1.0)]

    steps = [crossing(site, a) for site in range(N) for a in aux]
    mats = compile_sweep(basis, N + 2 * m, opener, steps, closer)
    return ChainOperator(basis, mats, {"kind": "FusedLine", "j": str(Fraction(j))})


def commutator_norm(A: RowOperator, B: RowOperator, probes: int = 4, seed: int = 0) -> float:
    """Max-norm of AB - BA (dense when small, random probes otherwise)."""
    if A.dim != B.dim:
        raise DomainMismatch("operators act on spaces of different dimension")
    if A.dim <= 4000 and A.matrix is not None and B.matrix is not None:
        C = (A.matrix @ B.matrix - B.matrix @ A.matrix)
        return float(abs(C).max()) if C.nnz else 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(probes):
        v = rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim)
        r = A.apply(B.apply(v)) - B.apply(A.apply(v))
        best = max(best, float(np.max(np.abs(r)) / np.max(np.abs(v))))
    return best


def open_defect_d(basis: SectorBasis) -> ChainOperator:
    """Open-boundary defect: an extra strand braided over and back under all sites, then traced.

    Implements (-1)^N Tr_aux g_N ... g_2 g_1 g_1 g_2 ... g_N with the auxiliary
    strand in position N+1 and g_i = (-q)^(1/2) + (-q)^(-1/2) e_i.  The sign
    undoes the framing factor of the 2N crossings, so the eigenvalue on W_r is
    q^(2r+1) + q^(-2r-1) for every N (it is +1 for N = 2).
    """
    if basis.family.periodic:
        raise PeriodicBoundaryUnsupported("open_defect_d needs an open family")
    N = basis.N
    alpha = basis.params.sqrt_mq
    A, G = N, N + 1
    # slot order: sites 0..N-1, then the auxiliary site at position N+1
    order = list(range(N, 0, -1)) + list(range(1, N + 1))

    def opener(st):
        st.cup(A, G, 0)
        return [(st, 1.0)]

    def braid(i):
        a, b = i - 1, i   # positions i, i+1 as slots (slot N is the aux site)

        def step(st):
            out = [(st.copy(), alpha)]
            if apply_tile(st, "e", a, b, 0):
                out.append((st, 1 / alpha))
            return out
        return step

    sign = (-1.0) ** N

    def closer(st):
        if st.join(A, G, 0):
            return [(st, sign)]
        return []

    steps = [braid(i) for i in order]
    mats = compile_sweep(basis, N + 2, opener, steps, closer)
    return ChainOperator(basis, mats, {"kind": "OpenDefect", "N": N})


def casimir_eigenvalue(r, q: complex) -> complex:
    k = int(2 * Fraction(r)) + 1
    q = complex(q)
    return q ** k + q ** (-k)


def brauer_crossing_limit(u, n: int) -> np.ndarray:
    """R-check(u) on [1] x [1] for integer n; u = inf gives the permutation."""
    dim = n * n
    P = np.zeros((dim, dim))
    E = np.zeros((dim, dim))
    for a in range(n):
        for b in range(n):
            P[b * n + a, a * n + b] = 1.0
    for a in range(n):
        for c in range(n):
            E[c * n + c, a * n + a] = 1.0
    eye = np.eye(dim)
    p_singlet = E / n
    p_anti = (eye - P) / 2
    p_sym = (eye + P) / 2 - E / n
    if u == np.inf or u == float("inf"):
        r1, r2 = 1.0, 1.0
    else:
        r1 = (u - 1j * np.pi) / (u + 1j * np.pi)
        r2 = ((n - 2) * u - 1j * np.pi) / ((n - 2) * u + 1j * np.pi)
    return p_singlet - r1 * p_anti + r1 * r2 * p_sym
