"""Exact partition functions of small cylinder patches by direct enumeration.

The patch is a W x H square lattice, periodic in the horizontal direction,
with every vertical edge below the first row and above the last row empty.
Every even-degree edge subset is visited, each vertex of degree four is
resolved as a crossing (weight w) or, when contact tiles are on, as one of
the two non-crossing pairings (weight mu), and loops are counted with a
union-find that also tracks how often each loop crosses the seam.

An optional closed defect curve runs through the faces of the patch.  Every
occupied edge it crosses is split in the two smoothings of the over/under
rule and all resolutions are summed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import CapExceeded
from ..params import LoopParams

B, LEFT, T, R = 0, 1, 2, 3
MOVES = {"R": (1, 0), "L": (-1, 0), "U": (0, 1), "D": (0, -1)}


@dataclass(frozen=True)
class DefectPath:
    """Closed curve on the faces of the patch.

    Face (x, y) sits to the right of vertex column x, between rows y and y+1
    (y = -1 is below the first row, y = H-1 above the last).  ``moves`` is a
    string over R, L, U, D.
    """

    start: tuple
    moves: str
    variant: str = "Over"


@dataclass
class LatticePatch:
    W: int
    H: int
    n: complex = 1.0
    K: float = 1.0
    w: float = 0.0
    mu: float | None = None
    crossings: bool = False
    edge_K: dict = field(default_factory=dict)
    defect: DefectPath | None = None
    nc_weight: complex | None = None
    cap: int = 20

    @property
    def loop(self) -> LoopParams:
        return LoopParams.from_n(self.n)

    def edge_weight(self, edge) -> float:
        return self.edge_K.get(edge, self.K)


# ---------------------------------------------------------------------------
# union-find with seam parity

class _Loops:
    __slots__ = ("parent", "par", "closed")

    def __init__(self, size):
        self.parent = list(range(size))
        self.par = [0] * size
        self.closed = []

    def find(self, a):
        parent, par = self.parent, self.par
        p = 0
        root = a
        while parent[root] != root:
            p ^= par[root]
            root = parent[root]
        # compress
        cur, acc = a, p
        while parent[cur] != root and parent[cur] != cur:
            nxt = parent[cur]
            step = par[cur]
            parent[cur] = root
            par[cur] = acc
            acc ^= step
            cur = nxt
        return root, p

    def link(self, a, b, parity):
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            self.closed.append(pa ^ pb ^ parity)
            return
        self.parent[ra] = rb
        self.par[ra] = pa ^ pb ^ parity


# ---------------------------------------------------------------------------
# geometry

def _vertex(W, x, y):
    return y * W + (x % W)


def _edges(W, H):
    """All interior edges as (name, port_u, port_v, parity)."""
    out = []
    for y in range(H):
        for x in range(W):
            u = _vertex(W, x, y) * 4 + R
            v = _vertex(W, x + 1, y) * 4 + LEFT
            out.append((("h", x, y), u, v, 1 if x == W - 1 else 0))
    for y in range(H - 1):
        for x in range(W):
            u = _vertex(W, x, y) * 4 + T
            v = _vertex(W, x, y + 1) * 4 + B
            out.append((("v", x, y), u, v, 0))
    return out


def _seam_count(W, x1, x2):
    s = W - 0.25
    return math.floor((x2 - s) / W) - math.floor((x1 - s) / W)


def _defect_crossings(patch: LatticePatch):
    """Crossed edges in order: (edge, left_is_u, x position) plus closing shift."""
    W, H = patch.W, patch.H
    path = patch.defect
    X, y = path.start
    X = float(X) + 0.5
    if not -1 <= y <= H - 1:
        raise ValueError("defect starts outside the patch")
    crossings = []
    for m in path.moves:
        dx, dy = MOVES[m]
        if dx:
            col = int(math.floor(X + 0.5)) if dx > 0 else int(math.floor(X - 0.5))
            col_pos = X + 0.5 * dx
            if 0 <= y <= H - 2:
                crossings.append((("v", col % W, y), dx < 0, col_pos))
            X += dx
        else:
            ny = y + dy
            if not -1 <= ny <= H - 1:
                raise ValueError("defect leaves the patch")
            row = ny if dy > 0 else y
            x = int(math.floor(X)) % W
            crossings.append((("h", x, row), dy > 0, X))
            y = ny
    start_x = float(path.start[0]) + 0.5
    if y != path.start[1] or abs((X - start_x) % W) > 1e-9:
        raise ValueError("defect path is not closed")
    names = [c[0] for c in crossings]
    if len(set(names)) != len(names):
        raise ValueError("defect path crosses an edge twice")
    return crossings, X - start_x


# ---------------------------------------------------------------------------
# enumeration

def _configurations(W, H):
    """Yield (occupied edge set) for all even-degree subgraphs of the patch."""
    vbits_all = list(itertools.product((0, 1), repeat=W))

    def rows(y, below):
        tops = vbits_all if y < H - 1 else [(0,) * W]
        for top in tops:
            p = [(below[x] + top[x]) % 2 for x in range(W)]
            if sum(p) % 2:
                continue
            for h_last in (0, 1):
                h = [0] * W
                prev = h_last
                for x in range(W):
                    h[x] = (prev + p[x]) % 2
                    prev = h[x]
                if h[W - 1] != h_last:
                    continue
                yield top, h

    def rec(y, below, acc):
        if y == H:
            yield acc
            return
        for top, h in rows(y, below):
            occ = acc + [("h", x, y) for x in range(W) if h[x]]
            occ += [("v", x, y) for x in range(W) if top[x]] if y < H - 1 else []
            yield from rec(y + 1, top, occ)

    yield from rec(0, (0,) * W, [])


def enumerate_Z(patch: LatticePatch, symbolic: bool = False):
    """Partition function of the patch.

    With ``symbolic`` the result is a dict mapping exponent tuples
    (n, K, w, mu, alpha) to integer counts, where alpha = (-q)^(1/2) and
    all edges carry the same K; otherwise a complex number.
    """
    W, H = patch.W, patch.H
    if W * H > patch.cap:
        raise CapExceeded(f"{W * H} vertices exceed the cap of {patch.cap}")
    edges = _edges(W, H)
    by_name = {e[0]: e for e in edges}
    nverts = W * H
    loop = patch.loop
    n = complex(patch.n)
    ncw = n if patch.nc_weight is None else complex(patch.nc_weight)
    alpha = loop.sqrt_mq
    crossings, shift = ([], 0.0)
    if patch.defect is not None:
        crossings, shift = _defect_crossings(patch)
        if patch.defect.variant == "Under":
            alpha = 1 / alpha
        elif patch.defect.variant != "Over":
            raise ValueError(patch.defect.variant)
    contact = patch.mu is not None
    crossing_on = patch.crossings and patch.w != 0
    total = 0j
    poly: dict = {}

    for occ in _configurations(W, H):
        occ_set = set(occ)
        degree = [0] * (nverts * 4)
        for name in occ:
            _, u, v, _ = by_name[name]
            degree[u] = degree[v] = 1
        base_w = 1.0
        for name in occ:
            base_w *= patch.edge_weight(name)
        # vertex choices
        fixed = []
        choices = []
        for vtx in range(nverts):
            ports = [vtx * 4 + p for p in range(4) if degree[vtx * 4 + p]]
            if len(ports) == 2:
                fixed.append((ports[0], ports[1]))
            elif len(ports) == 4:
                opts = []
                b, l, t, r = (vtx * 4 + p for p in range(4))
                if crossing_on:
                    opts.append((((b, t), (l, r)), "w"))
                if contact:
                    opts.append((((b, l), (t, r)), "mu"))
                    opts.append((((b, r), (l, t)), "mu"))
                if not opts:
                    break
                choices.append(opts)
        else:
            cut = [c for c in crossings if c[0] in occ_set]
            _accumulate(patch, W, nverts, edges, occ_set, fixed, choices, cut, crossings,
                        shift, base_w, n, ncw, alpha, symbolic, poly)
            if not symbolic:
                total += poly.pop("numeric", 0j)
    if symbolic:
        return {k: v for k, v in poly.items() if v}
    return total


def _segment_parities(W, all_cross, cut, shift):
    """Seam parity of the defect between consecutive occupied crossings."""
    pos = [c[2] for c in cut]
    m = len(pos)
    out = []
    for i in range(m):
        x1 = pos[i]
        x2 = pos[(i + 1) % m] + (shift if i == m - 1 else 0.0)
        out.append(abs(_seam_count(W, x1, x2)) % 2)
    return out


def _accumulate(patch, W, nverts, edges, occ_set, fixed, choices, cut, all_cross, shift,
                base_w, n, ncw, alpha, symbolic, poly):
    cut_names = {c[0]: (k, c[1]) for k, c in enumerate(cut)}
    m = len(cut)
    # node ids: ports 0..4V-1, then D- and D+ of each occupied crossing
    dminus = [4 * nverts + 2 * k for k in range(m)]
    dplus = [4 * nverts + 2 * k + 1 for k in range(m)]
    size = 4 * nverts + 2 * m
    static = list((a, b, 0) for a, b in fixed)
    halves = {}
    for name, u, v, parity in edges:
        if name not in occ_set:
            continue
        if name in cut_names:
            # the seam point sits on the half next to the right end of h(W-1, y)
            halves[name] = ((u, 0), (v, parity))
        else:
            static.append((u, v, parity))
    seg_par = _segment_parities(W, all_cross, cut, shift) if m else []
    for k in range(m):
        static.append((dplus[k], dminus[(k + 1) % m], seg_par[k]))
    free_loop_parity = None
    if patch.defect is not None and m == 0:
        start = float(patch.defect.start[0]) + 0.5
        free_loop_parity = abs(_seam_count(W, start, start + shift)) % 2
    nK = len(occ_set)
    for combo in itertools.product(*choices) if choices else [()]:
        wcount = sum(1 for _, tag in combo if tag == "w")
        mucount = len(combo) - wcount
        pairs = list(static)
        for (p1, p2), _ in combo:
            pairs.append((p1[0], p1[1], 0))
            pairs.append((p2[0], p2[1], 0))
        for res in itertools.product((0, 1), repeat=m):
            uf = _Loops(size)
            for a, b, p in pairs:
                uf.link(a, b, p)
            na = 0
            for k, (name, _, _) in enumerate(cut):
                (pu, par_u), (pv, par_v) = halves[name]
                left_is_u = cut_names[name][1]
                left, right = ((pu, par_u), (pv, par_v)) if left_is_u else ((pv, par_v), (pu, par_u))
                if res[k] == 0:
                    # join each over end to its counterclockwise neighbour
                    uf.link(dplus[k], left[0], left[1])
                    uf.link(dminus[k], right[0], right[1])
                    na += 1
                else:
                    uf.link(dplus[k], right[0], right[1])
                    uf.link(dminus[k], left[0], left[1])
                    na -= 1
            closed = list(uf.closed)
            if free_loop_parity is not None:
                closed.append(free_loop_parity)
            n_contr = sum(1 for p in closed if p == 0)
            n_nc = len(closed) - n_contr
            if symbolic:
                if n_nc and ncw != n:
                    raise ValueError("symbolic mode needs the default non-contractible weight")
                key = (n_contr + n_nc, nK, wcount, mucount, na)
                poly[key] = poly.get(key, 0) + 1
            else:
                val = base_w * n ** n_contr * ncw ** n_nc * alpha ** na
                if wcount:
                    val *= patch.w ** wcount
                if mucount:
                    val *= patch.mu ** mucount
                poly["numeric"] = poly.get("numeric", 0j) + val


def evaluate(poly: dict, n, K, w=0.0, mu=1.0, alpha=1.0) -> complex:
    return sum(c * n ** a * K ** b * w ** cw * mu ** d * alpha ** e
               for (a, b, cw, d, e), c in poly.items())


def poly_string(poly: dict) -> str:
    """Render as sum_j c_j * n^a_j * K^b_j (with w, mu, alpha factors when present)."""
    terms = []
    for key in sorted(poly):
        a, b, cw, d, e = key
        parts = [str(poly[key]), f"n^{a}", f"K^{b}"]
        if cw:
            parts.append(f"w^{cw}")
        if d:
            parts.append(f"mu^{d}")
        if e:
            parts.append(f"alpha^{e}")
        terms.append(" * ".join(parts))
    return " + ".join(terms) if terms else "0"


# ---------------------------------------------------------------------------
# transfer-matrix route for the same patch

def transfer_Z(patch: LatticePatch) -> complex:
    """<empty| T_H ... T_1 |empty> with per-row edge weights and an optional defect row."""
    from ..algebra import AlgebraFamily, Boundary, Kind, LinkState, EMPTY, Sector
    from ..basis import SectorBasis
    from ..transfer import AXIAL, EdgeWeights, ModelParams, build_row_transfer, defect_line_operator

    W, H = patch.W, patch.H
    kind = Kind.DiluteBrauer if patch.crossings else Kind.DiluteTL
    family = AlgebraFamily(kind, Boundary.Periodic)
    loop = patch.loop
    if patch.nc_weight is not None and abs(patch.nc_weight - loop.n) > 1e-12:
        raise ValueError("the identity sector weighs winding loops by n")
    basis = SectorBasis(family, W, Sector.identity(), loop)
    empty = LinkState((EMPTY,) * W, (0,) * W)
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.index[empty]] = 1.0
    defect_row = None
    if patch.defect is not None:
        path = patch.defect
        if set(path.moves) - {"R"} and set(path.moves) - {"L"}:
            raise ValueError("the transfer route supports horizontal defect loops only")
        if len(path.moves) != W:
            raise ValueError("the defect loop must wrap once")
        defect_row = path.start[1]
    if defect_row == -1:
        v = defect_line_operator(basis, path.variant).apply(v)
    for y in range(H):
        below = tuple(patch.edge_weight(("v", x, y - 1)) if y > 0 else 1.0 for x in range(W))
        above = tuple(patch.edge_weight(("v", x, y)) if y < H - 1 else 1.0 for x in range(W))
        right = tuple(patch.edge_weight(("h", x, y)) for x in range(W))
        mp = ModelParams(loop, K=patch.K, w=patch.w, mu=patch.mu if patch.mu is not None else 1.0,
                         contact=patch.mu is not None,
                         edge_weights=EdgeWeights(below, above, right))
        T_row = build_row_transfer(family, W, Sector.identity(), mp, AXIAL, basis=basis)
        v = T_row.apply(v)
        if defect_row == y:
            v = defect_line_operator(basis, path.variant).apply(v)
    return complex(v[basis.index[empty]])


def verify_topological_move(patch: LatticePatch, path1: DefectPath, path2: DefectPath) -> float:
    """Relative difference of the patch partition function with two defect curves."""
    from dataclasses import replace
    z1 = enumerate_Z(replace(patch, defect=path1))
    z2 = enumerate_Z(replace(patch, defect=path2))
    return abs(z1 - z2) / abs(z1)
