"""Link states, sectors and generator actions of the loop-model diagram algebras.

A link state on N sites is stored as ``LinkState(sites, wind, perm)``:

* ``sites[i] == EMPTY`` for an empty site, ``sites[i] == p >= 0`` if site i is
  joined to site p by an arc, and ``sites[i] == -2 - k`` if site i carries the
  k-th through-line (counted left to right).
* ``wind[i]`` is, for an arc end, the number of times the arc crosses the seam
  (between site N and site 1) when followed from i to its partner, rightward
  crossings counting +1.  It is only tracked in twisted periodic sectors of
  the planar families and is zero otherwise.
* ``perm`` records how through-lines were permuted relative to a basis state
  (crossing families only); basis states carry the identity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import cmath

from .errors import IncompatibleSector, IndexOutOfRange, InvalidGenerator
from .params import LoopParams
from .symmetric import check_partition

EMPTY = -1


class Kind(enum.Enum):
    DenseTL = "DenseTL"
    DiluteTL = "DiluteTL"
    Brauer = "Brauer"
    DiluteBrauer = "DiluteBrauer"


class Boundary(enum.Enum):
    Open = "Open"
    Periodic = "Periodic"


@dataclass(frozen=True)
class AlgebraFamily:
    kind: Kind
    boundary: Boundary = Boundary.Periodic

    @property
    def dilute(self) -> bool:
        return self.kind in (Kind.DiluteTL, Kind.DiluteBrauer)

    @property
    def crossings(self) -> bool:
        return self.kind in (Kind.Brauer, Kind.DiluteBrauer)

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.Periodic

    @classmethod
    def parse(cls, kind: str, boundary: str = "Periodic") -> "AlgebraFamily":
        return cls(Kind(kind), Boundary(boundary))

    def __str__(self):
        return f"{self.kind.value}/{self.boundary.value}"


@dataclass(frozen=True)
class Sector:
    """Sector label: 2r through-lines plus a twist or a symmetric-group irrep.

    ``s`` is the pseudomomentum (twist z = exp(i pi s)) of periodic planar
    sectors, ``lam`` the S_{2r} irrep of crossing families, ``identity_like``
    marks the sector without through-lines in which every non-contractible
    loop weighs n.  ``twist`` overrides exp(i pi s) with an arbitrary phase,
    which is how seam (defect Hilbert space) sectors are described.
    """

    r: Fraction = Fraction(0)
    s: Fraction | None = None
    lam: tuple[int, ...] | None = None
    identity_like: bool = False
    twist: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "r", Fraction(self.r))
        if self.r < 0 or (2 * self.r).denominator != 1:
            raise IncompatibleSector(f"r={self.r} is not a non-negative half-integer")
        if self.s is not None:
            object.__setattr__(self, "s", Fraction(self.s))
        if self.lam is not None:
            lam = check_partition(self.lam, self.lines) if self.lines else tuple(self.lam)
            if self.lines == 0 and lam:
                raise IncompatibleSector("nonempty partition for a sector without lines")
            object.__setattr__(self, "lam", lam)
        if self.identity_like and (self.r != 0 or self.s is not None or self.twist is not None):
            raise IncompatibleSector("identity-like sector has no lines and no twist")

    @property
    def lines(self) -> int:
        return int(2 * self.r)

    @classmethod
    def identity(cls) -> "Sector":
        return cls(identity_like=True)

    @classmethod
    def standard(cls, r, s=0) -> "Sector":
        return cls(r=Fraction(r), s=Fraction(s))

    @classmethod
    def brauer(cls, lam) -> "Sector":
        lam = tuple(lam)
        return cls(r=Fraction(sum(lam), 2), lam=lam)

    @classmethod
    def open(cls, r) -> "Sector":
        return cls(r=Fraction(r))

    @classmethod
    def seam(cls, twist: complex, r=Fraction(1, 2)) -> "Sector":
        return cls(r=Fraction(r), twist=complex(twist))

    def tag(self) -> str:
        if self.identity_like:
            return "<1,1>"
        if self.lam is not None:
            return "[" + "".join(str(x) for x in self.lam) + "]"
        if self.twist is not None:
            return f"r={self.r},z={self.twist.real:.12g}{self.twist.imag:+.12g}j"
        if self.s is not None:
            return f"({self.r},{self.s})"
        return f"r={self.r}"

    def twist_value(self, params: LoopParams) -> complex:
        if self.twist is not None:
            return self.twist
        if self.s is not None:
            return cmath.exp(1j * cmath.pi * float(self.s))
        return params.z

    def validate_for(self, family: AlgebraFamily, N: int) -> None:
        if self.lines > N:
            raise IncompatibleSector(f"{self.lines} through-lines on {N} sites")
        if not family.dilute and (N - self.lines) % 2:
            raise IncompatibleSector("dense families need N - 2r even")
        if family.crossings:
            if self.s is not None or self.twist is not None:
                raise IncompatibleSector("crossing families carry no pseudomomentum")
        else:
            if self.lam is not None:
                raise IncompatibleSector("irrep labels need a crossing family")
            if not family.periodic and (self.s is not None or self.twist is not None
                                        or self.identity_like):
                raise IncompatibleSector("open boundary has no twist")
            if self.lines > 0 and self.s is not None and self.twist is None:
                phase = cmath.exp(2j * cmath.pi * float(self.r * self.s))
                if abs(phase - 1) > 1e-12:
                    raise IncompatibleSector(
                        f"pseudomomentum s={self.s} not admissible for r={self.r}")


class LinkState(NamedTuple):
    sites: tuple
    wind: tuple
    perm: tuple = ()

    def encoding(self) -> str:
        toks = []
        for v in self.sites:
            if v == EMPTY:
                toks.append(".")
            elif v <= -2:
                toks.append(f"T{-2 - v}")
            else:
                toks.append(f"a{v}")
        return " ".join(toks)

    def winding_signature(self) -> str:
        return ",".join(str(w) for w in self.wind)

    @property
    def N(self) -> int:
        return len(self.sites)

    def through_positions(self) -> list[int]:
        return [i for i, v in enumerate(self.sites) if v <= -2]


def is_through(v: int) -> bool:
    return v <= -2


class Context:
    """Loop weights and bookkeeping switches for one (family, N, sector, q)."""

    __slots__ = ("family", "N", "sector", "params", "n", "twist", "track",
                 "phases", "labelled", "nc_weight")

    def __init__(self, family: AlgebraFamily, N: int, sector: Sector, params: LoopParams):
        sector.validate_for(family, N)
        self.family = family
        self.N = N
        self.sector = sector
        self.params = params
        self.n = complex(params.n)
        twist = sector.twist_value(params)
        self.twist = twist
        planar_periodic = family.periodic and not family.crossings
        self.track = planar_periodic and not sector.identity_like
        self.phases = self.track and sector.lines > 0
        self.labelled = family.crossings and sector.lines > 0
        self.nc_weight = twist + 1 / twist if self.track else self.n

    def loop_weight(self, winding: int) -> complex:
        if winding == 0:
            return self.n
        if abs(winding) != 1:
            raise AssertionError(f"loop winding {winding} impossible in a planar state")
        return self.nc_weight


class Strands:
    """Mutable strand configuration used while composing tiles.

    Slots beyond the N physical sites can host auxiliary strands (defect
    lines, the horizontal edge of an axial sweep, ...).
    """

    __slots__ = ("ctx", "s", "w", "tw", "perm", "coeff")

    def __init__(self, ctx: Context, state: LinkState, nslots: int | None = None):
        nslots = nslots or len(state.sites)
        extra = nslots - len(state.sites)
        self.ctx = ctx
        self.s = list(state.sites) + [EMPTY] * extra
        self.w = list(state.wind) + [0] * extra
        nlab = sum(1 for v in state.sites if v <= -2)
        self.tw = [0] * nlab
        self.perm = list(state.perm) if state.perm else list(range(nlab))
        self.coeff = 1.0 + 0j

    def copy(self) -> "Strands":
        new = Strands.__new__(Strands)
        new.ctx = self.ctx
        new.s = self.s[:]
        new.w = self.w[:]
        new.tw = self.tw[:]
        new.perm = self.perm[:]
        new.coeff = self.coeff
        return new

    # elementary moves; each returns False when the result vanishes
    def join(self, x: int, y: int, c: int = 0) -> bool:
        """Connect the strand ends at x and y; the connector crosses the seam c times (x to y)."""
        s, w = self.s, self.w
        vx, vy = s[x], s[y]
        if vx == EMPTY or vy == EMPTY:
            return False
        if vx >= 0 and vy >= 0:
            if vx == y:
                self.coeff *= self.ctx.loop_weight(c + w[y])
            else:
                val = -w[x] + c + w[y]
                s[vx], s[vy] = vy, vx
                w[vx], w[vy] = val, -val
        elif vx >= 0:
            self.tw[-2 - vy] += -c + w[x]
            s[vx] = vy
            w[vx] = 0
        elif vy >= 0:
            self.tw[-2 - vx] += c + w[y]
            s[vy] = vx
            w[vy] = 0
        else:
            return False
        s[x] = s[y] = EMPTY
        w[x] = w[y] = 0
        return True

    def cup(self, x: int, y: int, c: int = 0) -> bool:
        s = self.s
        if s[x] != EMPTY or s[y] != EMPTY:
            return False
        s[x], s[y] = y, x
        self.w[x], self.w[y] = c, -c
        return True

    def move(self, x: int, y: int, c: int = 0) -> bool:
        s, w = self.s, self.w
        v = s[x]
        if v == EMPTY or s[y] != EMPTY:
            return False
        s[y] = v
        if v >= 0:
            s[v] = y
            w[y] = w[x] - c
            w[v] += c
        else:
            self.tw[-2 - v] += c
            w[y] = 0
        s[x] = EMPTY
        w[x] = 0
        return True

    def relabel(self, newpos, crossing) -> None:
        """Move the content of every slot k to newpos[k] along a path crossing the seam crossing[k] times."""
        s, w = self.s, self.w
        ns = [EMPTY] * len(s)
        nw = [0] * len(s)
        for k, v in enumerate(s):
            if v == EMPTY:
                continue
            k2 = newpos[k]
            if v >= 0:
                ns[k2] = newpos[v]
                nw[k2] = w[k] - crossing[k] + crossing[v]
            else:
                ns[k2] = v
                self.tw[-2 - v] += crossing[k]
        self.s, self.w = ns, nw

    def occupied(self, x: int) -> bool:
        return self.s[x] != EMPTY

    def finish(self, N: int | None = None):
        """Canonicalise the first N slots; returns (LinkState, coefficient) or None."""
        ctx = self.ctx
        N = ctx.N if N is None else N
        s = self.s
        for k in range(N, len(s)):
            if s[k] != EMPTY:
                raise AssertionError("auxiliary slot left occupied")
        coeff = self.coeff
        sites = []
        rank = {}
        for k in range(N):
            v = s[k]
            if v <= -2:
                lab = -2 - v
                rank[lab] = len(rank)
                sites.append(-2 - rank[lab])
            else:
                sites.append(v)
        if ctx.phases and self.tw:
            total = sum(self.tw)
            if total:
                coeff *= ctx.twist ** (-total)
        wind = tuple(self.w[:N]) if ctx.track else (0,) * N
        perm = ()
        if ctx.labelled:
            perm = tuple(rank[p] for p in self.perm)
        return LinkState(tuple(sites), wind, perm), coeff


# ---------------------------------------------------------------------------
# generators

TILE_NAMES = ("empty", "pass_left", "pass_right", "cap", "cup",
              "shift_left", "shift_right", "pass_both", "e")


def _pair(ctx: Context, i: int):
    """Slots and seam count for the pair (i, i+1), 1-based i."""
    N = ctx.N
    if ctx.family.periodic:
        if not 1 <= i <= N:
            raise IndexOutOfRange(f"index {i} outside 1..{N}")
        a, b = i - 1, i % N
        return a, b, (1 if i == N else 0)
    if not 1 <= i <= N - 1:
        raise IndexOutOfRange(f"index {i} outside 1..{N - 1}")
    return i - 1, i, 0


def apply_tile(st: Strands, name: str, a: int, b: int, c: int = 0) -> bool:
    """Apply one two-site tile to slots a (left) and b (right) in place."""
    oa, ob = st.s[a] != EMPTY, st.s[b] != EMPTY
    if name == "e":
        return oa and ob and st.join(a, b, c) and st.cup(a, b, c)
    if name == "pass_both":
        return oa and ob
    if name == "empty":
        return not oa and not ob
    if name == "pass_left":
        return oa and not ob
    if name == "pass_right":
        return ob and not oa
    if name == "cap":
        return oa and ob and st.join(a, b, c)
    if name == "cup":
        return not oa and not ob and st.cup(a, b, c)
    if name == "shift_left":
        return ob and not oa and st.move(b, a, -c)
    if name == "shift_right":
        return oa and not ob and st.move(a, b, c)
    if name == "swap":
        st.relabel(_swap_map(len(st.s), a, b), _swap_cross(len(st.s), a, b, c))
        return True
    raise InvalidGenerator(name)


def _swap_map(m, a, b):
    pos = list(range(m))
    pos[a], pos[b] = b, a
    return pos


def _swap_cross(m, a, b, c):
    cr = [0] * m
    cr[a], cr[b] = c, -c
    return cr


def shift(st: Strands, N: int, direction: int = 1) -> None:
    """Translate the first N slots by one site (direction +1 right, -1 left)."""
    m = len(st.s)
    pos = list(range(m))
    cross = [0] * m
    for k in range(N):
        pos[k] = (k + direction) % N
    if direction == 1:
        cross[N - 1] = 1
    else:
        cross[0] = -1
    st.relabel(pos, cross)


def apply_word_to_strands(st: Strands, gen) -> bool:
    """Apply a generator id such as ('e', 1), ('tau',), ('Pi', 2), ('cap', 3)."""
    ctx = st.ctx
    name = gen[0]
    if name in ("tau", "tau_inv"):
        if not ctx.family.periodic:
            raise InvalidGenerator("translation needs a periodic family")
        shift(st, ctx.N, 1 if name == "tau" else -1)
        return True
    if len(gen) != 2:
        raise InvalidGenerator(str(gen))
    a, b, c = _pair(ctx, gen[1])
    if name == "e":
        if not ctx.family.dilute:
            return st.join(a, b, c) and st.cup(a, b, c)
        return apply_tile(st, "e", a, b, c)
    if name == "Pi":
        if not ctx.family.crossings:
            raise InvalidGenerator("Pi needs a crossing family")
        return apply_tile(st, "swap", a, b, c)
    if name in TILE_NAMES:
        if not ctx.family.dilute:
            raise InvalidGenerator(f"{name} is a dilute tile")
        return apply_tile(st, name, a, b, c)
    raise InvalidGenerator(str(gen))


def apply_generator(gen, state: LinkState, ctx: Context) -> dict:
    """Image of a single link state under one generator, as {LinkState: coeff}."""
    st = Strands(ctx, state)
    if not apply_word_to_strands(st, gen):
        return {}
    out, coeff = st.finish()
    return {out: coeff} if coeff != 0 else {}


def apply_to_sum(gen, vec: dict, ctx: Context) -> dict:
    """Apply a generator to a weighted state sum."""
    out: dict = {}
    for state, c in vec.items():
        for s2, c2 in apply_generator(gen, state, ctx).items():
            out[s2] = out.get(s2, 0) + c * c2
    return out


def make_context(family: AlgebraFamily, N: int, sector: Sector, params: LoopParams) -> Context:
    return Context(family, N, sector, params)
