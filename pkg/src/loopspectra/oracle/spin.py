"""O(n) vector representation for integer n.

Site labels are 1..n for an occupied site and 0 for an empty one (dilute
chains only).  Operators are built as sparse matrices on the full tensor
product and handed out dense when small enough.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionTooLarge, InvalidGenerator, NonIntegerN
from ..params import minus_q_sqrt, q_from_n

DENSE_LIMIT = 4096


def _as_int_n(n) -> int:
    if isinstance(n, (int, np.integer)):
        k = int(n)
    else:
        z = complex(n)
        k = int(round(z.real))
        if abs(z - k) > 1e-12:
            raise NonIntegerN(f"n={n} is not an integer")
    if k < 1:
        raise NonIntegerN(f"n={n} must be a positive integer")
    return k


class SpinChain:
    """Tensor-product space [1]^N (dense) or ([] + [1])^N (dilute)."""

    def __init__(self, n, N: int, dilute: bool = False, q: complex | None = None,
                 max_dim: int = 1_000_000):
        self.n = _as_int_n(n)
        self.N = N
        self.dilute = dilute
        self.labels = list(range(0 if dilute else 1, self.n + 1))
        self.d = len(self.labels)
        self.dim = self.d ** N
        if self.dim > max_dim:
            raise DimensionTooLarge(f"spin space of dimension {self.dim}")
        self.q = complex(q) if q is not None else q_from_n(self.n)
        if abs(self.q + 1 / self.q - self.n) > 1e-10:
            raise ValueError("q + 1/q must equal n")
        # digits[i, k] = label of site k in basis state i (site 0 most significant)
        idx = np.arange(self.dim)
        digits = np.empty((self.dim, N), dtype=np.int64)
        for k in range(N - 1, -1, -1):
            digits[:, k] = idx % self.d
            idx = idx // self.d
        self.digits = digits
        self.offset = 0 if dilute else 1
        self.powers = self.d ** np.arange(N - 1, -1, -1)

    # state <-> index
    def index(self, state) -> int:
        return int(sum((a - self.offset) * p for a, p in zip(state, self.powers)))

    def state(self, i: int) -> tuple:
        return tuple(int(x) + self.offset for x in self.digits[i])

    def vector(self, terms: dict) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        for st, c in terms.items():
            v[self.index(st)] += c
        return v

    def terms(self, v: np.ndarray, tol: float = 1e-12) -> dict:
        return {self.state(i): v[i] for i in np.flatnonzero(np.abs(v) > tol)}

    # generators
    def _pair(self, i: int):
        if not 1 <= i <= self.N:
            raise InvalidGenerator(f"index {i} outside 1..{self.N}")
        return i - 1, i % self.N

    def e(self, i: int) -> sp.csr_matrix:
        a, b = self._pair(i)
        da, db = self.digits[:, a], self.digits[:, b]
        ok = da == db
        if self.dilute:
            ok &= da != 0
        cols = np.flatnonzero(ok)
        base = cols - da[cols] * self.powers[a] - db[cols] * self.powers[b]
        rows, cc = [], []
        for c in self._occupied_digits():
            rows.append(base + c * (self.powers[a] + self.powers[b]))
            cc.append(cols)
        rows = np.concatenate(rows)
        cc = np.concatenate(cc)
        return sp.csr_matrix((np.ones(len(rows), dtype=complex), (rows, cc)),
                             shape=(self.dim, self.dim))

    def _occupied_digits(self):
        return range(1, self.d) if self.dilute else range(self.d)

    def swap(self, i: int) -> sp.csr_matrix:
        a, b = self._pair(i)
        da, db = self.digits[:, a], self.digits[:, b]
        cols = np.arange(self.dim)
        rows = cols + (db - da) * self.powers[a] + (da - db) * self.powers[b]
        return sp.csr_matrix((np.ones(self.dim, dtype=complex), (rows, cols)),
                             shape=(self.dim, self.dim))

    def tau(self, inverse: bool = False) -> sp.csr_matrix:
        # tau |a_1 ... a_N> = |a_N a_1 ... a_{N-1}>
        shift = 1 if not inverse else -1
        moved = np.roll(self.digits, shift, axis=1)
        rows = moved @ self.powers
        cols = np.arange(self.dim)
        return sp.csr_matrix((np.ones(self.dim, dtype=complex), (rows, cols)),
                             shape=(self.dim, self.dim))

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dim, dtype=complex, format="csr")

    def occupied_projector(self, k: int) -> sp.csr_matrix:
        diag = (self.digits[:, k] != 0).astype(complex)
        return sp.diags(diag, format="csr")

    def D_word(self, variant: str = "Over") -> sp.csr_matrix:
        """D from the translation-and-Temperley-Lieb word (dense chains only)."""
        if self.dilute:
            raise InvalidGenerator("the plain word formula is for dense chains; use D_split")
        alpha = minus_q_sqrt(self.q)
        q = self.q
        if variant == "Under":
            alpha, q = 1 / alpha, 1 / q
        N = self.N
        one = self.identity()
        right = one
        for j in range(1, N):
            right = (one - q * self.e(j)) @ right
        left = one
        for j in range(N - 1, 0, -1):
            left = (one - self.e(j) / q) @ left
        return (alpha ** (-N) * self.tau() @ right + alpha ** N * left @ self.tau(True)).tocsr()

    def D_split(self, variant: str = "Over") -> sp.csr_matrix:
        """D as a closed line crossing every site, each crossing split in two.

        The auxiliary line carries a label 1..n; on an occupied site it either
        exchanges labels with the site (weight (-q)^(-1/2)) or contracts with it
        and re-emits a pair (weight (-q)^(1/2)); empty sites are transparent.
        """
        alpha = minus_q_sqrt(self.q)
        if variant == "Under":
            alpha = 1 / alpha
        N = self.N
        total = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for c in range(1, self.n + 1):
            # rows: (aux label, spin index) flattened as aux * dim + i
            vecs = {c: self.identity()}
            for k in range(N):
                new: dict = {}
                for a, M in vecs.items():
                    for a2, M2 in self._cross(k, a, alpha):
                        term = M2 @ M
                        new[a2] = term if a2 not in new else new[a2] + term
                vecs = new
            if c in vecs:
                total = total + vecs[c]
        return total.tocsr()

    def _cross(self, k: int, a: int, alpha):
        """(aux label after, matrix on the chain) for one crossing at site k."""
        dk = self.digits[:, k]
        p = self.powers[k]
        out = []
        cols_empty = np.flatnonzero(dk == 0) if self.dilute else np.array([], dtype=int)
        if len(cols_empty):
            out.append((a, sp.csr_matrix((np.ones(len(cols_empty), dtype=complex),
                                          (cols_empty, cols_empty)), shape=(self.dim,) * 2)))
        occupied = np.flatnonzero(dk != 0) if self.dilute else np.arange(self.dim)
        labels = dk + self.offset
        # exchange: site label b goes onto the line, line label a onto the site
        for b in range(1, self.n + 1):
            cols = occupied[labels[occupied] == b]
            if not len(cols):
                continue
            rows = cols + (a - b) * p
            out.append((b, sp.csr_matrix((np.full(len(cols), 1 / alpha, dtype=complex),
                                          (rows, cols)), shape=(self.dim,) * 2)))
        # contraction: delta(a, b) then a fresh pair (d on the site, d on the line)
        cols = occupied[labels[occupied] == a]
        if len(cols):
            for dlab in range(1, self.n + 1):
                rows = cols + (dlab - a) * p
                out.append((dlab, sp.csr_matrix((np.full(len(cols), alpha, dtype=complex),
                                                 (rows, cols)), shape=(self.dim,) * 2)))
        return out


def _word_matrix(chain: SpinChain, word) -> sp.csr_matrix:
    mat = chain.identity()
    for gen in reversed(list(word)):
        name = gen[0]
        if name == "e":
            g = chain.e(gen[1])
        elif name == "Pi":
            g = chain.swap(gen[1])
        elif name == "tau":
            g = chain.tau()
        elif name == "tau_inv":
            g = chain.tau(True)
        elif name in ("D", "Dbar"):
            variant = "Over" if name == "D" else "Under"
            g = chain.D_split(variant) if chain.dilute else chain.D_word(variant)
        else:
            raise InvalidGenerator(str(gen))
        mat = (g @ mat).tocsr()
    return mat


def spin_chain_reference(n, N: int, word, dilute: bool = False, q: complex | None = None,
                         max_dim: int = DENSE_LIMIT) -> np.ndarray:
    """Dense matrix of an operator word, written left to right as an algebra product.

    Generators: ('e', i), ('Pi', i), ('tau',), ('tau_inv',), ('D',), ('Dbar',).
    """
    chain = SpinChain(n, N, dilute, q)
    if chain.dim > max_dim:
        raise DimensionTooLarge(f"dense matrix of dimension {chain.dim} requested")
    return _word_matrix(chain, word).toarray()


def spin_defect_matrix(n, N: int, q: complex | None = None, variant: str = "Over",
                       dilute: bool = False) -> sp.csr_matrix:
    return SpinChain(n, N, dilute, q).D_split(variant)


def spin_rep_apply_D(state, n, q: complex | None = None, variant: str = "Over") -> dict:
    """Apply D to one basis state of the spin chain; labels 0 mark empty sites."""
    k = _as_int_n(n)
    state = tuple(int(a) for a in state)
    dilute = any(a == 0 for a in state)
    if any(a < 0 or a > k for a in state):
        raise ValueError(f"labels must lie in 0..{k}")
    chain = SpinChain(k, len(state), dilute, q)
    v = np.zeros(chain.dim, dtype=complex)
    v[chain.index(state)] = 1.0
    return chain.terms(chain.D_split(variant) @ v)


def loop_to_spin(chain: SpinChain, link_state) -> np.ndarray:
    """Spin vector of a link state without through-lines: a singlet sum per arc."""
    N = chain.N
    sites = link_state.sites
    if any(v <= -2 for v in sites):
        raise ValueError("through-lines have no singlet image")
    arcs = [(i, v) for i, v in enumerate(sites) if v >= 0 and i < v]
    v = np.zeros(chain.dim, dtype=complex)
    base = [0] * N
    labels = range(1, chain.n + 1)

    def rec(k, cur):
        if k == len(arcs):
            v[chain.index(cur)] += 1.0
            return
        i, j = arcs[k]
        for c in labels:
            cur[i] = cur[j] = c
            rec(k + 1, cur)
        cur[i] = cur[j] = 0

    if not chain.dilute and any(x < 0 for x in sites):
        raise ValueError("dense chains have no empty sites")
    rec(0, base)
    return v


__all__ = ["SpinChain", "spin_chain_reference", "spin_defect_matrix", "spin_rep_apply_D",
           "loop_to_spin"]
