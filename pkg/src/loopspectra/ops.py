"""Sparse operators on sector bases."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .algebra import LinkState, Strands, apply_word_to_strands
from .basis import SectorBasis
from .errors import DomainMismatch


@dataclass
class RowOperator:
    """Linear operator on the vector space of a sector basis.

    ``matrix`` is a scipy sparse matrix when the operator has been compiled;
    otherwise ``matvec`` gives the action.  ``meta`` holds the descriptive
    record used for hashing and serialisation.
    """

    basis: object
    matrix: sp.spmatrix | None = None
    matvec_fn: object = None
    meta: dict = field(default_factory=dict)
    dtype: type = complex

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] if self.matrix is not None else self.basis.dim

    @property
    def shape(self):
        return (self.dim, self.dim)

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ v
        return self.matvec_fn(v)

    def dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.toarray()
        eye = np.eye(self.dim, dtype=self.dtype)
        return np.column_stack([self.apply(eye[:, j]) for j in range(self.dim)])

    def __matmul__(self, other: "RowOperator") -> "RowOperator":
        _same_domain(self, other)
        if self.matrix is not None and other.matrix is not None:
            return RowOperator(self.basis, (self.matrix @ other.matrix).tocsr(),
                               meta={"kind": "Product"})
        return RowOperator(self.basis, matvec_fn=lambda v: self.apply(other.apply(v)),
                           meta={"kind": "Product"})


def _same_domain(a: RowOperator, b: RowOperator) -> None:
    if a.dim != b.dim:
        raise DomainMismatch(f"dimensions {a.dim} and {b.dim} differ")
    if a.basis is not None and b.basis is not None and a.basis is not b.basis:
        sa, sb = a.basis, b.basis
        if (sa.family, sa.N, sa.sector) != (sb.family, sb.N, sb.sector):
            raise DomainMismatch("operators act on different sectors")


def assemble(basis: SectorBasis, columns) -> sp.csr_matrix:
    """Sparse matrix from per-basis-state images.

    ``columns`` yields, for each basis index j, an iterable of
    (LinkState with perm, coefficient) pairs.
    """
    d = basis.rep_dim
    rows, cols, vals = [], [], []
    index = basis.index
    for j, image in enumerate(columns):
        for state, c in image:
            if c == 0:
                continue
            i = index[LinkState(state.sites, state.wind)]
            if d == 1:
                rows.append(i)
                cols.append(j)
                vals.append(c)
            else:
                block = basis.rho(state.perm) * c
                for a in range(d):
                    for b in range(d):
                        if block[a, b] != 0:
                            rows.append(i * d + a)
                            cols.append(j * d + b)
                            vals.append(block[a, b])
    n = basis.dim
    return sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(n, n))


def state_map_operator(basis: SectorBasis, fn, meta=None) -> RowOperator:
    """Operator whose action on each basis state is fn(state) -> {LinkState: coeff}."""
    mat = assemble(basis, (fn(s).items() for s in basis.states))
    return RowOperator(basis, mat, meta=dict(meta or {}))


def generator_operator(basis: SectorBasis, gen) -> RowOperator:
    ctx = basis.ctx

    def fn(state):
        st = Strands(ctx, state)
        if not apply_word_to_strands(st, gen):
            return {}
        out, c = st.finish()
        return {out: c}

    return state_map_operator(basis, fn, {"kind": "Generator", "gen": list(gen)})


def identity_operator(basis: SectorBasis) -> RowOperator:
    return RowOperator(basis, sp.identity(basis.dim, dtype=complex, format="csr"),
                       meta={"kind": "Identity"})


def linear_combination(terms, basis) -> RowOperator:
    """Sum of c * op over (c, op) pairs, all compiled."""
    mat = None
    for c, op in terms:
        part = op.matrix * c
        mat = part if mat is None else mat + part
    return RowOperator(basis, mat.tocsr(), meta={"kind": "Combination"})
