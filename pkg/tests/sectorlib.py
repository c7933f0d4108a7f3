"""Shared helpers: sector lists and relation residuals."""
from fractions import Fraction

import scipy.sparse as sp

from loopspectra.algebra import EMPTY, AlgebraFamily, Boundary, Kind, Sector
from loopspectra.basis import SectorBasis
from loopspectra.ops import generator_operator
from loopspectra.symmetric import partitions

PERIODIC = {k: AlgebraFamily(k, Boundary.Periodic) for k in Kind}


def admissible_s(lines):
    """Pseudomomenta with exp(2 i pi r s) = 1, reduced mod 2, for 2r = lines."""
    if lines == 0:
        return [Fraction(0)]
    return [Fraction(2 * k, lines) for k in range(lines)]


def sectors(family: AlgebraFamily, N: int, twists=True):
    out = []
    if family.dilute or N % 2 == 0:
        out.append(Sector.identity() if family.periodic else Sector.open(0))
    for lines in range(1, N + 1):
        if not family.dilute and (N - lines) % 2:
            continue
        if family.crossings:
            out += [Sector.brauer(lam) for lam in partitions(lines)]
        elif not family.periodic:
            out.append(Sector.open(Fraction(lines, 2)))
        else:
            for s in (admissible_s(lines) if twists else [Fraction(0)]):
                out.append(Sector.standard(Fraction(lines, 2), s))
    return out


def occupancy(basis: SectorBasis, k: int):
    d = [1.0 if s.sites[k] != EMPTY else 0.0 for s in basis.states for _ in range(basis.rep_dim)]
    return sp.diags(d, format="csr")


def gens(basis: SectorBasis):
    N = basis.N
    rng = range(1, N + 1) if basis.family.periodic else range(1, N)
    return {i: generator_operator(basis, ("e", i)).matrix.tocsr() for i in rng}


def _norm(M) -> float:
    M = sp.csr_matrix(M)
    M.eliminate_zeros()
    return float(abs(M).max()) if M.nnz else 0.0


def relation_residual(basis: SectorBasis) -> float:
    """Worst violation of the TL-type, translation and Brauer relations on one sector."""
    N, n = basis.N, basis.params.n
    E = gens(basis)
    idx = sorted(E)
    per = basis.family.periodic
    worst = 0.0

    def nxt(i):
        return i % N + 1 if per else i + 1

    def dist(i, j):
        d = abs(i - j)
        return min(d, N - d) if per else d

    for i in idx:
        worst = max(worst, _norm(E[i] @ E[i] - n * E[i]))
        j = nxt(i)
        if j in E and N >= 3:
            # dilute: the middle generator needs the third site occupied
            third = (j % N) if per else j
            if third < N:
                occ = occupancy(basis, third)
                worst = max(worst, _norm(E[i] @ E[j] @ E[i] - E[i] @ occ))
            occ = occupancy(basis, i - 1)
            worst = max(worst, _norm(E[j] @ E[i] @ E[j] - E[j] @ occ))
        for k in idx:
            if dist(i, k) >= 2 and not (per and N <= 3):
                worst = max(worst, _norm(E[i] @ E[k] - E[k] @ E[i]))
    eye = sp.identity(basis.dim, format="csr")
    if per:
        t = generator_operator(basis, ("tau",)).matrix.tocsr()
        ti = generator_operator(basis, ("tau_inv",)).matrix.tocsr()
        worst = max(worst, _norm(t @ ti - eye))
        tN = eye
        for _ in range(N):
            tN = tN @ t
        for i in idx:
            worst = max(worst, _norm(t @ E[i] @ ti - E[nxt(i)]))
            worst = max(worst, _norm(tN @ E[i] - E[i] @ tN))
    if basis.family.crossings:
        for i in idx:
            P = generator_operator(basis, ("Pi", i)).matrix.tocsr()
            worst = max(worst, _norm(P @ P - eye), _norm(P @ E[i] - E[i]), _norm(E[i] @ P - E[i]))
    return float(worst)
