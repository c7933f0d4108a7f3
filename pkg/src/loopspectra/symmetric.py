"""Real orthogonal irreps of the symmetric group (Young's orthogonal form)."""
from __future__ import annotations

from functools import lru_cache
from math import sqrt

import numpy as np

from .errors import InvalidPartition


def check_partition(lam, size: int | None = None) -> tuple[int, ...]:
    lam = tuple(int(x) for x in lam)
    if any(x <= 0 for x in lam) or any(lam[i] < lam[i + 1] for i in range(len(lam) - 1)):
        raise InvalidPartition(f"{lam} is not a partition")
    if size is not None and sum(lam) != size:
        raise InvalidPartition(f"{lam} is not a partition of {size}")
    return lam


def partitions(m: int):
    """All partitions of m, largest first."""
    def rec(rest, cap):
        if rest == 0:
            yield ()
            return
        for part in range(min(rest, cap), 0, -1):
            for tail in rec(rest - part, part):
                yield (part,) + tail
    return list(rec(m, m))


@lru_cache(maxsize=None)
def standard_tableaux(lam: tuple[int, ...]) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Standard tableaux as tuples of (row, col) positions of entries 0..m-1."""
    m = sum(lam)
    out = []

    def rec(filled, cells):
        k = len(cells)
        if k == m:
            out.append(tuple(cells))
            return
        for row in range(len(lam)):
            col = filled[row]
            if col < lam[row] and (row == 0 or filled[row - 1] > col):
                filled[row] += 1
                cells.append((row, col))
                rec(filled, cells)
                cells.pop()
                filled[row] -= 1

    rec([0] * len(lam), [])
    return tuple(out)


def irrep_dim(lam) -> int:
    return len(standard_tableaux(check_partition(lam)))


@lru_cache(maxsize=None)
def adjacent_transposition(lam: tuple[int, ...], k: int) -> np.ndarray:
    """Matrix of the swap (k, k+1) in Young's orthogonal form."""
    tabs = standard_tableaux(lam)
    index = {t: i for i, t in enumerate(tabs)}
    d = len(tabs)
    mat = np.zeros((d, d))
    for i, t in enumerate(tabs):
        (r1, c1), (r2, c2) = t[k], t[k + 1]
        axial = (c2 - r2) - (c1 - r1)
        mat[i, i] = 1.0 / axial
        if abs(axial) > 1:
            swapped = list(t)
            swapped[k], swapped[k + 1] = swapped[k + 1], swapped[k]
            j = index[tuple(swapped)]
            mat[j, i] = sqrt(1.0 - 1.0 / axial ** 2)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def perm_matrix(lam: tuple[int, ...], sigma: tuple[int, ...]) -> np.ndarray:
    """rho(sigma) for sigma given as the map a -> sigma[a].

    rho is a homomorphism for composition of maps: rho(s o t) = rho(s) rho(t).
    """
    d = irrep_dim(lam)
    word = list(sigma)
    factors = []
    # bubble-sort the one-line notation; sigma o s_a swaps positions a, a+1
    changed = True
    while changed:
        changed = False
        for a in range(len(word) - 1):
            if word[a] > word[a + 1]:
                word[a], word[a + 1] = word[a + 1], word[a]
                factors.append(a)
                changed = True
    mat = np.eye(d)
    for a in factors:
        mat = adjacent_transposition(lam, a) @ mat
    mat.setflags(write=False)
    return mat
