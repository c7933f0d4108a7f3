"""Leading eigenvalues of row operators and their conversion to CFT data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as sla

from .errors import DimensionTooSmall, NoConvergence, NonPositiveLeadingEigenvalue

DEFAULT_K = 16
DEFAULT_TOL = 1e-11
DENSE_CUTOFF = 600


@dataclass
class SpectrumRecord:
    L: int
    sector: str
    eigenvalues: list
    residuals: list
    iterations: int
    params: dict = field(default_factory=dict)
    vectors: np.ndarray | None = field(default=None, repr=False)

    def to_json(self, operator_hash: str | None = None) -> dict:
        return {
            "operator_hash": operator_hash,
            "L": self.L,
            "sector": self.sector,
            "params": self.params,
            "iterations": self.iterations,
            "eigenvalues": [{"re": float(l.real), "im": float(l.imag), "residual": float(r)}
                            for l, r in zip(self.eigenvalues, self.residuals)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SpectrumRecord":
        ev = [complex(e["re"], e["im"]) for e in data["eigenvalues"]]
        res = [e["residual"] for e in data["eigenvalues"]]
        return cls(data["L"], data["sector"], ev, res, data.get("iterations", 0),
                   data.get("params", {}))


def _order(vals: np.ndarray) -> np.ndarray:
    # descending modulus; within a conjugate pair the positive imaginary part first
    mod = np.round(np.abs(vals), 10)
    return np.lexsort((-vals.imag, -mod))


def _residuals(op, vals, vecs) -> list:
    out = []
    for l, v in zip(vals, vecs.T):
        nv = np.linalg.norm(v)
        out.append(float(np.linalg.norm(op.apply(v) - l * v) / nv))
    return out


def _keep_pairs(vals: np.ndarray, k: int, tol: float = 1e-8) -> int:
    """Extend k by one if it would split a complex-conjugate pair."""
    if k >= len(vals):
        return len(vals)
    last = vals[k - 1]
    if abs(last.imag) > tol * max(1.0, abs(last)) and abs(vals[k] - np.conj(last)) < tol * max(1.0, abs(last)):
        return k + 1
    return k


def leading_spectrum(op, k: int = DEFAULT_K, tol: float = DEFAULT_TOL, seed: int = 0,
                     v0: np.ndarray | None = None, max_restarts: int = 20,
                     return_vectors: bool = False) -> SpectrumRecord:
    """The k eigenvalues of largest modulus, with residuals ||T v - l v|| / ||v||.

    Small operators are diagonalised densely; larger ones go through ARPACK
    with a seeded start vector.  The residual bound is ``tol`` times
    max(1, |leading eigenvalue|).
    """
    if k < 1 or tol <= 0:
        raise ValueError("need k >= 1 and tol > 0")
    dim = op.dim
    if k > dim:
        raise DimensionTooSmall(f"k={k} exceeds the dimension {dim}")
    meta = dict(getattr(op, "meta", {}) or {})
    L = meta.get("N", 0)
    sector = meta.get("sector", "")
    iterations = 0
    if dim <= max(DENSE_CUTOFF, 2 * k + 4):
        A = op.dense()
        vals, vecs = la.eig(A)
        idx = _order(vals)
        kk = _keep_pairs(vals[idx], k)
        idx = idx[:kk]
        vals, vecs = vals[idx], vecs[:, idx]
    else:
        rng = np.random.default_rng(seed)
        real = getattr(op, "dtype", complex) is float
        dtype = float if real else complex
        start = v0 if v0 is not None else rng.standard_normal(dim)
        start = np.real(start) if real else np.asarray(start, dtype=complex)
        lin = sla.LinearOperator((dim, dim), matvec=op.apply, dtype=dtype)
        ncv = min(dim - 1, max(2 * k + 1, 20))
        vals = vecs = None
        best = math.inf
        for attempt in range(3):
            try:
                vals, vecs = sla.eigs(lin, k=min(k + 1, dim - 2), which="LM", v0=start,
                                      tol=tol * 0.1, ncv=ncv, maxiter=max_restarts * dim)
                iterations += 1
            except sla.ArpackNoConvergence as exc:
                iterations += 1
                if len(exc.eigenvalues):
                    vals, vecs = exc.eigenvalues, exc.eigenvectors
                ncv = min(dim - 1, 2 * ncv)
                continue
            break
        if vals is None:
            raise NoConvergence(iterations, best)
        idx = _order(vals)
        kk = _keep_pairs(vals[idx], k)
        idx = idx[:kk]
        vals, vecs = vals[idx], vecs[:, idx]
    res = _residuals(op, vals, vecs)
    scale = max(1.0, abs(vals[0]))
    worst = max(res) / scale
    if worst > tol:
        raise NoConvergence(iterations, worst)
    rec = SpectrumRecord(L, sector, [complex(v) for v in vals], res, iterations, meta)
    if return_vectors:
        rec.vectors = vecs
    return rec


def leading_eigenvalue(op, tol: float = 1e-12, seed: int = 0, v0=None):
    """Largest eigenvalue and eigenvector, for ground-state scans."""
    rec = leading_spectrum(op, k=1, tol=tol, seed=seed, v0=v0, return_vectors=True)
    return rec.eigenvalues[0], rec.vectors[:, 0]


def free_energy_per_site(lam0, L: int) -> float:
    """f(L) = ln(Lambda_0) / L for one row of L vertices."""
    lam0 = complex(lam0)
    if abs(lam0.imag) > 1e-9 * max(1.0, abs(lam0)) or lam0.real <= 0:
        raise NonPositiveLeadingEigenvalue(f"leading eigenvalue {lam0}")
    return math.log(lam0.real) / L


def scaling_dimension(lam0, lam_i, L: int):
    """(x, spin) from a gap: x = L/(2 pi) ln(Lambda_0/|Lambda_i|), spin from the phase."""
    lam0 = complex(lam0)
    lam_i = complex(lam_i)
    x = L / (2 * math.pi) * math.log(abs(lam0) / abs(lam_i))
    spin = np.angle(lam_i / lam0) * L / (2 * math.pi)
    return x, float(spin)
