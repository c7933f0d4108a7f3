import math
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from loopspectra import spectral
from loopspectra.algebra import Kind, Sector
from loopspectra.errors import DimensionTooSmall, NoConvergence, NonPositiveLeadingEigenvalue
from loopspectra.ops import RowOperator
from loopspectra.params import LoopParams
from loopspectra.spectral import (SpectrumRecord, free_energy_per_site, leading_eigenvalue,
                                  leading_spectrum, scaling_dimension)
from loopspectra.transfer import DIAGONAL, ModelParams, build_row_transfer

from sectorlib import PERIODIC

DB = PERIODIC[Kind.DiluteBrauer]


def _op(M):
    M = sp.csr_matrix(np.asarray(M, dtype=complex))
    return RowOperator(None, M, meta={"N": 0, "sector": "test"})


def _transfer(fam, L, sector, n=1.0, K=math.sqrt(2) - 1, w=1.0, **kw):
    return build_row_transfer(fam, L, sector, ModelParams(LoopParams.from_n(n), K=K, w=w), **kw)


@pytest.fixture
def krylov(monkeypatch):
    monkeypatch.setattr(spectral, "DENSE_CUTOFF", 0)


def test_triangular_two_by_two():
    rec = leading_spectrum(_op([[2, 1], [0, 1]]), k=2)
    assert rec.eigenvalues == pytest.approx([2, 1])
    assert max(rec.residuals) < 1e-12


@pytest.mark.parametrize("sector", [Sector.identity(), Sector.standard(1, 0), Sector.standard(1, 1)])
def test_krylov_matches_dense(krylov, sector):
    op = _transfer(PERIODIC[Kind.DenseTL], 6, sector, K=0.5, w=0.0, geometry=DIAGONAL)
    full = np.linalg.eigvals(op.dense())
    full = full[np.argsort(-np.abs(full))]
    k = min(4, op.dim - 3)
    rec = leading_spectrum(op, k=k, tol=1e-11)
    assert np.abs(np.abs(rec.eigenvalues[:k]) - np.abs(full[:k])).max() <= 1e-10


def test_ising_leading_eigenvalue_against_dense(krylov):
    op = _transfer(DB, 6, Sector.identity())
    lam = max(np.linalg.eigvals(op.dense()), key=abs)
    rec = leading_spectrum(op, k=2)
    assert abs(rec.eigenvalues[0] - lam) <= 1e-10 * abs(lam)


def test_seed_determinism(krylov):
    op = _transfer(DB, 5, Sector.identity())
    a = leading_spectrum(op, k=3, seed=7)
    b = leading_spectrum(op, k=3, seed=7)
    assert a.eigenvalues == b.eigenvalues


@given(st.integers(3, 6), st.floats(0.05, 1.0), st.floats(0.0, 2.0))
def test_perron_frobenius(L, K, w):
    op = _transfer(DB, L, Sector.identity(), n=0.8, K=K, w=w)
    lam, vec = leading_eigenvalue(op)
    assert abs(lam.imag) <= 1e-10 * abs(lam) and lam.real > 0
    vec = vec / vec[np.argmax(np.abs(vec))]
    assert np.all(vec.real >= -1e-10) and np.abs(vec.imag).max() <= 1e-10


def test_complex_pairs_reported_together():
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.5]])
    rec = leading_spectrum(_op(rot), k=1)
    assert len(rec.eigenvalues) == 2
    assert rec.eigenvalues[0] == pytest.approx(np.conj(rec.eigenvalues[1]))
    assert rec.eigenvalues[0].imag > 0


def test_conjugate_pairs_in_a_real_sector():
    op = _transfer(DB, 5, Sector.brauer((1, 1)), w=1.0)
    vals = np.linalg.eigvals(op.dense())
    for v in vals:
        if abs(v.imag) > 1e-9:
            assert np.min(np.abs(vals - np.conj(v))) < 1e-9


def test_errors():
    with pytest.raises(DimensionTooSmall):
        leading_spectrum(_op(np.eye(2)), k=3)
    with pytest.raises(ValueError):
        leading_spectrum(_op(np.eye(2)), k=0)
    with pytest.raises(ValueError):
        leading_spectrum(_op(np.eye(2)), k=1, tol=0)
    with pytest.raises(NonPositiveLeadingEigenvalue):
        free_energy_per_site(-1.0, 4)
    with pytest.raises(NonPositiveLeadingEigenvalue):
        free_energy_per_site(1 + 1j, 4)


def test_no_convergence_is_reported(krylov):
    # a noisy matvec is not a fixed linear map, so no pair meets the bound
    rng = np.random.default_rng(1)
    diag = np.linspace(1.0, 2.0, 50)
    noisy = RowOperator(SimpleNamespace(dim=50), None,
                        lambda v: diag * v + 1e-3 * rng.standard_normal(50), {}, float)
    with pytest.raises(NoConvergence):
        leading_spectrum(noisy, k=1, tol=1e-12)


def test_record_json_round_trip():
    rec = leading_spectrum(_op(np.diag([3.0, 2.0, 1.0])), k=2)
    rec.params = {"K": 0.4}
    back = SpectrumRecord.from_json(rec.to_json())
    assert back.eigenvalues == rec.eigenvalues
    assert back.residuals == rec.residuals
    assert back.params == rec.params


def test_free_energy_and_dimension_examples():
    assert free_energy_per_site(1.0, 7) == 0
    assert free_energy_per_site(math.exp(9), 9) == pytest.approx(1.0)
    assert scaling_dimension(2.5, 2.5, 8) == (0.0, 0.0)
    x, spin = scaling_dimension(1.0, math.exp(-2 * math.pi / 8) * 1j, 8)
    assert x == pytest.approx(1.0)
    assert spin == pytest.approx(2.0)
