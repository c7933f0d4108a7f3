import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from loopspectra.algebra import AlgebraFamily, Boundary, Kind, Sector
from loopspectra.basis import SectorBasis
from loopspectra.defects import (brauer_crossing_limit, build_D, casimir_eigenvalue,
                                 commutator_norm, defect_eigenvalue, fuse_defects,
                                 fused_defect_line, open_defect_d)
from loopspectra.errors import OpenBoundaryUnsupported, PeriodicBoundaryUnsupported
from loopspectra.oracle.spin import SpinChain, loop_to_spin, spin_rep_apply_D
from loopspectra.ops import generator_operator
from loopspectra.params import LoopParams, minus_q_sqrt, q_from_n

from sectorlib import PERIODIC, sectors

DENSE, DILUTE = PERIODIC[Kind.DenseTL], PERIODIC[Kind.DiluteTL]
OPEN = AlgebraFamily(Kind.DenseTL, Boundary.Open)
N_VALUES = [0.5, 1 / math.sqrt(2), 1.0, 1.5]


def _basis(family, N, sector, n):
    return SectorBasis(family, N, sector, LoopParams.from_n(n))


def _expected(sector, q, variant="Over"):
    if sector.lines == 0:
        qq = q if variant == "Over" else 1 / q
        return qq + 1 / qq
    return defect_eigenvalue(sector.r, sector.s, q, variant=variant)


def _scalar_residual(D, lam):
    M = D.dense()
    return np.abs(M - lam * np.eye(D.dim)).max()


@st.composite
def periodic_sector(draw, nmax=6):
    fam = draw(st.sampled_from([DENSE, DILUTE]))
    N = draw(st.integers(1, nmax))
    options = sectors(fam, N)
    if not options:
        N += 1
        options = sectors(fam, N)
    return fam, N, draw(st.sampled_from(options))


@given(periodic_sector(), st.sampled_from(N_VALUES), st.sampled_from(["Over", "Under"]))
def test_D_is_the_closed_form_scalar(case, n, variant):
    fam, N, sector = case
    b = _basis(fam, N, sector, n)
    D = build_D(b, variant)
    assert _scalar_residual(D, _expected(sector, b.params.q, variant)) <= 1e-10


@given(periodic_sector(), st.sampled_from(N_VALUES))
def test_D_commutes_with_generators_and_shift(case, n):
    fam, N, sector = case
    b = _basis(fam, N, sector, n)
    D = build_D(b)
    for i in range(1, N + 1):
        assert commutator_norm(D, generator_operator(b, ("e", i))) <= 1e-12
    assert commutator_norm(D, generator_operator(b, ("tau",))) <= 1e-12


def test_under_inverts_the_branch():
    q = q_from_n(0.7)
    a = minus_q_sqrt(q)
    for r, s in [(Fraction(1, 2), 0), (1, 1), (Fraction(3, 2), Fraction(2, 3)), (2, Fraction(1, 2))]:
        z = np.exp(1j * np.pi * float(s))
        k = int(2 * r)
        under = defect_eigenvalue(r, s, q, variant="Under")
        assert under == pytest.approx(z * a ** -k + a ** k / z)


def test_identity_sector_value():
    q = q_from_n(1.3)
    assert defect_eigenvalue(0, 0, q, identity_like=True) == pytest.approx(1.3)


def test_ising_seam_value():
    # n = 1, one line without phase: i q^(1/2) + 1/(i q^(1/2)) with q = e^(i pi/3)
    lam = defect_eigenvalue(Fraction(1, 2), 0, q_from_n(1.0))
    assert abs(lam + 1) < 1e-12


# ---------------------------------------------------------------------------
# fusion

@pytest.fixture(scope="module")
def six_site_sector():
    return _basis(DENSE, 6, Sector.standard(1, 0), 0.7)


@pytest.mark.parametrize("j, poly", [(1, [-1, 0, 1]), (Fraction(3, 2), [0, -2, 0, 1]),
                                     (2, [1, 0, -3, 0, 1])])
def test_fusion_polynomials(six_site_sector, j, poly):
    D = build_D(six_site_sector).dense()
    target = sum(c * np.linalg.matrix_power(D, k) for k, c in enumerate(poly))
    rec = fuse_defects(j, build_D(six_site_sector)).dense()
    assert np.abs(rec - target).max() <= 1e-10


@pytest.mark.parametrize("j", [1, Fraction(3, 2)])
def test_jones_wenzl_line_matches_recursion(j):
    for sector in (Sector.identity(), Sector.standard(1, 0), Sector.standard(1, 1)):
        b = _basis(DENSE, 6, sector, 0.7)
        line = fused_defect_line(b, j).dense()
        rec = fuse_defects(j, build_D(b)).dense()
        assert np.abs(line - rec).max() <= 1e-10


def test_spin_one_eigenvalue():
    b = _basis(DENSE, 4, Sector.standard(1, 0), 0.9)
    d = defect_eigenvalue(1, 0, b.params.q)
    assert _scalar_residual(fuse_defects(1, build_D(b)), d * d - 1) <= 1e-10


# ---------------------------------------------------------------------------
# open boundary

@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_open_defect_is_the_casimir(N):
    q = q_from_n(0.8)
    for lines in range(N % 2, N + 1, 2):
        r = Fraction(lines, 2)
        b = _basis(OPEN, N, Sector.open(r), 0.8)
        d = open_defect_d(b)
        assert _scalar_residual(d, casimir_eigenvalue(r, q)) <= 1e-10


def test_open_two_sites():
    q = q_from_n(0.8)
    vals = []
    for r in (0, 1):
        b = _basis(OPEN, 2, Sector.open(r), 0.8)
        vals += list(np.linalg.eigvals(open_defect_d(b).dense()))
    expect = [q + 1 / q, q ** 3 + q ** -3]
    assert sorted(vals, key=lambda z: z.real) == pytest.approx(sorted(expect, key=lambda z: z.real))


def test_boundary_mismatch_errors():
    with pytest.raises(OpenBoundaryUnsupported):
        build_D(_basis(OPEN, 2, Sector.open(0), 0.8))
    with pytest.raises(PeriodicBoundaryUnsupported):
        open_defect_d(_basis(DENSE, 2, Sector.identity(), 0.8))


def test_reidemeister_two_on_two_strands():
    for n in (0.3, 1.0, 1.7):
        b = _basis(OPEN, 2, Sector.open(0), n)
        E = generator_operator(b, ("e", 1)).dense()
        a = minus_q_sqrt(b.params.q)
        one = np.eye(b.dim)
        assert np.abs((one / a + a * E) @ (a * one + E / a) - one).max() <= 1e-12


def test_braid_relation_on_three_strands():
    for sector in (Sector.open(Fraction(1, 2)), Sector.open(Fraction(3, 2))):
        b = _basis(OPEN, 3, sector, 0.6)
        a = minus_q_sqrt(b.params.q)
        one = np.eye(b.dim)
        g1, g2 = (a * one + generator_operator(b, ("e", i)).dense() / a for i in (1, 2))
        assert np.abs(g1 @ g2 @ g1 - g2 @ g1 @ g2).max() <= 1e-12


# ---------------------------------------------------------------------------
# crossing limit of the O(n) R-matrix

def test_r_matrix_limits():
    n = 3
    P = brauer_crossing_limit(np.inf, n)
    perm = np.zeros((9, 9))
    for a in range(3):
        for b in range(3):
            perm[b * 3 + a, a * 3 + b] = 1
    assert np.abs(P - perm).max() == 0
    assert np.abs(brauer_crossing_limit(0.0, n) - np.eye(9)).max() <= 1e-15
    one = np.eye(3)
    R12, R23 = np.kron(P, one), np.kron(one, P)
    assert np.abs(R12 @ R23 @ R12 - R23 @ R12 @ R23).max() <= 1e-12


# ---------------------------------------------------------------------------
# non-invertibility

def test_spectrum_is_not_a_constant_phase():
    q = q_from_n(0.7)
    lams = [_expected(s, q) for s in sectors(DENSE, 4)]
    mods = {round(abs(x), 9) for x in lams}
    assert len(mods) > 1
    # zero eigenvalue at n = 0 on the sector without lines
    b = _basis(DENSE, 4, Sector.identity(), 0.0)
    assert np.abs(build_D(b).dense()).max() <= 1e-12
    b2 = _basis(DENSE, 4, Sector.standard(2, 0), 0.0)
    assert _scalar_residual(build_D(b2), -2.0) <= 1e-12


# ---------------------------------------------------------------------------
# vector representation

def _three_site_D(a, b, c, al):
    out = {}

    def add(st_, w):
        out[st_] = out.get(st_, 0) + w
    add((c, a, b), al ** -3)
    add((b, c, a), al ** 3)
    for d in (1, 2, 3):
        if a == b:
            add((d, c, d), al)
            add((c, d, d), 1 / al)
        if b == c:
            add((d, d, a), al)
            add((d, a, d), 1 / al)
        if a == c:
            add((b, d, d), al)
            add((d, d, b), 1 / al)
    return out


def _close(got, want):
    keys = set(got) | set(want)
    return max(abs(got.get(k, 0) - want.get(k, 0)) for k in keys) <= 1e-12


def test_two_site_display():
    n = 3
    q = q_from_n(n)
    for a in range(1, 4):
        for b in range(1, 4):
            want = {(b, a): -(q + 1 / q)}
            if a == b:
                for c in range(1, 4):
                    want[(c, c)] = want.get((c, c), 0) + 2
            assert _close(spin_rep_apply_D((a, b), n), want)


def test_three_site_display():
    al = minus_q_sqrt(q_from_n(3))
    for a in range(1, 4):
        for b in range(1, 4):
            for c in range(1, 4):
                assert _close(spin_rep_apply_D((a, b, c), 3), _three_site_D(a, b, c, al))


def test_dilute_display_with_empty_sites():
    q = q_from_n(3)
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            want = {(0, b, 0, a): -(q + 1 / q)}
            if a == b:
                for c in (1, 2, 3):
                    want[(0, c, 0, c)] = want.get((0, c, 0, c), 0) + 2.0
            assert _close(spin_rep_apply_D((0, a, 0, b), 3), want)


def test_crossing_then_defect_at_three_sites():
    n = 3
    al = minus_q_sqrt(q_from_n(n))
    ch = SpinChain(n, 3)
    D = ch.D_word().toarray()
    Db = ch.D_word("Under").toarray()
    P = ch.swap(1).toarray()
    for a, b, c in [(1, 2, 3), (1, 1, 2), (2, 1, 2), (3, 3, 3)]:
        v = ch.vector({(a, b, c): 1.0})
        assert _close(ch.terms(D @ P @ v), _three_site_D(b, a, c, al))
        # crossing after D: permute the output of D|abc>
        after = {(y, x, z): w for (x, y, z), w in _three_site_D(a, b, c, al).items()}
        merged = {}
        for k, w in after.items():
            merged[k] = merged.get(k, 0) + w
        assert _close(ch.terms(P @ D @ v), merged)
    # the identity D P = P Dbar holds on three sites only
    assert np.abs(D @ P - P @ Db).max() <= 1e-12
    ch4 = SpinChain(n, 4)
    D4, P4, Db4 = ch4.D_word().toarray(), ch4.swap(1).toarray(), ch4.D_word("Under").toarray()
    assert np.abs(D4 @ P4 - P4 @ Db4).max() > 0.1
    assert np.abs(D4 @ P4 - P4 @ D4).max() > 0.1


def test_crossing_does_not_commute_in_the_loop_basis():
    b = _basis(PERIODIC[Kind.Brauer], 4, Sector.identity(), 0.7)
    D = build_D(b)
    assert commutator_norm(D, generator_operator(b, ("Pi", 1))) > 0.1


def _multiplicities(M, tol=1e-7):
    out = []
    for x in np.linalg.eigvals(M):
        for item in out:
            if abs(item[0] - x) < tol:
                item[1] += 1
                break
        else:
            out.append([x, 1])
    return out


def _mult_of(mults, lam):
    return sum(m for x, m in mults if abs(x - lam) < 1e-7)


def test_vector_multiplicities_three_sites():
    # O(3) dimensions: [3] + [1^3] = 7 + 1, [21] = 5, three copies of [1]
    q = q_from_n(3)
    mults = _multiplicities(SpinChain(3, 3).D_word().toarray())
    h = Fraction(3, 2)
    assert _mult_of(mults, defect_eigenvalue(h, 0, q)) == 8
    assert _mult_of(mults, defect_eigenvalue(h, Fraction(2, 3), q)) == 5
    assert _mult_of(mults, defect_eigenvalue(h, Fraction(4, 3), q)) == 5
    assert _mult_of(mults, defect_eigenvalue(Fraction(1, 2), 0, q)) == 9


def test_four_leg_multiplicity():
    # [4] + [2] + [] = 9 + 5 + 1; [2^2] and [21^2] vanish for O(3)
    q = q_from_n(3)
    mults = _multiplicities(SpinChain(3, 4).D_word().toarray())
    assert _mult_of(mults, defect_eigenvalue(2, 0, q)) >= 15


def test_word_and_split_agree():
    for n, N in [(2, 3), (3, 3), (2, 4)]:
        ch = SpinChain(n, N)
        assert np.abs((ch.D_word() - ch.D_split()).toarray()).max() <= 1e-12
        assert np.abs((ch.D_word("Under") - ch.D_split("Under")).toarray()).max() <= 1e-12


@pytest.mark.parametrize("dilute", [False, True])
def test_loop_states_intertwine(dilute):
    n, N = 2, 4
    fam = DILUTE if dilute else DENSE
    b = _basis(fam, N, Sector.identity(), float(n))
    ch = SpinChain(n, N, dilute=dilute)
    image = np.array([loop_to_spin(ch, s) for s in b.states]).T
    ops = {("D",): (build_D(b).dense(), ch.D_split().toarray() if dilute else ch.D_word().toarray())}
    for i in range(1, N + 1):
        ops[("e", i)] = (generator_operator(b, ("e", i)).dense(), ch.e(i).toarray())
    ops[("tau",)] = (generator_operator(b, ("tau",)).dense(), ch.tau().toarray())
    for loop_op, spin_op in ops.values():
        assert np.abs(spin_op @ image - image @ loop_op).max() <= 1e-10
