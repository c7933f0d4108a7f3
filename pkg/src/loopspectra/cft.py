"""Coulomb-gas formulas and finite-size fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateSizes, InsufficientPoints, NoBracketedPeak, NOutOfRange


@dataclass
class KacParams:
    beta2: float

    @property
    def n(self) -> float:
        return -2 * math.cos(math.pi * self.beta2)

    @property
    def c(self) -> float:
        return central_charge(self.beta2)

    def P(self, r, s) -> float:
        b = math.sqrt(self.beta2)
        return 0.5 * (b * float(r) - float(s) / b)

    def Delta(self, r, s) -> float:
        return self.P(r, s) ** 2 - self.P(1, 1) ** 2


@dataclass
class FitResult:
    kind: str
    value: float
    amplitude: float | None = None
    sizes: list = field(default_factory=list)
    residual: float = 0.0
    error: float | None = None
    extra: dict = field(default_factory=dict)


def central_charge(beta2: float) -> float:
    return 13 - 6 * beta2 - 6 / beta2


def beta_from_n(n: float, branch: str = "dilute") -> float:
    """beta^2 with n = -2 cos(pi beta^2): in [1, 2] (dilute) or (0, 1] (dense)."""
    n = float(n)
    if not -2 < n < 2:
        raise NOutOfRange(f"n={n} outside (-2, 2)")
    g = math.acos(n / 2) / math.pi
    if branch == "dilute":
        return 1 + g
    if branch == "dense":
        return 1 - g
    raise ValueError(f"unknown branch {branch}")


def kac_weight(r, s, beta2: float) -> float:
    return KacParams(beta2).Delta(r, s)


def kac_exponent(r, s, beta2: float):
    """(Delta_(r,s), Delta_(r,-s), x = Delta_(r,s) + Delta_(r,-s))."""
    kp = KacParams(beta2)
    d1 = kp.Delta(r, s)
    d2 = kp.Delta(r, -s)
    return d1, d2, d1 + d2


# ---------------------------------------------------------------------------
# fits

def fit_ceff(fvalues, mode: str = "ThreePoint") -> FitResult:
    """Solve f(L) = f_inf - pi c / (6 L^2) [+ A / L^4] exactly on 2 or 3 sizes."""
    pts = sorted((int(L), float(f)) for L, f in fvalues)
    need = 3 if mode == "ThreePoint" else 2
    if mode not in ("ThreePoint", "TwoPoint"):
        raise ValueError(mode)
    if len(pts) != need:
        raise InsufficientPoints(f"{mode} needs {need} sizes, got {len(pts)}")
    Ls = [L for L, _ in pts]
    if len(set(Ls)) != len(Ls):
        raise DegenerateSizes("repeated system size")
    rows = []
    for L, _ in pts:
        row = [1.0, -math.pi / (6 * L * L)]
        if need == 3:
            row.append(1.0 / L ** 4)
        rows.append(row)
    A = np.array(rows)
    b = np.array([f for _, f in pts])
    if abs(np.linalg.det(A)) < 1e-300:
        raise DegenerateSizes("singular fit matrix")
    sol = np.linalg.solve(A, b)
    kind = "CentralCharge3pt" if need == 3 else "CentralCharge2pt"
    return FitResult(kind, float(sol[1]), float(sol[2]) if need == 3 else None, Ls,
                     float(np.max(np.abs(A @ sol - b))), extra={"f_inf": float(sol[0])})


def extrapolate_invL2(series, order: int = 1) -> FitResult:
    """Least-squares polynomial in 1/L^2; error from the spread to the next lower order."""
    pts = sorted((float(L), float(v)) for L, v in series)
    if len(pts) < order + 1:
        raise InsufficientPoints(f"order {order} needs {order + 1} points")
    x = np.array([1 / L ** 2 for L, _ in pts])
    y = np.array([v for _, v in pts])

    def fit(p):
        V = np.vander(x, p + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(V, y, rcond=None)
        return coef, float(np.max(np.abs(V @ coef - y)))

    coef, res = fit(order)
    err = None
    if order >= 1:
        lower, _ = fit(order - 1)
        err = 0.5 * abs(coef[0] - lower[0])
    return FitResult("Extrapolation", float(coef[0]), None, [L for L, _ in pts], res, err,
                     extra={"order": order, "coefficients": coef.tolist()})


def extrapolate_power(series, wmax: float = 30.0) -> FitResult:
    """v(L) = v_inf + a L^(-omega) solved exactly on the last three sizes.

    The error is the shift against the same fit one size earlier, when a
    fourth point is available.
    """
    pts = sorted((float(L), float(v)) for L, v in series)
    if len(pts) < 3:
        raise InsufficientPoints("power-law extrapolation needs 3 points")

    def solve(trip):
        (L0, y0), (L1, y1), (L2, y2) = trip
        if y1 == y0 or y2 == y1:
            return y2, float("inf")
        r = (y2 - y1) / (y1 - y0)

        def g(w):
            return (L2 ** -w - L1 ** -w) / (L1 ** -w - L0 ** -w) - r
        lo, hi = 1e-3, wmax
        if g(lo) * g(hi) > 0:
            # not monotone power-law behaviour; fall back to the last value
            return y2, float("nan")
        w = brentq(g, lo, hi)
        a = (y2 - y1) / (L2 ** -w - L1 ** -w)
        return y2 - a * L2 ** -w, w

    value, omega = solve(pts[-3:])
    err = None
    if len(pts) >= 4:
        err = abs(value - solve(pts[-4:-1])[0])
    return FitResult("PowerExtrapolation", float(value), None, [L for L, _ in pts[-3:]], 0.0, err,
                     extra={"omega": omega})


def ceff_from_free_energies(fvalues, mode: str = "ThreePoint") -> float:
    """c_eff from f(L) = ln(Lambda_0)/L values (the fit wants -f)."""
    return fit_ceff([(L, -f) for L, f in fvalues], mode).value


def _peak_estimate(ks, cs):
    i = int(np.argmax(cs))
    if i == 0 or i == len(ks) - 1:
        raise NoBracketedPeak(f"maximum of c_eff at the edge of [{ks[0]}, {ks[-1]}]")
    a, b, c = ks[i - 1:i + 2]
    fa, fb, fc = cs[i - 1:i + 2]
    den = (b - a) * (fb - fc) - (b - c) * (fb - fa)
    if den == 0:
        return b, (a, c)
    k = b - 0.5 * ((b - a) ** 2 * (fb - fc) - (b - c) ** 2 * (fb - fa)) / den
    return float(np.clip(k, a, c)), (a, c)


def locate_peak(ceff, interval, npoints: int = 7, xtol: float = 1e-7):
    """Maximum of a smooth c_eff(K): coarse grid, quadratic estimate, bounded Brent refinement.

    Returns (K_peak, c_peak, quadratic estimate).
    """
    lo, hi = interval
    ks = list(np.linspace(lo, hi, npoints))
    cs = [ceff(k) for k in ks]
    guess, (a, c) = _peak_estimate(ks, cs)
    res = minimize_scalar(lambda k: -ceff(k), bounds=(a, c), method="bounded",
                          options={"xatol": xtol})
    return float(res.x), float(-res.fun), guess


def find_Kc(free_energy, sizes, interval, mode: str = "ThreePoint", xtol: float = 1e-7,
            npoints: int = 7, order: int = 2, shrink: float | None = None,
            window: int = 5) -> FitResult:
    """Peak of c_eff(K) for each group of consecutive sizes, then extrapolated.

    ``free_energy(L, K)`` returns ln(Lambda_0)/L.  A group is (L-2, L-1, L)
    for three-point fits or (L-1, L) for two-point fits and is labelled by
    its largest size.  K_c comes from a polynomial in 1/L^2 over the last
    ``window`` groups; c from a free-exponent power law on the last three,
    because the peak values of c_eff converge much faster than 1/L^2.
    """
    width = 3 if mode == "ThreePoint" else 2
    sizes = sorted(sizes)
    groups = [sizes[i:i + width] for i in range(len(sizes) - width + 1)]
    if not groups:
        raise InsufficientPoints("not enough sizes for one fit")
    kc_series, c_series = [], []
    cur = tuple(interval)
    for grp in groups:
        def ceff(K, grp=grp):
            return ceff_from_free_energies([(L, free_energy(L, K)) for L in grp], mode)
        kpk, cpk, _ = locate_peak(ceff, cur, npoints, xtol)
        kc_series.append((grp[-1], kpk))
        c_series.append((grp[-1], cpk))
        if shrink:
            cur = (kpk - shrink, kpk + shrink)
    tail = kc_series[-window:]
    if len(tail) > 1:
        kc = extrapolate_invL2(tail, min(order, len(tail) - 1))
    else:
        kc = FitResult("Extrapolation", tail[0][1], sizes=[tail[0][0]])
    ctail = c_series[-window:]
    c_poly = extrapolate_invL2(ctail, min(order, len(ctail) - 1)).value if len(ctail) > 1 \
        else ctail[0][1]
    if len(c_series) >= 3:
        cc = extrapolate_power(c_series)
    elif len(c_series) == 2:
        cc = extrapolate_invL2(c_series, 1)
    else:
        cc = FitResult("Extrapolation", c_series[0][1], sizes=[c_series[0][0]])
    return FitResult("KcPeak", kc.value, None, sizes, kc.residual, kc.error,
                     extra={"Kc_series": kc_series, "c_series": c_series, "c": cc.value,
                            "c_error": cc.error, "c_poly": c_poly, "mode": mode})


def find_Kc_gap_crossing(xfun, sizes, interval, order: int = 2, window: int = 3,
                         xtol: float = 1e-10) -> FitResult:
    """Phenomenological renormalization: K where x_L(K) = x_{L+1}(K), extrapolated.

    ``xfun(L, K)`` is a scaled gap such as the one-leg exponent.  Crossings
    are labelled by the larger size.  This is the route to K_c when c_eff has
    no peak, e.g. at n = 0 where the ground sector is trivial below K_c.
    """
    sizes = sorted(sizes)
    if len(sizes) < 2:
        raise InsufficientPoints("gap crossing needs two sizes")
    lo, hi = interval
    series, xs = [], []
    for L1, L2 in zip(sizes, sizes[1:]):
        def g(K, L1=L1, L2=L2):
            return xfun(L1, K) - xfun(L2, K)
        if g(lo) * g(hi) > 0:
            raise NoBracketedPeak(f"x_{L1} - x_{L2} keeps its sign on [{lo}, {hi}]")
        k = brentq(g, lo, hi, xtol=xtol)
        series.append((L2, k))
        xs.append((L2, xfun(L2, k)))
    tail = series[-window:]
    if len(tail) > 1:
        fit = extrapolate_invL2(tail, min(order, len(tail) - 1))
    else:
        fit = FitResult("Extrapolation", tail[0][1], sizes=[tail[0][0]])
    return FitResult("KcGapCrossing", fit.value, None, sizes, fit.residual, fit.error,
                     extra={"Kc_series": series, "x_series": xs, "mode": "GapCrossing"})


# ---------------------------------------------------------------------------
# exponent identification

def kac_grid(rmax: float = 4, smax: int = 4, extra_s=()):
    """(r, s) pairs on a bounded grid: r in Z/2, s rational with e^{2 i pi r s} = 1."""
    out = []
    r = Fraction(0)
    while r <= rmax:
        if r == 0:
            svals = {Fraction(k, 2) for k in range(0, 2 * smax + 1)}
        else:
            den = int(2 * r)
            svals = {Fraction(k, den) for k in range(0, smax * den + 1)}
        svals |= {Fraction(s) for s in extra_s}
        for s in sorted(svals):
            out.append((r, s))
        r += Fraction(1, 2)
    return out


def match_exponent(x: float, beta2: float, window: float = 0.05, grid=None):
    """Nearest Kac x_(r,s) within the window, or None."""
    grid = grid if grid is not None else kac_grid()
    best = None
    for r, s in grid:
        xe = kac_exponent(r, s, beta2)[2]
        d = abs(xe - x)
        if d <= window and (best is None or d < best[0]):
            best = (d, (r, s), xe)
    if best is None:
        return None
    return best[1], best[2]
