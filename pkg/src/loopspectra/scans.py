"""Ground-state and gap scans over (L, K, w) on the compiled axial engine."""
from __future__ import annotations

import gc
from collections import OrderedDict

import numpy as np

from . import __version__
from .algebra import AlgebraFamily, Boundary, Kind, Sector
from .axial_fast import AxialStructure
from .errors import IncompatibleSector
from .params import LoopParams
from .spectral import SpectrumRecord, free_energy_per_site, leading_spectrum, scaling_dimension
from .transfer import ModelParams, build_row_transfer


class AxialScanner:
    """Caches engine structures per (L, sector) and spectra per coupling.

    Structures are large at L = 12, so only ``keep`` of them stay in memory.
    ``store`` is any dict-like object; keys are tuples that include the model
    signature, so one store can be shared between scanners.
    """

    def __init__(self, n, crossings: bool = True, contact: bool = False, mu: float = 1.0,
                 keep: int = 3, tol: float = 1e-12, store=None, z=None):
        kind = Kind.DiluteBrauer if crossings else Kind.DiluteTL
        self.family = AlgebraFamily(kind, Boundary.Periodic)
        self.loop = LoopParams.from_n(n, z=z)
        self.contact = contact
        self.mu = mu
        self.keep = keep
        self.tol = tol
        self._structs: OrderedDict = OrderedDict()
        self._vecs: dict = {}
        self.store = store if store is not None else {}
        nn = complex(n)
        zz = complex(self.loop.z)
        self.signature = (kind.value, nn.real, nn.imag, zz.real, zz.imag, bool(contact),
                          float(mu), "Axial", __version__)

    def structure(self, L: int, sector: Sector | None = None) -> AxialStructure:
        sector = sector or Sector.identity()
        key = (L, sector)
        if key in self._structs:
            self._structs.move_to_end(key)
            return self._structs[key]
        while len(self._structs) >= self.keep:
            self._structs.popitem(last=False)
        st = AxialStructure(self.family, L, sector, contact=self.contact)
        self._structs[key] = st
        return st

    def release(self):
        """Drop cached structures and start vectors (the eigenvalue store is kept)."""
        self._structs.clear()
        self._vecs.clear()
        gc.collect()

    def operator(self, L, K, w, sector=None):
        sector = sector or Sector.identity()
        try:
            st = self.structure(L, sector)
        except IncompatibleSector:
            # planar sectors with through-lines carry twists: generic builder
            if self.family.crossings or sector.lines == 0:
                raise
            params = ModelParams(self.loop, K, w, self.mu, self.contact)
            return build_row_transfer(self.family, L, sector, params)
        return st.operator(self.loop, K, w, self.mu)

    def _key(self, what, L, sector, K, w, *extra):
        return (what,) + self.signature + (L, sector.tag(), round(K, 15), round(w, 15)) + extra

    def leading(self, L: int, K: float, w: float, sector: Sector | None = None) -> float:
        sector = sector or Sector.identity()
        key = self._key("lam0", L, sector, K, w)
        if key in self.store:
            return self.store[key]
        op = self.operator(L, K, w, sector)
        v0 = self._vecs.get((L, sector))
        rec = leading_spectrum(op, k=1, tol=self.tol, v0=v0, return_vectors=True)
        lam = rec.eigenvalues[0]
        vec = rec.vectors[:, 0]
        self._vecs[(L, sector)] = np.real(vec) if op.dtype is float else vec
        self.store[key] = float(lam.real)
        return float(lam.real)

    def free_energy(self, L: int, K: float, w: float) -> float:
        return free_energy_per_site(self.leading(L, K, w), L)

    def spectrum(self, L: int, K: float, w: float, sector: Sector, k: int = 8,
                 tol: float = 1e-10) -> SpectrumRecord:
        key = self._key("spec", L, sector, K, w, k, tol)
        if key in self.store:
            return SpectrumRecord.from_json(self.store[key])
        op = self.operator(L, K, w, sector)
        rec = leading_spectrum(op, k=min(k, op.dim), tol=tol)
        rec.params = {"K": K, "w": w, "n": complex(self.loop.n).real,
                      "family": self.family.kind.value}
        self.store[key] = rec.to_json()
        return rec


def group_levels(eigenvalues, lam0, L: int, rtol: float = 1e-7, drop_complex: bool = False):
    """Collapse a spectrum into levels [{x, spin, mult, complex}] by modulus."""
    levels = []
    for lam in eigenvalues:
        lam = complex(lam)
        cplx = abs(lam.imag) > 1e-9 * max(1.0, abs(lam))
        x, spin = scaling_dimension(lam0, lam, L)
        if levels and abs(abs(lam) - levels[-1]["mod"]) <= rtol * abs(lam):
            levels[-1]["mult"] += 1
            levels[-1]["complex"] = levels[-1]["complex"] or cplx
            continue
        levels.append({"mod": abs(lam), "x": x, "spin": abs(spin), "mult": 1, "complex": cplx})
    if drop_complex:
        levels = [lv for lv in levels if not lv["complex"]]
    return levels


def exponent_series(scanner: AxialScanner, sizes, K: float, w: float, sector: Sector,
                    k: int = 16, drop_complex: bool = False, reference: AxialScanner | None = None):
    """{L: levels} with x measured against the identity-sector ground state.

    ``reference`` supplies that ground state when it lives in another family
    (seam sectors are planar while the bulk may carry crossings).
    """
    ref = reference or scanner
    out = {}
    for L in sizes:
        lam0 = ref.leading(L, K, w)
        rec = scanner.spectrum(L, K, w, sector, k=k)
        out[L] = group_levels(rec.eigenvalues, lam0, L, drop_complex=drop_complex)
    return out
