"""Declarative experiment runner: config validation, spectrum cache, table emission."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import AlgebraFamily, Boundary, Kind, Sector
from .errors import ConfigInvalid, EmptyResults, IoFailure, LoopSpectraError, NoConvergence

TASKS = ("spectrum", "ceff-sweep", "find-kc", "exponents", "defect-checks", "oracle-crosscheck")
TOP_KEYS = {"task", "model", "sizes", "sectors", "output", "cache", "seed", "options", "patches"}
MODEL_KEYS = {"family", "boundary", "n", "w", "K", "mu", "z", "contact", "geometry"}
GRID_KEYS = {"from", "to", "points"}
OUTPUT_KEYS = {"dir", "formats"}
CACHE_KEYS = {"enabled", "dir"}
PATCH_KEYS = {"width", "height", "K", "w", "mu", "crossings", "defect_row", "variant"}

OPTION_DEFAULTS = {
    "spectrum": {"k": 8, "tol": 1e-10},
    "ceff-sweep": {"mode": "ThreePoint"},
    "find-kc": {"mode": "ThreePoint", "npoints": 7, "xtol": 1e-7, "order": 2, "window": 5,
                "shrink": None, "leg_sector": None},
    "exponents": {"k": 16, "levels": 8, "order": 2, "window": 3, "drop_complex": False,
                  "match_window": 0.05, "branch": "dilute"},
    "defect-checks": {"n_values": [0.5, 0.7071067811865476, 1.0, 1.5],
                      "families": ["DenseTL", "DiluteTL"], "tol": 1e-12},
    "oracle-crosscheck": {"tol": 1e-10},
}

DEFAULT_CACHE = Path.home() / ".cache" / "loopspectra"


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    task: str
    model: dict
    sizes: list
    sectors: list
    output_dir: Path
    formats: tuple
    cache_enabled: bool
    cache_dir: Path | None
    seed: int
    options: dict
    patches: list
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def values(self, key) -> list:
        """Model entry as a list of floats (scalar, list or {from, to, points} grid)."""
        v = self.model.get(key)
        if v is None:
            return []
        if isinstance(v, dict):
            return [float(x) for x in np.linspace(v["from"], v["to"], int(v["points"]))]
        if isinstance(v, list):
            return [float(x) for x in v]
        return [float(v)]


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigInvalid(path, "expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigInvalid(f"{path}.{extra[0]}", "unknown key")


def _number(v, path, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(path, "expected a number")
    if not math.isfinite(v) or (positive and v < 0):
        raise ConfigInvalid(path, "out of range")
    return v


def _number_or_grid(v, path):
    if isinstance(v, dict):
        _check_keys(v, GRID_KEYS, path)
        for key in GRID_KEYS:
            if key not in v:
                raise ConfigInvalid(f"{path}.{key}", "missing")
        _number(v["from"], f"{path}.from")
        _number(v["to"], f"{path}.to")
        if not isinstance(v["points"], int) or v["points"] < 1:
            raise ConfigInvalid(f"{path}.points", "expected a positive integer")
        return
    if isinstance(v, list):
        if not v:
            raise ConfigInvalid(path, "empty list")
        for i, x in enumerate(v):
            _number(x, f"{path}[{i}]", positive=True)
        return
    _number(v, path, positive=True)


def parse_sector(text: str) -> Sector:
    """'<1,1>' or '[]', a partition '[21]', a standard module '(1/2,0)', or 'seam'/'seam2'."""
    t = text.strip()
    if t in ("<1,1>", "[]", "identity"):
        return Sector.identity()
    if t.startswith("[") and t.endswith("]"):
        body = t[1:-1].replace(",", "")
        if not body.isdigit():
            raise ValueError(f"bad partition {text!r}")
        return Sector.brauer(tuple(int(c) for c in body))
    if t.startswith("(") and t.endswith(")"):
        r, s = t[1:-1].split(",")
        return Sector.standard(Fraction(r.strip()), Fraction(s.strip()))
    if t.startswith("r=") and "," not in t:
        return Sector.open(Fraction(t[2:]))
    raise ValueError(f"unknown sector {text!r}")


def load_config(source) -> ExperimentConfig:
    """Validate a config given as a path, a JSON string or a dict."""
    if isinstance(source, dict):
        raw = source
    else:
        p = Path(source)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalid(str(p), f"cannot read: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(str(p), f"invalid JSON: {exc}") from exc
    _check_keys(raw, TOP_KEYS, "$")
    task = raw.get("task")
    if task not in TASKS:
        raise ConfigInvalid("$.task", f"expected one of {', '.join(TASKS)}")
    model = raw.get("model", {})
    _check_keys(model, MODEL_KEYS, "$.model")
    fam = model.get("family", "DiluteBrauer")
    if fam not in [k.value for k in Kind]:
        raise ConfigInvalid("$.model.family", f"unknown family {fam!r}")
    if model.get("boundary", "Periodic") not in ("Periodic", "Open"):
        raise ConfigInvalid("$.model.boundary", "expected Periodic or Open")
    if model.get("geometry", "Axial") != "Axial":
        raise ConfigInvalid("$.model.geometry", "experiments run in the Axial geometry")
    needs_model = task in ("spectrum", "ceff-sweep", "find-kc", "exponents")
    if needs_model:
        for key in ("n", "K"):
            if key not in model:
                raise ConfigInvalid(f"$.model.{key}", "missing")
    if "n" in model:
        _number(model["n"], "$.model.n")
    for key in ("w", "K"):
        if key in model:
            _number_or_grid(model[key], f"$.model.{key}")
    if "mu" in model:
        _number(model["mu"], "$.model.mu", positive=True)
    if "z" in model:
        z = model["z"]
        if isinstance(z, list):
            if len(z) != 2:
                raise ConfigInvalid("$.model.z", "expected [re, im]")
            _number(z[0], "$.model.z[0]")
            _number(z[1], "$.model.z[1]")
        else:
            _number(z, "$.model.z")
    if "contact" in model and not isinstance(model["contact"], bool):
        raise ConfigInvalid("$.model.contact", "expected a boolean")
    sizes = raw.get("sizes", [])
    if not isinstance(sizes, list) or not all(isinstance(L, int) and not isinstance(L, bool)
                                               and 1 <= L <= 13 for L in sizes):
        raise ConfigInvalid("$.sizes", "expected a list of integers in [1, 13]")
    if needs_model and not sizes:
        raise ConfigInvalid("$.sizes", "empty")
    sectors = raw.get("sectors", ["<1,1>"])
    if not isinstance(sectors, list):
        raise ConfigInvalid("$.sectors", "expected a list")
    for i, s in enumerate(sectors):
        try:
            parse_sector(s)
        except (ValueError, LoopSpectraError, TypeError, AttributeError) as exc:
            raise ConfigInvalid(f"$.sectors[{i}]", str(exc)) from exc
    out = raw.get("output", {})
    _check_keys(out, OUTPUT_KEYS, "$.output")
    formats = out.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or not formats or set(formats) - {"csv", "json"}:
        raise ConfigInvalid("$.output.formats", "expected a non-empty subset of [csv, json]")
    cache = raw.get("cache", {})
    _check_keys(cache, CACHE_KEYS, "$.cache")
    if not isinstance(cache.get("enabled", True), bool):
        raise ConfigInvalid("$.cache.enabled", "expected a boolean")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigInvalid("$.seed", "expected an integer")
    opts = dict(OPTION_DEFAULTS[task])
    given = raw.get("options", {})
    _check_keys(given, set(opts), "$.options")
    opts.update(given)
    patches = raw.get("patches", [])
    if not isinstance(patches, list):
        raise ConfigInvalid("$.patches", "expected a list")
    for i, p in enumerate(patches):
        _check_keys(p, PATCH_KEYS, f"$.patches[{i}]")
        for key in ("width", "height"):
            if not isinstance(p.get(key), int) or p[key] < 1:
                raise ConfigInvalid(f"$.patches[{i}].{key}", "expected a positive integer")
    return ExperimentConfig(
        task=task, model=model, sizes=list(sizes), sectors=list(sectors),
        output_dir=Path(out.get("dir", "results")), formats=tuple(sorted(formats)),
        cache_enabled=cache.get("enabled", True),
        cache_dir=Path(cache["dir"]) if "dir" in cache else None,
        seed=seed, options=opts, patches=patches, raw=raw)


def resolve_cache_dir(cfg: ExperimentConfig, override=None) -> Path | None:
    """Command line beats LOOPSPECTRA_CACHE, which beats the config."""
    if not cfg.cache_enabled:
        return None
    if override:
        return Path(override)
    env = os.environ.get("LOOPSPECTRA_CACHE")
    if env:
        return Path(env)
    return cfg.cache_dir or DEFAULT_CACHE


# ---------------------------------------------------------------------------
# cache

def atomic_write(path: Path, data: bytes):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


class DiskStore:
    """Dict-like store of JSON values under content-hash file names."""

    def __init__(self, root):
        self.root = Path(root)
        self._mem: dict = {}

    def _path(self, key) -> Path:
        h = hashlib.sha256(repr(key).encode("utf-8")).hexdigest()
        return self.root / h[:2] / f"{h}.json"

    def __contains__(self, key) -> bool:
        return key in self._mem or self._path(key).exists()

    def __getitem__(self, key):
        if key in self._mem:
            return self._mem[key]
        try:
            data = json.loads(self._path(key).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise KeyError(key) from exc
        self._mem[key] = data["value"]
        return data["value"]

    def __setitem__(self, key, value):
        self._mem[key] = value
        blob = json.dumps({"key": repr(key), "value": value}, sort_keys=True)
        atomic_write(self._path(key), blob.encode("utf-8"))


# ---------------------------------------------------------------------------
# tables

@dataclass
class Table:
    name: str
    columns: list
    rows: list
    details: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    return v


def emit_table(table: Table, fmt: str, out_dir, config_hash_: str = "", params=None) -> Path:
    """Write one table as CSV (9 significant digits) or JSON (full precision).

    Both carry the artifact version, the config hash and the physical
    parameters; nothing time-dependent goes in, so reruns are byte-identical.
    """
    if not table.rows:
        raise EmptyResults(f"table {table.name!r} has no rows")
    params = _jsonable(params or {})
    out_dir = Path(out_dir)
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# loopspectra {__version__}\n")
        buf.write(f"# config_hash {config_hash_}\n")
        buf.write("# params " + json.dumps(params, sort_keys=True) + "\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(table.columns)
        for row in table.rows:
            wr.writerow([_fmt(v) for v in row])
        data = buf.getvalue().encode("utf-8")
        path = out_dir / f"{table.name}.csv"
    elif fmt == "json":
        doc = {"version": __version__, "config_hash": config_hash_, "params": params,
               "columns": table.columns, "rows": _jsonable(table.rows),
               "details": _jsonable(table.details)}
        data = (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("utf-8")
        path = out_dir / f"{table.name}.json"
    else:
        raise ValueError(f"unknown format {fmt}")
    atomic_write(path, data)
    return path


def write_gnuplot(path: Path, pairs, comment: str = "") -> Path:
    lines = [f"# {comment}"] if comment else []
    lines += [f"{format(a, '.12g')} {format(b, '.12g')}" for a, b in pairs]
    atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))
    return path


# ---------------------------------------------------------------------------
# task nodes (module level so they can run in worker processes)

def _store(cache_dir):
    return DiskStore(cache_dir) if cache_dir else {}


def _scanner(model, w, cache_dir, sector=None, tol=1e-12):
    from .scans import AxialScanner
    crossings = model.get("family", "DiluteBrauer") == "DiluteBrauer"
    # at w = 0 no crossing is ever generated: the planar basis holds the
    # whole reachable part of the identity sector and is much smaller; a
    # standard-module sector (no partition) only exists in the planar family
    if crossings and w == 0 and (sector is None or sector.lines == 0 or sector.lam is None):
        crossings = False
    z = model.get("z")
    if isinstance(z, list):
        z = complex(z[0], z[1])
    return AxialScanner(model["n"], crossings=crossings, contact=model.get("contact", False),
                        mu=model.get("mu", 1.0), tol=tol, store=_store(cache_dir), z=z)


def _node_spectrum(args, model, opts, cache_dir):
    w, K, L, tag = args
    sc = _scanner(model, w, cache_dir, parse_sector(tag))
    try:
        rec = sc.spectrum(L, K, w, parse_sector(tag), k=opts["k"], tol=opts["tol"])
    except NoConvergence as exc:
        return {"error": f"sector {tag} L={L}: {exc}"}
    return {"record": rec.to_json()}


def _node_find_kc(w, model, opts, sizes, cache_dir):
    from .cft import find_Kc, find_Kc_gap_crossing
    sc = _scanner(model, w, cache_dir)
    Ks = model["K"]
    interval = (Ks["from"], Ks["to"]) if isinstance(Ks, dict) else (min(Ks), max(Ks))
    try:
        if opts["mode"] == "GapCrossing":
            tag = opts["leg_sector"] or ("[1]" if sc.family.crossings else "(1/2,0)")
            leg = parse_sector(tag)
            legsc = _scanner(model, w, cache_dir, leg)

            def xfun(L, K):
                return L / (2 * math.pi) * math.log(sc.leading(L, K, w) / legsc.leading(L, K, w, leg))
            res = find_Kc_gap_crossing(xfun, sizes, interval, opts["order"], opts["window"])
            return {"w": w, "Kc": res.value, "Kc_error": res.error, "c": None, "c_error": None,
                    "c_poly": None, "Kc_series": res.extra["Kc_series"],
                    "x_series": res.extra["x_series"]}
        res = find_Kc(lambda L, K: sc.free_energy(L, K, w), sizes, interval, mode=opts["mode"],
                      xtol=opts["xtol"], npoints=opts["npoints"], order=opts["order"],
                      shrink=opts["shrink"], window=opts["window"])
    except (NoConvergence, LoopSpectraError) as exc:
        return {"error": f"w={w}: {exc}"}
    return {"w": w, "Kc": res.value, "Kc_error": res.error, "c": res.extra["c"],
            "c_error": res.extra["c_error"], "c_poly": res.extra["c_poly"],
            "Kc_series": res.extra["Kc_series"], "c_series": res.extra["c_series"]}


def _node_ceff(w, model, opts, sizes, cache_dir):
    from .cft import ceff_from_free_energies
    sc = _scanner(model, w, cache_dir)
    width = 3 if opts["mode"] == "ThreePoint" else 2
    sizes = sorted(sizes)
    groups = [sizes[i:i + width] for i in range(len(sizes) - width + 1)]
    Ks = ExperimentConfig("", model, [], [], Path("."), (), False, None, 0, {}, []).values("K")
    rows = []
    try:
        for grp in groups:
            for K in Ks:
                c = ceff_from_free_energies([(L, sc.free_energy(L, K, w)) for L in grp],
                                            opts["mode"])
                rows.append((w, K, grp[-1], c))
    except LoopSpectraError as exc:
        return {"error": f"w={w}: {exc}", "rows": rows}
    return {"rows": rows}


def exponent_table(series: dict, beta2: float, levels: int = 8, order: int = 2, window: int = 3,
                   match_window: float = 0.05):
    """Rows (No., Mult., x_numeric, x_exact_guess) from {L: levels} by index tracking.

    Level i at each size is the i-th distinct modulus; its x(L) values over
    the last ``window`` sizes are extrapolated polynomially in 1/L^2.
    """
    from .cft import extrapolate_invL2, match_exponent
    sizes = sorted(series)
    rows = []
    for i in range(levels):
        pts = [(L, series[L][i]["x"]) for L in sizes if len(series[L]) > i]
        if not pts:
            break
        pts = pts[-window:]
        if len(pts) > 1:
            x = extrapolate_invL2(pts, min(order, len(pts) - 1)).value
        else:
            x = pts[0][1]
        mult = series[sizes[-1]][i]["mult"] if len(series[sizes[-1]]) > i else None
        hit = match_exponent(x, beta2, window=match_window)
        rows.append((i + 1, mult, x, hit[1] if hit else "?"))
    return rows


def _node_exponents(tag, model, opts, sizes, cache_dir):
    from .cft import beta_from_n
    from .scans import exponent_series
    w = ExperimentConfig("", model, [], [], Path("."), (), False, None, 0, {}, []).values("w")
    w = w[0] if w else 0.0
    K = float(model["K"] if not isinstance(model["K"], list) else model["K"][0])
    sector = parse_sector(tag)
    sc = _scanner(model, w, cache_dir, sector)
    ref = _scanner(model, w, cache_dir)
    try:
        series = exponent_series(sc, sizes, K, w, sector, k=opts["k"],
                                 drop_complex=opts["drop_complex"], reference=ref)
    except LoopSpectraError as exc:
        return {"error": f"sector {tag}: {exc}"}
    beta2 = beta_from_n(model["n"], opts["branch"])
    rows = exponent_table(series, beta2, opts["levels"], opts["order"], opts["window"],
                          opts["match_window"])
    return {"tag": tag, "rows": rows,
            "series": {str(L): [[lv["x"], lv["mult"], lv["spin"], lv["complex"]] for lv in lv_]
                       for L, lv_ in series.items()}}


def defect_check_rows(families, sizes, n_values, tol=1e-12):
    """Commutator and eigenvalue identities of D as (check, family, N, n, value, tol, pass)."""
    from .basis import SectorBasis
    from .defects import build_D, commutator_norm, defect_eigenvalue
    from .ops import generator_operator
    from .params import LoopParams
    rows = []
    for fam_name in families:
        fam = AlgebraFamily(Kind(fam_name), Boundary.Periodic)
        for N in sizes:
            for n in n_values:
                loop = LoopParams.from_n(n)
                sectors = [Sector.identity()] if fam.dilute or N % 2 == 0 else []
                for lines in range(1 if fam.dilute else N % 2, N + 1, 1 if fam.dilute else 2):
                    if lines == 0:
                        continue
                    r = Fraction(lines, 2)
                    sectors.append(Sector.standard(r, 0))
                    if lines >= 2:
                        # smallest nonzero admissible pseudomomentum, exp(2 i pi r s) = 1
                        sectors.append(Sector.standard(r, Fraction(2, lines)))
                for sec in sectors:
                    basis = SectorBasis(fam, N, sec, loop)
                    if basis.dim == 0:
                        continue
                    D = build_D(basis)
                    worst = 0.0
                    for i in range(1, N + 1):
                        worst = max(worst, commutator_norm(D, generator_operator(basis, ("e", i))))
                    worst = max(worst, commutator_norm(D, generator_operator(basis, ("tau",))))
                    rows.append(("commutator", fam_name, N, n, sec.tag(), worst, tol, worst <= tol))
                    lam = defect_eigenvalue(sec.r, sec.s or 0, loop.q,
                                            identity_like=sec.identity_like)
                    dev = float(np.max(np.abs(D.dense() - lam * np.eye(basis.dim))))
                    rows.append(("eigenvalue", fam_name, N, n, sec.tag(), dev, 1e-10, dev <= 1e-10))
    return rows


DEFAULT_PATCHES = [
    {"width": 2, "height": 2}, {"width": 3, "height": 2}, {"width": 2, "height": 3},
    {"width": 3, "height": 3, "K": 0.7}, {"width": 3, "height": 3, "crossings": True, "w": 0.6},
    {"width": 2, "height": 2, "mu": 0.5}, {"width": 3, "height": 2, "defect_row": 0},
]


def oracle_rows(patches, n: float, tol=1e-10):
    from .oracle.patch import DefectPath, LatticePatch, enumerate_Z, transfer_Z
    rows = []
    for p in patches:
        W, H = p["width"], p["height"]
        defect = None
        if "defect_row" in p:
            defect = DefectPath((0, p["defect_row"]), "R" * W, p.get("variant", "Over"))
        patch = LatticePatch(W, H, n=n, K=p.get("K", 0.5), w=p.get("w", 0.0), mu=p.get("mu"),
                             crossings=p.get("crossings", False), defect=defect)
        z1 = complex(enumerate_Z(patch))
        z2 = complex(transfer_Z(patch))
        rel = abs(z1 - z2) / max(abs(z1), 1e-300)
        rows.append((W, H, patch.K, patch.w, patch.mu if patch.mu is not None else 0.0,
                     defect is not None, z1.real, z2.real, rel, rel <= tol))
    return rows


# ---------------------------------------------------------------------------
# runner

@dataclass
class RunResult:
    out_dir: Path
    files: list
    ok: bool
    failures: list
    tables: list


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def run_experiment(config, jobs: int = 1, cache_dir=None, seed: int | None = None,
                   out_dir=None) -> RunResult:
    """Run one configured task and write its tables; ok is False if anything failed to converge."""
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    if seed is not None:
        cfg.seed = seed
    cdir = resolve_cache_dir(cfg, cache_dir)
    out = Path(out_dir) if out_dir else cfg.output_dir
    model, opts, sizes = cfg.model, cfg.options, sorted(cfg.sizes)
    tables, failures = [], []
    ws = cfg.values("w") or [0.0]

    if cfg.task == "spectrum":
        items = [(w, K, L, tag) for w in ws for K in cfg.values("K") for L in sizes
                 for tag in cfg.sectors]
        res = _map(partial(_node_spectrum, model=model, opts=opts, cache_dir=cdir), items, jobs)
        rows, records = [], []
        for (w, K, L, tag), r in zip(items, res):
            if "error" in r:
                failures.append(r["error"])
                continue
            rec = r["record"]
            records.append(rec)
            for i, e in enumerate(rec["eigenvalues"]):
                rows.append((w, K, L, tag, i, e["re"], e["im"], math.hypot(e["re"], e["im"]),
                             e["residual"]))
        tables.append(Table("spectrum", ["w", "K", "L", "sector", "index", "re", "im",
                                         "modulus", "residual"], rows, {"records": records}))

    elif cfg.task == "ceff-sweep":
        res = _map(partial(_node_ceff, model=model, opts=opts, sizes=sizes, cache_dir=cdir), ws, jobs)
        rows = []
        for r in res:
            if "error" in r:
                failures.append(r["error"])
            rows.extend(r["rows"])
        tables.append(Table("ceff", ["w", "K", "L", "c_eff"], rows, {"mode": opts["mode"]}))
        curves = {}
        for w, K, L, c in rows:
            curves.setdefault((w, L), []).append((K, c))
        for (w, L), pairs in sorted(curves.items()):
            write_gnuplot(out / f"ceff_w{format(w, 'g')}_L{L}.dat", pairs,
                          f"K c_eff  w={format(w, 'g')} L={L} {opts['mode']} config {cfg.hash}")

    elif cfg.task == "find-kc":
        res = _map(partial(_node_find_kc, model=model, opts=opts, sizes=sizes, cache_dir=cdir), ws, jobs)
        rows, details = [], []
        for r in res:
            if "error" in r:
                failures.append(r["error"])
                continue
            rows.append((r["w"], r["Kc"], r["c"]))
            details.append(r)
        tables.append(Table("kc", ["w", "K_c", "c"], rows, {"fits": details}))

    elif cfg.task == "exponents":
        res = _map(partial(_node_exponents, model=model, opts=opts, sizes=sizes, cache_dir=cdir),
                   cfg.sectors, jobs)
        for r in res:
            if "error" in r:
                failures.append(r["error"])
                continue
            safe = "".join(ch if ch.isalnum() else "_" for ch in r["tag"]).strip("_") or "identity"
            tables.append(Table(f"exponents_{safe}", ["No.", "Mult.", "x_numeric", "x_exact_guess"],
                                r["rows"], {"sector": r["tag"], "levels_by_L": r["series"]}))

    elif cfg.task == "defect-checks":
        N_values = sizes or list(range(2, 7))
        if max(N_values) > 8:
            raise ConfigInvalid("$.sizes", "defect checks run at N <= 8")
        rows = defect_check_rows(opts["families"], N_values, opts["n_values"], opts["tol"])
        failures += [f"{r[0]} {r[1]} N={r[2]} n={r[3]} {r[4]}: {r[5]:.3e}" for r in rows if not r[-1]]
        tables.append(Table("defect_checks", ["check", "family", "N", "n", "sector", "value",
                                              "tolerance", "pass"], rows))

    elif cfg.task == "oracle-crosscheck":
        rows = oracle_rows(cfg.patches or DEFAULT_PATCHES, model.get("n", 1.0), opts["tol"])
        failures += [f"patch {r[0]}x{r[1]}: relative difference {r[8]:.3e}" for r in rows if not r[-1]]
        tables.append(Table("oracle_crosscheck", ["W", "H", "K", "w", "mu", "defect", "Z_enumerated",
                                                  "Z_transfer", "rel_diff", "pass"], rows))

    files = []
    params = {"task": cfg.task, "model": model, "sizes": sizes, "sectors": cfg.sectors,
              "options": opts, "seed": cfg.seed}
    for t in tables:
        if not t.rows:
            failures.append(f"{t.name}: no results")
            continue
        for fmt in cfg.formats:
            files.append(emit_table(t, fmt, out, cfg.hash, params))
    return RunResult(out, files, not failures, failures, tables)
