"""Command line entry point: ``loopspectra <subcommand> ...``."""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .errors import ConfigInvalid, LoopSpectraError

CONFIG_TASKS = {
    "spectrum": "spectrum",
    "fit-c": "ceff-sweep",
    "find-kc": "find-kc",
    "exponents": "exponents",
    "defect-checks": "defect-checks",
    "oracle-crosscheck": "oracle-crosscheck",
}


def _common(p, required=True):
    p.add_argument("--config", required=required, help="experiment config (JSON)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loopspectra",
                                 description="Transfer-matrix spectroscopy of loop models with defect lines.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in CONFIG_TASKS:
        _common(sub.add_parser(name))

    p = sub.add_parser("defect-eig", help="closed-form eigenvalue of D on W_(r,s)")
    p.add_argument("--r", required=True)
    p.add_argument("--s", required=True)
    p.add_argument("--n", required=True, type=float)
    p.add_argument("--under", action="store_true")

    p = sub.add_parser("oracle-z", help="enumerated patch partition function")
    _common(p, required=False)
    p.add_argument("--width", type=int, default=2)
    p.add_argument("--height", type=int, default=2)
    p.add_argument("--n", type=float, default=None, help="numeric n (symbolic in n if omitted)")
    p.add_argument("--K", type=float, default=None, help="numeric K (symbolic if omitted)")
    p.add_argument("--w", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--crossings", action="store_true")

    p = sub.add_parser("kac", help="Kac exponents x_(r,s) on a grid")
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--beta2", type=float, default=None)
    p.add_argument("--branch", choices=("dilute", "dense"), default="dilute")
    p.add_argument("--rmax", type=float, default=3)
    p.add_argument("--smax", type=int, default=2)
    return ap


def _run_config(args, task) -> int:
    from .harness import load_config, run_experiment
    cfg = load_config(args.config)
    if cfg.task != task:
        raise ConfigInvalid("$.task", f"config task {cfg.task!r} does not match subcommand ({task})")
    res = run_experiment(cfg, jobs=args.jobs, cache_dir=args.cache_dir, seed=args.seed,
                         out_dir=args.out)
    for f in res.files:
        print(f)
    for msg in res.failures:
        print(f"FAILED: {msg}", file=sys.stderr)
    return 0 if res.ok else 1


def _defect_eig(args) -> int:
    from .defects import defect_eigenvalue
    from .params import q_from_n
    lam = defect_eigenvalue(Fraction(args.r), Fraction(args.s), q_from_n(args.n),
                            variant="Under" if args.under else "Over")
    print(f"{lam.real:.15g} {lam.imag:.15g}")
    return 0


def _oracle_z(args) -> int:
    from .oracle.patch import LatticePatch, enumerate_Z, poly_string
    W, H = args.width, args.height
    n, K, w, mu, crossings = args.n, args.K, args.w, args.mu, args.crossings
    if args.config:
        from .harness import load_config
        cfg = load_config(args.config)
        if not cfg.patches:
            raise ConfigInvalid("$.patches", "oracle-z needs one patch")
        p = cfg.patches[0]
        W, H = p["width"], p["height"]
        K, w, mu = p.get("K", K), p.get("w", w), p.get("mu", mu)
        crossings = p.get("crossings", crossings)
        n = cfg.model.get("n", n)
    patch = LatticePatch(W, H, n=1.0 if n is None else n, K=1.0 if K is None else K, w=w, mu=mu,
                         crossings=crossings)
    if n is None or K is None:
        poly = enumerate_Z(patch, symbolic=True)
        print(poly_string(poly))
    else:
        z = complex(enumerate_Z(patch))
        print(f"{z.real:.15g}")
    return 0


def _kac(args) -> int:
    from .cft import beta_from_n, kac_exponent, kac_grid
    if args.beta2 is None and args.n is None:
        raise ConfigInvalid("--n/--beta2", "give one of them")
    beta2 = args.beta2 if args.beta2 is not None else beta_from_n(args.n, args.branch)
    print("r,s,Delta_rs,Delta_r-s,x")
    for r, s in kac_grid(args.rmax, args.smax):
        d1, d2, x = kac_exponent(r, s, beta2)
        print(f"{r},{s},{d1:.12g},{d2:.12g},{x:.12g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd in CONFIG_TASKS:
            return _run_config(args, CONFIG_TASKS[args.cmd])
        if args.cmd == "defect-eig":
            return _defect_eig(args)
        if args.cmd == "oracle-z":
            return _oracle_z(args)
        if args.cmd == "kac":
            return _kac(args)
    except ConfigInvalid as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except LoopSpectraError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
