"""Command line: ``run``, ``sweep``, ``soliton`` and ``fit``.

Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import evolution as ev
from . import lab
from . import solitons as so
from . import spectral as sp
from .config import ConfigError
from .registry import NAMES, SCALES

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _print(obj) -> None:
    print(json.dumps(lab._json_safe(obj), indent=2, sort_keys=True))


def cmd_run(args) -> int:
    res = lab.run_experiment(args.target, scale=args.scale, out=args.out)
    _print({"directory": str(res.directory), "fits": res.fits})
    return EXIT_OK


def cmd_sweep(args) -> int:
    eps = [float(e) for e in args.eps.split(",")] if args.eps else None
    res = lab.run_sweep(args.target, scale=args.scale, eps=eps, out=args.out)
    _print({"directory": str(res.directory), "eps": res.eps, "t_star": res.t_star,
            "a": res.regression.a, "b": res.regression.b, "sigma_a": res.regression.sigma_a,
            "r": res.regression.r})
    return EXIT_OK


def cmd_soliton(args) -> int:
    if not 0.4 <= args.alpha <= 1:
        raise ConfigError("--alpha must lie in [0.4, 1]")
    if not args.c > 0:
        raise ConfigError("--c must be positive")
    q1 = lab.reference_soliton(args.alpha, args.scale)
    f = so.rescale_soliton(q1, args.c) if args.c != 1 else q1.values
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prof = so.SolitonProfile(q1.alpha, args.c, q1.grid, f, q1.residual_norm, q1.provenance)
    so.write_profile(out / "profile.csv", out / "profile.meta", prof)
    _print({"alpha": prof.alpha, "c": prof.c, "max": prof.peak, "mass": prof.mass(),
            "energy": prof.energy(), "residual_norm": prof.residual_norm, "directory": str(out)})
    return EXIT_OK


def cmd_fit(args) -> int:
    path = args.path
    if args.kind == "norms":
        d = ev.read_diagnostics_csv(path)
        column = {"sup": "sup_norm", "grad": "grad_l2"}[args.norm]
        vals = d[column] ** 2 if args.norm == "grad" else d[column]
        lo, hi = (float(x) for x in args.window.split(",")) if args.window else (d["t"][0], d["t"][-1])
        fit = an.fit_blowup_norms(d["t"], vals, (lo, hi))
        _print(fit.report())
    else:
        if args.w is None:
            raise ConfigError("fit fourier needs --w (domain scale of the snapshot)")
        f = ev.read_snapshot_csv(path, args.w)
        _print(an.fit_fourier_asymptotics(f, noise_floor=args.noise_floor).report())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dispersive-burgers", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a preset or a config file")
    r.add_argument("target", help=f"preset ({', '.join(NAMES)}) or config path")
    r.add_argument("--scale", choices=SCALES, default="full")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="epsilon sweep and log-log regression")
    s.add_argument("target")
    s.add_argument("--eps", default=None, help="comma separated epsilon values")
    s.add_argument("--scale", choices=SCALES, default="full")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)

    q = sub.add_parser("soliton", help="construct a c-speed solitary wave by continuation in alpha")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--c", type=float, default=1.0)
    q.add_argument("--scale", choices=SCALES, default="desk")
    q.add_argument("--out", default="soliton")
    q.set_defaults(func=cmd_soliton)

    f = sub.add_parser("fit", help="fit norms of a diagnostics CSV or Fourier coefficients of a snapshot")
    f.add_argument("kind", choices=("fourier", "norms"))
    f.add_argument("path")
    f.add_argument("--norm", choices=("sup", "grad"), default="sup")
    f.add_argument("--window", default=None, help="lo,hi")
    f.add_argument("--w", type=float, default=None)
    f.add_argument("--noise-floor", type=float, default=1e-13)
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ev.ModelError, sp.SpectralError, KeyError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (lab.NumericalFailure, an.AnalysisError, so.SolitonError, ev.StepError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
