"""
Command line entry point ``viscolab``.

Subcommands
-----------
run          run every experiment listed in a TOML config
list         print the experiment catalog
cell-table   tabulate the homogenized flux of the configured flux
shock-build  build one standing shock profile

Exit codes: 0 all verdicts pass, 1 at least one verdict failed,
2 configuration error, 3 solver error.
"""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as C
from .cell import homogenized_flux_table
from .errors import ConfigError, ViscolabError
from .experiments import CATALOG, list_experiments, run_entry
from .shock import ShockFamily
from .stability import _jsonable

log = logging.getLogger("viscolab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_OUT = "viscolab_out"


def _out_dir(args, cfg):
    return args.out or os.environ.get("VISCOLAB_OUT") or cfg.get("output") or DEFAULT_OUT


def _label(entry, index):
    return entry.get("label") or f"{index:02d}_{entry['name']}"


def _run_one(cfg, index, seed, out):
    entry = cfg["experiments"][index]
    rep = run_entry(cfg, entry, seed, index)
    path = os.path.join(out, _label(entry, index))
    rep.write(path)
    return {"label": _label(entry, index), "name": entry["name"], "passed": rep.passed,
            "failed": [v.criterion for v in rep.verdicts if not v.passed]}


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args):
    cfg = C.load(args.config, CATALOG)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    out = _out_dir(args, cfg)
    os.makedirs(out, exist_ok=True)
    n = len(cfg.get("experiments", []))
    if args.jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_run_one, cfg, i, seed, out) for i in range(n)]
            rows = [f.result() for f in futures]
    else:
        rows = [_run_one(cfg, i, seed, out) for i in range(n)]
    n_pass = sum(r["passed"] for r in rows)
    summary = {"seed": seed, "n_experiments": n, "n_passed": n_pass, "n_failed": n - n_pass,
               "experiments": rows}
    _write_json(os.path.join(out, "summary.json"), summary)
    for r in rows:
        status = "PASS" if r["passed"] else "FAIL " + ",".join(r["failed"])
        print(f"{r['label']}: {status}")
    print(f"{n_pass}/{n} experiments passed; results in {out}")
    return EXIT_OK if n_pass == n else EXIT_FAIL


def cmd_list(args):
    items = list_experiments()
    if args.json:
        print(json.dumps(items, indent=2, sort_keys=True))
    else:
        for it in items:
            print(f"{it['name']:22s} {it['description']}")
            print(f"{'':22s} targets: {it['targets']}")
    return EXIT_OK


def _load_optional(path):
    if path is None:
        return {}
    return C.load(path, CATALOG)


def cmd_cell_table(args):
    cfg = _load_optional(args.config)
    flux = C.build_flux(cfg.get("flux"))
    cell_tol, _, _ = C.tolerances(cfg.get("tolerances"))
    tab = dict(cfg.get("cell_table", {}))
    for key in ("p_min", "p_max", "n_points"):
        if getattr(args, key) is not None:
            tab[key] = getattr(args, key)
    table = homogenized_flux_table(flux, tab.get("p_min", -2.0), tab.get("p_max", 2.0),
                                   tab.get("n_points", 21), cell_tol)
    out = _out_dir(args, cfg)
    os.makedirs(out, exist_ok=True)
    table.to_csv(os.path.join(out, "cell_table.csv"))
    print(f"wrote {len(table.p_samples)} rows to {os.path.join(out, 'cell_table.csv')}")
    return EXIT_OK


def cmd_shock_build(args):
    cfg = _load_optional(args.config)
    flux = C.build_flux(cfg.get("flux"))
    cell_tol, shock_tol, _ = C.tolerances(cfg.get("tolerances"))
    sh = dict(cfg.get("shock", {}))
    for key in ("alpha", "xi0", "half_length"):
        if getattr(args, key) is not None:
            sh[key] = getattr(args, key)
    if "alpha" not in sh or "xi0" not in sh:
        raise ConfigError("shock/alpha and shock/xi0 are required (config or flags)")
    fam = ShockFamily(flux, sh["alpha"], p_range=(sh.get("p_min", -5.0), sh.get("p_max", 5.0)),
                      cell_tol=cell_tol, tol=shock_tol)
    U = fam.build(sh["xi0"], sh.get("half_length"))
    out = _out_dir(args, cfg)
    os.makedirs(out, exist_ok=True)
    U.to_csv(os.path.join(out, "shock_profile.csv"))
    _write_json(os.path.join(out, "shock_summary.json"), U.summary())
    print(f"shock q_left={U.q_left:.6g} q_right={U.q_right:.6g} "
          f"rates=({U.rate_left:.4g}, {U.rate_right:.4g}); results in {out}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="viscolab",
                                description="Periodic viscous balance law experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiments of a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list", help="list available experiments")
    ls.add_argument("--json", action="store_true")
    ls.set_defaults(func=cmd_list)

    c = sub.add_parser("cell-table", help="tabulate the homogenized flux")
    c.add_argument("--config")
    c.add_argument("--out")
    c.add_argument("--p-min", dest="p_min", type=float)
    c.add_argument("--p-max", dest="p_max", type=float)
    c.add_argument("--n-points", dest="n_points", type=int)
    c.set_defaults(func=cmd_cell_table)

    s = sub.add_parser("shock-build", help="build one standing shock")
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--alpha", type=float)
    s.add_argument("--xi0", type=float)
    s.add_argument("--half-length", dest="half_length", type=float)
    s.set_defaults(func=cmd_shock_build)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    np.seterr(over="ignore")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ViscolabError, FloatingPointError, ArithmeticError) as err:
        print(f"solver error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
