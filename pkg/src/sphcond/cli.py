"""Command-line interface: ``sphcond <subcommand> ...``.

Every subcommand prints one JSON document on stdout. Files go to
``--out-dir`` together with a ``manifest.json`` describing the run. Exit
codes: 0 ok, 2 infeasible, 3 bad input, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ambisonics import DecoderKind, direction_sweep
from .errors import (DegenerateGeometryError, DomainError, InfeasibleError, RankDeficientError,
                     SolverBudgetExceeded)
from .geometry import d_measure
from .hrtf import run_ecc_mcc_protocol
from .optimize import HoopConstraintSet, SolverConfig, SolverMode, sweep_transitions
from .points import PointSet, read_pointset, to_interaural, write_pointset
from .reproduce import recipe_table1, recipe_table2, recipe_table3, recipe_toy
from .sampling import (cipic_grid, gen_ecc, gen_equiangular, gen_fibonacci, gen_gaussian, gen_mcc,
                       load_tdesign, tdesign_names)
from .sh import AngleMode, Basis, build_shm, eigen_summary, gram

EXIT_OK, EXIT_INFEASIBLE, EXIT_BAD_INPUT, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("sphcond")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for infeasibility here
    def error(self, message):
        raise UsageError(message)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def _sanitize(o):
    """Map non-finite floats to strings so the output stays strict JSON."""
    if isinstance(o, float) and not math.isfinite(o):
        return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
    if isinstance(o, dict):
        return {k: _sanitize(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_sanitize(v) for v in o]
    if isinstance(o, np.ndarray):
        return _sanitize(o.tolist())
    if isinstance(o, np.floating):
        return _sanitize(float(o))
    return o


def dumps(obj) -> str:
    return json.dumps(_sanitize(obj), default=_json_default, allow_nan=False)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ----------------------------------------------------------------- inputs
def _add_points_args(p, required=False):
    g = p.add_argument_group("points")
    g.add_argument("--points", type=Path, help="point-set CSV (theta,phi) with optional JSON sidecar")
    g.add_argument("--scheme", choices=["fibonacci", "gaussian", "equiangular", "tdesign", "cipic", "ecc", "mcc"],
                   help="generate the points instead of reading them")
    g.add_argument("--q", type=int, help="number of points (fibonacci)")
    g.add_argument("--scheme-order", type=int, help="order of gaussian / equiangular grids")
    g.add_argument("--name", help="t-design name, e.g. T5Q12")


def _generate(scheme, q=None, order=None, name=None) -> PointSet:
    if scheme == "fibonacci":
        if q is None:
            raise DomainError("fibonacci needs --q")
        return gen_fibonacci(q)
    if scheme in ("gaussian", "equiangular"):
        if order is None:
            raise DomainError(f"{scheme} needs --scheme-order")
        return gen_gaussian(order) if scheme == "gaussian" else gen_equiangular(order)
    if scheme == "tdesign":
        if name is None:
            raise DomainError(f"tdesign needs --name (one of {tdesign_names()})")
        return load_tdesign(name)
    return {"cipic": cipic_grid, "ecc": gen_ecc, "mcc": gen_mcc}[scheme]()


def _points(args, inputs, which="points") -> PointSet:
    path = getattr(args, which, None)
    if path is not None:
        inputs.append(path)
        return read_pointset(path)
    if getattr(args, "scheme", None):
        return _generate(args.scheme, args.q, args.scheme_order, args.name)
    raise DomainError("give --points FILE or --scheme NAME")


def _cfg(args) -> SolverConfig:
    return SolverConfig(mode=SolverMode(args.solver), epsilon=args.epsilon, seed=args.seed,
                        restarts=args.restarts, threads=args.threads,
                        max_transitions=args.max_transitions)


def _add_solver_args(p, default="local"):
    p.add_argument("--solver", choices=["exact", "local"], default=default)
    p.add_argument("--epsilon", type=float, default=1e-7)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--max-transitions", type=int, default=None)


def _out(args, name) -> Path | None:
    if args.out_dir is None:
        return None
    args.out_dir.mkdir(parents=True, exist_ok=True)
    return args.out_dir / name


# ----------------------------------------------------------------- commands
def cmd_gen(args, inputs, outputs):
    if args.scheme_pos:
        args.scheme = args.scheme_pos
    pts = _points(args, inputs)
    path = Path(args.output) if args.output else _out(args, f"{args.scheme}.csv")
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        outputs.extend(write_pointset(pts, path))
    return {"scheme": args.scheme, "q": len(pts), "convention": pts.convention.value,
            "file": None if path is None else str(path),
            "theta": pts.theta, "phi": pts.phi}


def cmd_dmeasure(args, inputs, outputs):
    pts = _points(args, inputs)
    return d_measure(pts).to_dict()


def cmd_analyze(args, inputs, outputs):
    pts = _points(args, inputs)
    shm = build_shm(pts, args.order, Basis(args.basis), AngleMode(args.angle_mode))
    eig = eigen_summary(gram(shm))
    try:
        dm = d_measure(pts).to_dict()
    except DegenerateGeometryError as exc:
        dm = {"error": str(exc)}
    return {"q": shm.Q, "p": shm.P, "order": args.order, "basis": shm.basis.value,
            "angle_mode": shm.angle_mode.value, "kappa": eig.kappa,
            "eigen": {"lambda_min": eig.lambda_min, "lambda_max": eig.lambda_max},
            "d_measure": dm}


def cmd_optimize(args, inputs, outputs):
    pts = _points(args, inputs)
    hoops = None
    if args.hoops is not None:
        inputs.append(args.hoops)
        hoops = HoopConstraintSet.from_dict(json.loads(args.hoops.read_text()))
    shm = build_shm(pts, args.order, Basis(args.basis), AngleMode(args.angle_mode))
    trace = sweep_transitions(shm, args.q_prime, hoops, _cfg(args))
    result = {"q": shm.Q, "order": args.order, "q_prime": args.q_prime, "kappa_full": shm.kappa,
              **trace.to_dict()}
    if trace.best_mask is not None:
        path = _out(args, "selected.csv")
        if path is not None:
            outputs.extend(write_pointset(pts.subset(trace.best_mask.indices()), path))
    if not trace.feasible:
        result["_exit"] = EXIT_INFEASIBLE
    return result


def _write_rows(path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{x:.12g}" for x in r])


def cmd_ambi_eval(args, inputs, outputs):
    a = _points(args, inputs, "a")
    b = _points(args, inputs, "b")
    cmp = direction_sweep(a, b, args.order, args.eval_order, kind=DecoderKind(args.decoder),
                          threads=args.threads)
    col, az = cmp.directions.colatitude, cmp.directions.phi
    for tag, xi in (("a", cmp.xi_a), ("b", cmp.xi_b)):
        path = _out(args, f"xi_{tag}.csv")
        if path is not None:
            _write_rows(path, ["azimuth_deg", "elevation_deg", "xi"],
                        zip(np.rad2deg(az), 90 - np.rad2deg(col), xi))
            outputs.append(path)
    return {"order": args.order, "eval_order": args.eval_order or args.order, **cmp.to_dict()}


def cmd_hrtf_eval(args, inputs, outputs):
    rep = run_ecc_mcc_protocol(args.order, args.seed, args.noise, args.field_order)
    lat, pol = to_interaural(rep.evaluation)
    for tag, vals in (("ecc", rep.lsd_ecc), ("mcc", rep.lsd_mcc)):
        path = _out(args, f"lsd_{tag}.csv")
        if path is not None:
            _write_rows(path, ["lateral_deg", "elevation_deg", "lsd_db"],
                        zip(np.rad2deg(lat), np.rad2deg(pol), vals))
            outputs.append(path)
    return rep.to_dict()


def cmd_reproduce(args, inputs, outputs):
    cfg = SolverConfig(mode=SolverMode.LOCAL_SEARCH, seed=args.seed, restarts=args.restarts,
                       threads=args.threads)
    if args.table == "appendixC":
        return recipe_toy()
    if args.table == "table1":
        return recipe_table1(qs=args.q or [100], cfg=cfg)
    if args.table == "table2":
        rows = args.row or ["tdesign", "fibonacci", "gaussian", "proposed"]
        return recipe_table2(rows=rows, cfg=cfg)
    return recipe_table3(cfg=cfg, threads=args.threads)


# ----------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphcond", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (SPHCOND_SEED overrides)")
    common.add_argument("--threads", type=int, default=0, help="worker threads; 0 = all cores")
    common.add_argument("--out-dir", type=Path, default=None, help="directory for files and manifest")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a sampling scheme")
    p.add_argument("scheme_pos", nargs="?", metavar="SCHEME")
    _add_points_args(p)
    p.add_argument("--output", help="CSV path (default <out-dir>/<scheme>.csv)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dmeasure", parents=[common], help="Voronoi D-measure of a point set")
    _add_points_args(p)
    p.set_defaults(func=cmd_dmeasure)

    for name, func, helptext in (("analyze", cmd_analyze, "condition number and uniformity"),
                                 ("optimize", cmd_optimize, "condition-number driven subset selection")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        _add_points_args(p)
        p.add_argument("--order", type=int, required=True)
        p.add_argument("--basis", choices=[b.value for b in Basis], default="complex")
        p.add_argument("--real-basis", dest="basis", action="store_const", const="real")
        p.add_argument("--angle-mode", choices=[m.value for m in AngleMode], default="geometric")
        if name == "optimize":
            p.add_argument("--q-prime", type=int, required=True)
            p.add_argument("--hoops", type=Path, help='JSON {"membership": [...], "caps": [...]}')
            _add_solver_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("ambi-eval", parents=[common], help="compare two loudspeaker layouts")
    p.add_argument("--a", type=Path, required=True, help="layout A point-set CSV")
    p.add_argument("--b", type=Path, required=True, help="layout B point-set CSV")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--eval-order", type=int, default=None)
    p.add_argument("--decoder", choices=[k.value for k in DecoderKind], default="pinv")
    p.set_defaults(func=cmd_ambi_eval)

    p = sub.add_parser("hrtf-eval", parents=[common], help="ECC vs MCC interpolation study")
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--field-order", type=int, default=None)
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_hrtf_eval)

    p = sub.add_parser("reproduce", parents=[common], help="recompute a reference table")
    p.add_argument("table", choices=["table1", "table2", "table3", "appendixC"])
    p.add_argument("--q", type=int, action="append", help="table1: pool size (repeatable)")
    p.add_argument("--row", action="append", choices=["tdesign", "fibonacci", "gaussian", "proposed"],
                   help="table2: row (repeatable)")
    p.add_argument("--restarts", type=int, default=4)
    p.set_defaults(func=cmd_reproduce)
    return parser


def _manifest(argv, args, inputs, outputs, started, result_text):
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
              if k not in ("func", "out_dir", "verbose")}
    return {
        "command_line": ["sphcond", *argv],
        "seed": args.seed,
        "config_hash": hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest(),
        "tool_version": __version__,
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "inputs": {str(p): _digest(Path(p)) for p in inputs},
        "outputs": {str(p): _digest(Path(p)) for p in outputs},
        "result_sha256": hashlib.sha256(result_text.encode()).hexdigest(),
    }


def _fail(code, exc):
    print(dumps({"error": {"type": type(exc).__name__, "message": str(exc),
                           **({"kappa": exc.kappa} if isinstance(exc, RankDeficientError) else {})}}))
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_BAD_INPUT, exc)
    env_seed = os.environ.get("SPHCOND_SEED")
    if env_seed is not None:
        try:
            args.seed = int(env_seed)
        except ValueError:
            return _fail(EXIT_BAD_INPUT, DomainError(f"SPHCOND_SEED={env_seed!r} is not an integer"))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    inputs, outputs = [], []
    try:
        result = args.func(args, inputs, outputs)
    except InfeasibleError as exc:
        return _fail(EXIT_INFEASIBLE, exc)
    except (RankDeficientError, SolverBudgetExceeded, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (DomainError, DegenerateGeometryError, ValueError, KeyError, OSError) as exc:
        return _fail(EXIT_BAD_INPUT, exc)
    code = result.pop("_exit", EXIT_OK) if isinstance(result, dict) else EXIT_OK
    text = dumps(result)
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / "result.json").write_text(text)
        outputs.append(args.out_dir / "result.json")
        (args.out_dir / "manifest.json").write_text(
            dumps(_manifest(argv, args, inputs, outputs, started, text)))
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
