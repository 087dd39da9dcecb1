"""Command-line front end.

Subcommands: ``weight check``, ``mrs``, ``basis``, ``approx``, ``modulus``,
``verify`` and ``monotone``. Each builds a :class:`RunConfig` (optionally
seeded from ``--config FILE``; explicit flags win) and hands it to
:func:`run`, which returns the process exit code: 0 on pass, 2 when a check
completes with a failing verdict, 1 on error. Errors are printed to stderr as
JSON ``{module, code, message}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import NotReached, WeightApproxError
from .weights import FREUD, ITEREXP, TOWER, WeightSpec

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

FAMILY_ALIASES = {
    "freudpower": FREUD, "freud": FREUD,
    "iterexp": ITEREXP, "erdos": ITEREXP,
    "powertower": TOWER, "tower": TOWER,
}
THEOREMS = ("2.3", "2.4", "2.5", "3.6", "3.7", "4.1", "jackson", "bernstein")


def fmt(v):
    """Fixed 17-significant-digit formatting for floats."""
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunConfig:
    command: str
    family: str = FREUD
    alpha: float = 2.0
    c: float = 1.0
    l: int = 1
    m: float = 0.0
    f: str | None = None
    n: int | None = None
    n_list: list = field(default_factory=list)
    nmax: int | None = None
    p: float = math.inf
    r: int = 1
    t: float | None = None
    x: list = field(default_factory=list)
    theorem: str | None = None
    variant: int = 1
    beta: float = 1.5
    delta: float | None = None
    M: float = 1.0
    op: str = "1*d1"
    n_max: int = 30
    n_min: int = 1
    seed: int = 0
    samples: int = 50
    basis: str | None = None
    out: str | None = None
    summary: str | None = None
    format: str = "json"
    tolerances: dict = field(default_factory=lambda: {"stability": 10.0, "lambda": 1.1})

    def __post_init__(self):
        key = str(self.family).replace("_", "").lower()
        if key not in FAMILY_ALIASES:
            raise ValueError(f"unknown weight family {self.family!r}")
        self.family = FAMILY_ALIASES[key]
        self.p = math.inf if str(self.p).lower() in ("inf", "infinity") else float(self.p)
        self.n_list = [int(n) for n in self.n_list]
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        for name, tol in self.tolerances.items():
            if not float(tol) > 0:
                raise ValueError(f"tolerance {name!r} must be positive")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    def spec(self):
        if self.family == FREUD:
            return WeightSpec.freud(self.alpha, self.c)
        if self.family == ITEREXP:
            return WeightSpec.iterexp(self.l, self.alpha, self.m)
        return WeightSpec.power_tower(self.alpha)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["p"] = "inf" if math.isinf(self.p) else self.p
        return d


# ---------------------------------------------------------------- command bodies

def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) in (None, [], "")]
    if missing:
        raise ValueError(f"{cfg.command} needs: {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _expr(cfg):
    from .expr import parse

    _need(cfg, "f")
    return parse(cfg.f)


def _basis(cfg, nmax):
    from .orthopoly import OrthoBasis, build_basis

    if cfg.basis:
        with open(cfg.basis, encoding="utf-8") as fh:
            return OrthoBasis.from_dict(json.load(fh))
    return build_basis(cfg.spec(), nmax)


def _emit(cfg, payload, table=None):
    """JSON payload, or CSV table plus JSON summary when ``--format csv``."""
    if cfg.format == "csv" and table is not None:
        text = to_csv(*table)
        if cfg.out:
            write_atomic(cfg.out, text)
        else:
            sys.stdout.write(text)
        summary_path = cfg.summary or (cfg.out + ".summary.json" if cfg.out else None)
        if summary_path:
            write_atomic(summary_path, to_json(payload))
        else:
            sys.stderr.write(to_json(payload))
        return
    text = to_json(payload)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


def cmd_weight(cfg):
    from .weights import check_class, standard_grid

    spec = cfg.spec()
    rep = check_class(spec, standard_grid(spec), r=cfg.r, lam=cfg.tolerances.get("lambda", 1.1))
    payload = {"spec": spec.to_dict(), "passed": rep.passed, "condition_flags": rep.condition_flags,
               "lambda_hat": rep.lambda_hat, "T_min": rep.T_min, "C_qi": rep.C_qi, "K": rep.K}
    _emit(cfg, payload)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_mrs(cfg):
    from .mrs import MrsSolver

    solver = MrsSolver(cfg.spec())
    records = []
    for x in cfg.x or [1.0]:
        a = solver.mrs_number(x)
        # sigma inverts x -> a_x / x; report the relative round-trip error
        u = solver.sigma_parameter(a / x)
        records.append({"x": x, "a_x": a, "sigma_inverse_check": abs(u - x) / x})
    if cfg.format == "csv":
        _emit(cfg, {"spec": cfg.spec().to_dict()},
              (["x", "a_x", "sigma_inverse_check"], [list(r.values()) for r in records]))
        return EXIT_PASS
    text = "".join(json.dumps(_jsonable(r), sort_keys=True) + "\n" for r in records)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_basis(cfg):
    _need(cfg, "nmax")
    basis = _basis(cfg, cfg.nmax)
    payload = basis.to_dict()
    payload["gram_residual"] = basis.gram_residual
    _emit(cfg, payload)
    return EXIT_PASS


def cmd_approx(cfg):
    from .bestapprox import best_approx

    e = _expr(cfg)
    _need(cfg, "n")
    basis = _basis(cfg, cfg.nmax or cfg.n + 1)
    res = best_approx(lambda x: e(x, strict=False), basis, cfg.n, cfg.p)
    payload = res.to_dict()
    payload["f"] = cfg.f
    _emit(cfg, payload)
    return EXIT_PASS


def cmd_modulus(cfg):
    from .modulus import omega
    from .mrs import MrsSolver

    e = _expr(cfg)
    _need(cfg, "t")
    rep = omega(lambda x: e(x, strict=False), MrsSolver(cfg.spec()), cfg.p, cfg.t)
    _emit(cfg, rep.to_dict())
    return EXIT_PASS


def _verify_rows(cfg, spec):
    from . import theoremlab as tl

    thr = cfg.tolerances.get("stability", 10.0)
    th = cfg.theorem
    if th in ("2.3", "2.4", "2.5", "4.1"):
        e = _expr(cfg)
        _need(cfg, "n_list")
        if th == "2.3":
            table = tl.verify_thm23(e, cfg.r, spec, cfg.n_list, thr)
        elif th == "2.4":
            table = tl.verify_cor24(e, cfg.r, spec, cfg.n_list, cfg.variant, thr)
        elif th == "2.5":
            table = tl.verify_cor25(e, cfg.r, spec, cfg.n_list, thr)
        else:
            table = tl.verify_thm41(e, cfg.r, spec, cfg.n_list, cfg.p, cfg.beta, thr)
        return table.summary(), table.csv_rows(), table.verdict == "pass"
    if th in ("3.6", "3.7"):
        e = _expr(cfg)
        _need(cfg, "n_list")
        fn = tl.verify_lemma36 if th == "3.6" else tl.verify_lemma37
        results = [fn(e, spec, n) for n in cfg.n_list]
        header = list(results[0])
        key = "ratio" if th == "3.6" else "ratio_F"
        ratios = [r[key] for r in results] + ([r["ratio_S"] for r in results] if th == "3.7" else [])
        ok = all(math.isfinite(v) for v in ratios)
        return {"verdict": "pass" if ok else "fail", "empirical_C": max(ratios)}, \
            (header, [[r[h] for h in header] for r in results]), ok
    if th == "jackson":
        from .expr import differentiate
        from .modulus import JACKSON_COLUMNS, jackson_check

        e = _expr(cfg)
        _need(cfg, "n_list")
        k = cfg.r
        dk = differentiate(e, k)
        basis = tl.basis_for(spec, max(cfg.n_list) + 1)
        rep = jackson_check(lambda x: e(x, strict=False), basis, tl.solver_for(spec), cfg.p, cfg.n_list, k,
                            lambda x: dk(x, strict=False))
        thr = cfg.tolerances.get("stability", 10.0)
        ok = bool(rep["finite"] and rep["spread2"] < thr)
        summary = {"verdict": "pass" if ok else "fail", "spread1": rep["spread1"], "spread2": rep["spread2"],
                   "empirical_C": max(r.ratio2 for r in rep["rows"])}
        return summary, (JACKSON_COLUMNS, [r.as_list() for r in rep["rows"]]), ok
    if th == "bernstein":
        n_list = cfg.n_list or [8, 16, 32]
        rep = tl.bernstein_check(spec, n_list, samples=cfg.samples, seed=cfg.seed, p=cfg.p)
        rows = [[n, k, v] for (n, k), v in sorted(rep["constants"].items())]
        summary = {"verdict": "pass" if rep["passed"] else "fail", "spreads": rep["spreads"],
                   "empirical_C": max(rep["constants"].values())}
        return summary, (["n", "k", "C"], rows), rep["passed"]
    raise ValueError(f"unknown theorem {th!r}; choose from {', '.join(THEOREMS)}")


def cmd_verify(cfg):
    _need(cfg, "theorem")
    summary, table, ok = _verify_rows(cfg, cfg.spec())
    if cfg.format == "json":
        header, rows = table
        summary = dict(summary, rows=[dict(zip(header, r)) for r in rows])
    _emit(cfg, summary, table)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_monotone(cfg):
    from .expr import parse
    from .monotone import monotone_approx, parse_operator

    _need(cfg, "f", "delta")
    op = parse_operator(cfg.op)
    try:
        cert = monotone_approx(parse(cfg.f), op, cfg.delta, cfg.M, cfg.spec(), cfg.n_max, n_min=cfg.n_min)
    except NotReached as exc:
        payload = exc.certificate.to_dict() if exc.certificate else {}
        payload["error"] = exc.as_dict()
        _emit(cfg, payload)
        return EXIT_FAIL
    _emit(cfg, cert.to_dict())
    return EXIT_PASS if cert.verdict == "pass" else EXIT_FAIL


COMMANDS = {
    "weight": cmd_weight, "mrs": cmd_mrs, "basis": cmd_basis, "approx": cmd_approx,
    "modulus": cmd_modulus, "verify": cmd_verify, "monotone": cmd_monotone,
}


def run(cfg):
    """Execute a configuration; returns the exit code."""
    try:
        return COMMANDS[cfg.command](cfg)
    except WeightApproxError as exc:
        sys.stderr.write(json.dumps(exc.as_dict()) + "\n")
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({"module": "cli", "code": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_ERROR


# ---------------------------------------------------------------- argument parsing

def _float_list(s):
    return [float(v) for v in s.replace(",", " ").split()]


def _int_list(s):
    return [int(v) for v in s.replace(",", " ").split()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("weight and output")
    g.add_argument("--family", help="FreudPower, IterExp or PowerTower")
    g.add_argument("--alpha", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--l", type=int)
    g.add_argument("--m", type=float)
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--summary", help="JSON summary path for CSV output")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--seed", type=int)
    g.add_argument("--config", help="JSON file with RunConfig fields; flags override it")

    parser = argparse.ArgumentParser(prog="weightapprox", description="Weighted polynomial approximation on the line.")
    sub = parser.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weight", parents=[common], help="weight-class checks")
    w.add_argument("action", choices=["check"])
    w.add_argument("--r", type=int)

    m = sub.add_parser("mrs", parents=[common], help="MRS numbers a_x and sigma(t)")
    m.add_argument("--x", type=_float_list, help="comma-separated x values")

    b = sub.add_parser("basis", parents=[common], help="orthonormal basis export")
    b.add_argument("--nmax", type=int)

    a = sub.add_parser("approx", parents=[common], help="best approximation")
    a.add_argument("--f")
    a.add_argument("--n", type=int)
    a.add_argument("--p")
    a.add_argument("--nmax", type=int)
    a.add_argument("--basis", help="basis JSON from the basis subcommand")

    mo = sub.add_parser("modulus", parents=[common], help="modulus of smoothness")
    mo.add_argument("--f")
    mo.add_argument("--p")
    mo.add_argument("--t", type=float)

    v = sub.add_parser("verify", parents=[common], help="ratio tables for the inequalities")
    v.add_argument("--theorem", choices=THEOREMS)
    v.add_argument("--f")
    v.add_argument("--r", type=int)
    v.add_argument("--n-list", dest="n_list", type=_int_list)
    v.add_argument("--p")
    v.add_argument("--beta", type=float)
    v.add_argument("--variant", type=int, choices=[1, 2])
    v.add_argument("--samples", type=int)

    mn = sub.add_parser("monotone", parents=[common], help="operator-preserving approximation")
    mn.add_argument("--f")
    mn.add_argument("--op")
    mn.add_argument("--delta", type=float)
    mn.add_argument("--M", type=float)
    mn.add_argument("--n-max", dest="n_max", type=int)
    mn.add_argument("--n-min", dest="n_min", type=int)
    return parser


def config_from_args(ns):
    values = {}
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    for k, v in vars(ns).items():
        if k in ("config", "action") or v is None:
            continue
        values[k] = v
    values["command"] = ns.command
    return RunConfig.from_dict(values)


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (ValueError, TypeError, OSError) as exc:
        sys.stderr.write(json.dumps({"module": "cli", "code": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
