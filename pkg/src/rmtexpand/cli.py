"""Command-line interface.

Subcommands: exact, expand, cumulant, clt, mc, free-energy, selftest.
Exit codes: 0 success, 1 selftest failure, 2 usage error, 3 size cap
exceeded, 4 numeric error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional

from . import __version__
from .errors import ConsistencyError, EnsembleError, NumericError, PoleError, SizeError
from .exactalg import RatFn, fraction_to_str

CACHE_ENV = "RMTEXPAND_CACHE_DIR"

# option name -> (kind, default); kind "list" options are repeatable
OPTIONS = {
    "ensemble": ("str", "gue"),
    "d": ("int", None),
    "P": ("list", []),
    "testfn": ("list", []),
    "trace": ("list", []),
    "m": ("int", 4),
    "N": ("intlist", []),
    "r": ("int", None),
    "seed": ("int", 0),
    "draws": ("int", 2000),
    "workers": ("int", 1),
    "out": ("str", None),
    "cache_dir": ("str", None),
    "format": ("str", "json"),
    "K": ("list", []),
    "tol": ("float", 1e-8),
    "kmax": ("int", 2),
    "observable_P": ("str", None),
    "observable_h": ("str", None),
    "exact": ("bool", False),
    "quick": ("bool", False),
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    # -h is the test-function flag, so help is --help only
    p = _Parser(prog="rmtexpand", add_help=False, description="Exact and sampled 1/N expansions of random-matrix trace statistics.")
    p.add_argument("--help", action="help", help="show this help and exit")
    p.add_argument("--version", action="version", version=f"rmtexpand {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--help", action="help", help="show this help and exit")
        sp.add_argument("--config", help="key=value file; flags take precedence")
        sp.add_argument("--ensemble", help="gue, goe, gse, haar-u, haar-o, haar-sp")
        sp.add_argument("-d", type=int, help="number of independent matrices")
        sp.add_argument("-P", action="append", help="non-commutative polynomial, e.g. \"x1 + x2^2\"")
        sp.add_argument("-h", "--testfn", action="append", help="test function: exp, sin, cos, gauss-bump, runge, poly:c0,c1,..., or a polynomial in t")
        sp.add_argument("--trace", action="append", help="polynomial whose normalised trace enters the product")
        sp.add_argument("-m", type=int, help="expansion order")
        sp.add_argument("-N", action="append", type=int, help="matrix size (repeatable ladder)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--draws", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", help="output path (written atomically)")
        sp.add_argument("--cache-dir", dest="cache_dir")
        sp.add_argument("--format", choices=["json", "csv"])
        return sp

    common(sub.add_parser("exact", add_help=False, help="exact engine value"))
    e = common(sub.add_parser("expand", add_help=False, help="expansion coefficients"))
    e.add_argument("--K", action="append", help="override spectral half-width per slot")
    e.add_argument("--tol", type=float)
    c = common(sub.add_parser("cumulant", add_help=False, help="scaled trace cumulant"))
    c.add_argument("-r", type=int, help="repeat the single slot r times")
    c.add_argument("--exact", action="store_true", default=None)
    c.add_argument("--K", action="append", help="override spectral half-width per slot (smooth --exact)")
    c.add_argument("--tol", type=float)
    common(sub.add_parser("clt", add_help=False, help="Gaussian fluctuation report"))
    common(sub.add_parser("mc", add_help=False, help="Monte Carlo estimate of a trace product"))
    f = common(sub.add_parser("free-energy", add_help=False, help="matrix-integral coefficients a_k, b_k"))
    f.add_argument("--kmax", type=int)
    f.add_argument("--observable-P", dest="observable_P")
    f.add_argument("--observable-h", dest="observable_h")
    s = common(sub.add_parser("selftest", add_help=False, help="run the acceptance battery"))
    s.add_argument("--quick", action="store_true", default=None, help="skip the long Monte Carlo criteria")
    return p


def read_config(path: str) -> Dict[str, object]:
    out: Dict[str, object] = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key == "h":
                key = "testfn"
            if key not in OPTIONS:
                raise UsageError(f"{path}:{n}: unknown key {key!r}")
            kind = OPTIONS[key][0]
            if kind in ("list", "intlist"):
                items = [v.strip() for v in val.split(";") if v.strip()]
                if kind == "intlist":
                    items = [int(v) for v in items]
                out.setdefault(key, []).extend(items)
            elif kind == "int":
                out[key] = int(val)
            elif kind == "float":
                out[key] = float(val)
            elif kind == "bool":
                out[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                out[key] = val
    return out


def resolve_job(ns: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win) into a JobSpec dict."""
    cfg = read_config(ns.config) if getattr(ns, "config", None) else {}
    job: Dict[str, object] = {"command": ns.command}
    for key, (_, default) in OPTIONS.items():
        val = getattr(ns, key, None)
        if val is None:
            val = cfg.get(key, default)
        job[key] = list(val) if isinstance(val, list) else val
    if job["cache_dir"] is None:
        job["cache_dir"] = os.environ.get(CACHE_ENV)
    from .expand import normalize_ensemble

    job["ensemble"] = normalize_ensemble(str(job["ensemble"]))
    return job


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _job_key(job: dict) -> dict:
    # output location and cache location do not change results
    return {k: v for k, v in job.items() if k not in ("out", "cache_dir", "workers")}


def _num(v):
    if isinstance(v, Fraction):
        return fraction_to_str(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


def _function_json(f) -> dict:
    r = f if isinstance(f, RatFn) else RatFn.from_poly(f)
    return r.to_json_obj()


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    tmp = os.path.join(d, f".{os.path.basename(path)}.tmp{os.getpid()}")
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------


def _parse_polys(texts: List[str], ensemble: str):
    from .ncpoly import parse_ncpoly

    symbol = "u" if ensemble.startswith("haar") else "x"
    out = []
    for t in texts:
        try:
            out.append(parse_ncpoly(t, symbol=symbol))
        except ValueError:
            # accept either letter name
            out.append(parse_ncpoly(t))
    return out


def _slots(job: dict):
    """(P list, test-function list) with a single -h broadcast over all -P."""
    from .cheb import parse_testfn

    Ps = _parse_polys(job["P"], job["ensemble"])
    if not Ps:
        raise UsageError("at least one -P polynomial is required")
    hs = [parse_testfn(h) for h in job["testfn"]] or [parse_testfn("t")]
    if len(hs) == 1 and len(Ps) > 1:
        hs = hs * len(Ps)
    if len(Ps) == 1 and len(hs) > 1:
        Ps = Ps * len(hs)
    if len(Ps) != len(hs):
        raise UsageError("number of -P and -h values must match (or one of them be single)")
    return Ps, hs


def _ladder(job: dict, default=(4, 8, 16, 32, 64)) -> List[int]:
    return list(job["N"]) or list(default)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_exact(job: dict) -> dict:
    from .expand import engine_value

    polys = _parse_polys(job["trace"] or job["P"], job["ensemble"])
    if not polys:
        raise UsageError("exact needs at least one --trace")
    f = engine_value(job["ensemble"], polys)
    r = f if isinstance(f, RatFn) else RatFn.from_poly(f)
    evals = []
    for N in _ladder(job, default=()):
        evals.append({"N": N, "value": fraction_to_str(r(Fraction(1, N)))})
    out = _function_json(f)
    return {"function": out, "text": str(r), "evaluations": evals, **out}


def cmd_expand(job: dict) -> dict:
    from .expand import compose_inputs, exact_expansion, residual_scan, smooth_expansion

    Ps, hs = _slots(job)
    m = int(job["m"])
    if all(h.is_polynomial for h in hs):
        polys = compose_inputs(Ps, hs)
        rep = residual_scan(job["ensemble"], polys, m, _ladder(job)) if job["N"] else exact_expansion(job["ensemble"], polys, m)
        return rep.to_json_obj()
    K = [Fraction(k) for k in job["K"]] or None
    rep = smooth_expansion(job["ensemble"], Ps, hs, m, K=K, tol=float(job["tol"]))
    return rep.to_json_obj()


def cmd_cumulant(job: dict) -> dict:
    from .cumulant import sampled_scaled_cumulant, scaled_trace_cumulant_exact, smooth_cumulant_limit
    from .expand import compose_inputs

    Ps, hs = _slots(job)
    if job["r"]:
        if len(Ps) != 1:
            raise UsageError("-r repeats a single slot; give one -P and one -h")
        Ps, hs = Ps * int(job["r"]), hs * int(job["r"])
    if job["exact"] and not all(h.is_polynomial for h in hs):
        K = [Fraction(k) for k in job["K"]] or None
        return smooth_cumulant_limit(job["ensemble"], Ps, hs, K=K, tol=float(job["tol"])).to_json_obj()
    if job["exact"]:
        polys = compose_inputs(Ps, hs)
        rep = scaled_trace_cumulant_exact(job["ensemble"], polys, Ns=job["N"])
        obj = rep.to_json_obj()
        obj["vanishing"] = {str(l): fraction_to_str(rep.coefficients[l]) for l in rep.vanishing_checked}
        return obj
    rep = sampled_scaled_cumulant(job["ensemble"], Ps, hs, _ladder(job, default=(16,)), int(job["draws"]), int(job["seed"]), int(job["workers"]))
    return rep.to_json_obj()


def cmd_clt(job: dict) -> dict:
    from .cumulant import clt_report
    from .expand import EXACT_ENSEMBLES, compose_inputs

    Ps, hs = _slots(job)
    N = _ladder(job, default=(64,))[0]
    exact = None
    if job["ensemble"] in EXACT_ENSEMBLES and all(h.is_polynomial for h in hs):
        exact = compose_inputs(Ps, hs)
    return clt_report(job["ensemble"], Ps, hs, N, int(job["draws"]), int(job["seed"]), int(job["workers"]), exact_polys=exact)


def cmd_mc(job: dict) -> dict:
    from .sampler import BatchConfig, mc_expect_trace_product

    if job["trace"]:
        Ps = _parse_polys(job["trace"], job["ensemble"])
        hs = [None] * len(Ps)
    else:
        Ps, hs = _slots(job)
    d = job["d"] or max(P.alphabet_size() for P in Ps) or 1
    results = []
    raws = []
    for N in _ladder(job, default=(16,)):
        cfg = BatchConfig(job["ensemble"], N, d=max(d, 1), seed=int(job["seed"]), draws=int(job["draws"]), workers=int(job["workers"]))
        est = mc_expect_trace_product(cfg, Ps, hs)
        results.append({"N": N, "estimate": _num(est.mean), "stderr": est.stderr, "draws": est.draws})
        raws.append((N, est.raw))
    return {"estimates": results, "_raw": raws}


def cmd_free_energy(job: dict) -> dict:
    from .cheb import parse_testfn
    from .cumulant import free_energy_coeffs, observable_coeffs
    from .expand import compose_inputs

    Ps, hs = _slots(job)
    V = compose_inputs(Ps, hs)
    Ns = _ladder(job)
    kmax = int(job["kmax"])

    def fmt(table):
        return [
            {
                "k": list(k),
                "per_N": [{"N": N, "value": fraction_to_str(v)} for N, v in e["per_N"].items()],
                "limit": fraction_to_str(e["limit"]),
            }
            for k, e in table.items()
        ]

    out = {"a": fmt(free_energy_coeffs(job["ensemble"], V, kmax, Ns))}
    if job["observable_P"]:
        Q = _parse_polys([job["observable_P"]], job["ensemble"])[0]
        g = parse_testfn(job["observable_h"] or "t")
        G = compose_inputs([Q], [g])[0]
        out["b"] = fmt(observable_coeffs(job["ensemble"], G, V, min(kmax, 3), Ns))
    return out


def cmd_selftest(job: dict) -> dict:
    from .acceptance import run_all

    results = run_all(quick=bool(job["quick"]), echo=lambda s: print(s, file=sys.stderr))
    return {
        "criteria": [{"id": r.cid, "name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
        "passed": all(r.passed for r in results),
    }


COMMANDS = {
    "exact": cmd_exact,
    "expand": cmd_expand,
    "cumulant": cmd_cumulant,
    "clt": cmd_clt,
    "mc": cmd_mc,
    "free-energy": cmd_free_energy,
    "selftest": cmd_selftest,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return fraction_to_str(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def envelope(job: dict, result: dict) -> dict:
    body = {"tool": "rmtexpand", "version": __version__, "jobspec": _job_key(job), "seed": job["seed"], "result": _jsonable(result)}
    body["content_hash"] = hashlib.sha256(_canonical(body).encode()).hexdigest()
    return body


def _csv_text(raws) -> str:
    lines = ["N,draw,statistic,value"]
    for N, raw in raws:
        for i, row in enumerate(raw):
            for j, v in enumerate(row):
                v = complex(v)
                lines.append(f"{N},{i},{j},{repr(v.real) if v.imag == 0 else repr(v)}")
    return "\n".join(lines) + "\n"


def run(argv: Optional[List[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        job = resolve_job(ns)
        if job["format"] == "csv" and job["command"] != "mc":
            raise UsageError("--format csv is only available for mc")
        cache_path = None
        if job["cache_dir"] and job["command"] != "selftest":
            key = hashlib.sha256(_canonical({"v": __version__, "job": _job_key(job)}).encode()).hexdigest()
            cache_path = os.path.join(job["cache_dir"], f"{key}.{job['format']}")
        if cache_path and os.path.exists(cache_path):
            with open(cache_path) as fh:
                text = fh.read()
            status = 0
        else:
            result = COMMANDS[job["command"]](job)
            raws = result.pop("_raw", None)
            if job["format"] == "csv":
                text = _csv_text(raws or [])
            else:
                text = json.dumps(envelope(job, result), indent=2, sort_keys=True) + "\n"
            status = 0 if result.get("passed", True) else 1
            if cache_path and status == 0:
                atomic_write(cache_path, text)
        if job["out"]:
            atomic_write(job["out"], text)
        else:
            sys.stdout.write(text)
        return status
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SizeError as exc:
        print(f"size cap exceeded: {exc}", file=sys.stderr)
        return 3
    except (NumericError, PoleError, ConsistencyError, ZeroDivisionError, OverflowError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (EnsembleError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
