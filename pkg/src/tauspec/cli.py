"""Command-line front end.

Every command writes one report to standard output, as JSON (schema
``tauspec/1``) or as CSV with ``--format csv``. Exit codes: 0 success,
2 invalid arguments or domain error, 3 convergence failure, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from . import config, kiev, nekrasov, oracle, quantize, verify
from .errors import ConvergenceError, DomainError, PoleError, TauspecError

SCHEMA = "tauspec/1"
EXIT_OK, EXIT_ARGS, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 2, 3, 4


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def parse_complex(text: str) -> complex:
    """Accepts Python complex syntax with i or j, e.g. 0.5i, 1-2.5i, 0.3."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


# ----------------------------------------------------------------------------
# serialization


def to_jsonable(x):
    if isinstance(x, (bool, np.bool_)) or x is None or isinstance(x, str):
        return bool(x) if isinstance(x, np.bool_) else x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (complex, np.complexfloating)):
        return [to_jsonable(x.real), to_jsonable(x.imag)]
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in x]
    return str(x)


# fields that are complex whenever present; a missing value still gets both CSV columns
COMPLEX_FIELDS = ("normalization",)


def _flatten(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if v is None and k in COMPLEX_FIELDS:
            out[f"{k}_re"] = None
            out[f"{k}_im"] = None
        elif isinstance(v, (complex, np.complexfloating)):
            out[f"{k}_re"] = float(v.real)
            out[f"{k}_im"] = float(v.imag)
        elif isinstance(v, (dict, list, tuple)):
            out[k] = json.dumps(to_jsonable(v), separators=(",", ":"))
        else:
            out[k] = to_jsonable(v)
    return out


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(to_jsonable(report), indent=2) + "\n"
    rows = [_flatten(r) for r in report["results"]]
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# ----------------------------------------------------------------------------
# commands


def _level_row(lvl: quantize.SpectralLevel, operator=None, fallback_order=None) -> dict:
    row = {}
    if operator is not None:
        row["operator"] = operator
    row.update({"level": lvl.index, "energy": lvl.energy, "root": complex(lvl.root), "method": lvl.method,
                "order": lvl.diagnostics.get("order", fallback_order),
                "residual": lvl.diagnostics.get("residual")})
    for k in ("eta", "sigma", "chart", "position"):
        if k in lvl.diagnostics:
            row[k] = lvl.diagnostics[k]
    return row


def cmd_spectrum(a) -> tuple[list, dict, int]:
    if a.problem == "mathieu":
        if a.t is None:
            raise ArgumentError("spectrum mathieu needs --t")
        levels = quantize.mathieu_levels(a.t, a.levels, a.order)
        return [_level_row(lv, fallback_order=a.order) for lv in levels], {"t": a.t, "levels": a.levels}, EXIT_OK
    if a.case is None or a.m is None or a.frak_t is None:
        raise ArgumentError("spectrum torus needs --case, --m and --frak-t")
    params = {"case": a.case, "m": a.m, "frak_t": a.frak_t, "levels": a.levels}
    if a.case == 2:
        out = quantize.torus_levels_case2(a.m, a.frak_t, a.levels, a.order)
        rows = [_level_row(lv, sign, a.order) for sign in ("+", "-") for lv in out[sign]]
        return rows, params, EXIT_OK
    levels = quantize.torus_levels_case1(a.m, a.frak_t, a.levels - 1, a.order, k_min=0)
    return [_level_row(lv, "-", a.order) for lv in levels], params, EXIT_OK


def cmd_series(a) -> tuple[list, dict, int]:
    N = a.order
    if a.sigma is None:
        raise ArgumentError("series needs --sigma")
    params = {"sigma": a.sigma, "order": N}
    if a.kind == "z-pure":
        coeffs = nekrasov.selfdual_block_pure(a.sigma, N).coeffs
        var = "t"
    elif a.kind == "z-torus":
        if a.m is None:
            raise ArgumentError("series z-torus needs --m")
        params["m"] = a.m
        coeffs = nekrasov.selfdual_block_torus(a.sigma, a.m, N).coeffs
        var = "q"
    elif a.kind == "fns-pure":
        coeffs, _ = nekrasov.ns_instanton_coefficients("pure", a.sigma, None, N)
        var = "t"
    else:
        if a.mu is None:
            raise ArgumentError("series fns-nstar needs --mu")
        params["mu"] = a.mu
        coeffs, _ = nekrasov.ns_instanton_coefficients("nstar", a.sigma, a.mu, N)
        var = "q"
    rows = [{"power": k, "variable": var, "coefficient": complex(c), "order": N, "residual": 0.0}
            for k, c in enumerate(coeffs)]
    return rows, params, EXIT_OK


def cmd_verify(a) -> tuple[list, dict, int]:
    rng = np.random.default_rng(a.seed)
    reports = verify.run_suite(a.target, a.samples, rng, a.order, threads=a.threads)
    rows = []
    for r in reports:
        rows.append({"relation": r.relation_id, "passed": r.passed, "residual": r.max_residual,
                     "tolerance": r.tolerance, "order": r.order, "normalization": r.normalization,
                     "q0_residual": r.q0_residual, "params": r.params})
    code = EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY
    return rows, {"target": a.target, "samples": a.samples, "seed": a.seed}, code


def cmd_oracle(a) -> tuple[list, dict, int]:
    if a.problem == "mathieu":
        if a.t is None:
            raise ArgumentError("oracle mathieu needs --t")
        spec = oracle.DiscretizationSpec("finite-difference", a.size or 2**13)
        res = oracle.mathieu_spectrum_direct(a.t, a.levels, spec)
        rows = [{"level": i + 1, "energy": float(e), "method": res.spec.method, "order": res.spec.size,
                 "residual": res.convergence} for i, e in enumerate(res.energies)]
        return rows, {"t": a.t, "levels": a.levels}, EXIT_OK
    if a.case is None or a.m is None or a.frak_t is None:
        raise ArgumentError("oracle lame needs --case, --m and --frak-t")
    out = oracle.lame_spectrum_direct(a.m, a.case, a.frak_t, a.levels, basis=a.size or 40)
    rows = []
    for sign in ("+", "-"):
        if sign in out:
            sp = out[sign]
            rows += [{"operator": sign, "level": i, "energy": float(e), "method": sp.spec.method,
                      "order": sp.spec.size, "residual": sp.convergence} for i, e in enumerate(sp.energies)]
    return rows, {"case": a.case, "m": a.m, "frak_t": a.frak_t, "levels": a.levels}, EXIT_OK


def cmd_eta_star(a) -> tuple[list, dict, int]:
    r = quantize.eta_star(a.sign, a.sigma, a.m, a.tau, a.order)
    row = {"sign": a.sign, "eta": r["eta"], "ns_prediction": r["ns_prediction"],
           "difference": r["difference"], "order": a.order, "residual": r["residual"]}
    return [row], {"sign": a.sign, "sigma": a.sigma, "m": a.m, "tau": a.tau}, EXIT_OK


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for random sampling")
    common.add_argument("--no-timing", action="store_true", help="omit timings (byte-identical reruns)")
    common.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)

    p = _Parser(prog="tauspec", description="Tau functions, quantization conditions and spectra.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", parents=[common], help="spectra from tau-function zeros")
    s.add_argument("problem", choices=("mathieu", "torus"))
    s.add_argument("--t", type=float)
    s.add_argument("--case", type=int, choices=(1, 2))
    s.add_argument("--m", type=float)
    s.add_argument("--frak-t", type=float)
    s.add_argument("--levels", type=_positive_int, default=1)
    s.add_argument("--order", type=_nonneg_int, default=kiev.ORDER_DEFAULT)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("series", parents=[common], help="series coefficients")
    s.add_argument("kind", choices=("z-pure", "z-torus", "fns-pure", "fns-nstar"))
    s.add_argument("--order", type=_nonneg_int, default=4)
    s.add_argument("--sigma", type=parse_complex)
    s.add_argument("--m", type=parse_complex)
    s.add_argument("--mu", type=parse_complex)
    s.set_defaults(func=cmd_series)

    s = sub.add_parser("verify", parents=[common], help="residual checks")
    s.add_argument("target", help="blowup:<id>|blowup:all|bilinear|toda|theta:<id>|theta:all|ode:p3|ode:calogero|fricke")
    s.add_argument("--samples", type=_positive_int, default=5)
    s.add_argument("--order", type=_nonneg_int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("oracle", parents=[common], help="direct diagonalization")
    s.add_argument("problem", choices=("mathieu", "lame"))
    s.add_argument("--t", type=float)
    s.add_argument("--case", type=int, choices=(1, 2))
    s.add_argument("--m", type=float)
    s.add_argument("--frak-t", type=float)
    s.add_argument("--levels", type=_positive_int, default=1)
    s.add_argument("--size", type=_positive_int, default=None, help="grid points or basis size")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("eta-star", parents=[common], help="eta* root and its NS prediction")
    s.add_argument("--sign", choices=("-", "+"), required=True)
    s.add_argument("--sigma", type=parse_complex, required=True)
    s.add_argument("--m", type=parse_complex, required=True)
    s.add_argument("--tau", type=parse_complex, required=True)
    s.add_argument("--order", type=_nonneg_int, default=kiev.ORDER_DEFAULT)
    s.set_defaults(func=cmd_eta_star)
    return p


def run(argv=None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    report = {"schema": SCHEMA, "command": argv, "parameters": {}, "results": [], "diagnostics": {}}
    fmt = "json"
    try:
        a = build_parser().parse_args(argv)
        fmt = a.format
        report["diagnostics"]["precision"] = config.precision()
    except (ArgumentError, ValueError) as exc:
        report["diagnostics"]["error"] = str(exc)
        sys.stderr.write(f"tauspec: {exc}\n")
        stdout.write(render(report, "json"))
        return EXIT_ARGS
    t0 = time.perf_counter()
    code = EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rows, params, code = a.func(a)
            report["parameters"] = params
            report["results"] = rows
        except ArgumentError as exc:
            report["diagnostics"]["error"] = str(exc)
            code = EXIT_ARGS
        except ConvergenceError as exc:
            report["diagnostics"]["error"] = str(exc)
            report["diagnostics"]["failure"] = {k: to_jsonable(v) for k, v in exc.diagnostics.items()}
            code = EXIT_CONVERGENCE
        except (DomainError, PoleError, ValueError) as exc:
            report["diagnostics"]["error"] = str(exc)
            code = EXIT_ARGS
        except TauspecError as exc:
            report["diagnostics"]["error"] = str(exc)
            code = EXIT_VERIFY
    if caught:
        report["diagnostics"]["warnings"] = [str(w.message) for w in caught]
    if not a.no_timing:
        report["diagnostics"]["timings"] = {"total_seconds": time.perf_counter() - t0}
    if "error" in report["diagnostics"]:
        sys.stderr.write(f"tauspec: {report['diagnostics']['error']}\n")
    report["diagnostics"]["exit_code"] = code
    stdout.write(render(report, fmt if report["results"] else "json"))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
