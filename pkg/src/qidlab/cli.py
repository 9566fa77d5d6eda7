"""
Command-line front end.

Every subcommand reads a YAML law spec and prints one JSON report. Exit
codes: 0 QID or infinitely divisible, 1 NotQID, 2 Undecided, 64 input
error. Floats are printed with 15 significant digits; reports carry the
full tolerance block used, and nothing random happens without ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .cramer_wold import cw_test, generic_direction, project_with_collisions
from .engine import (
    AnalysisReport,
    QuasiLevyTriplet,
    Tolerances,
    Verdict,
    analyze,
    convolution_power,
    factorize,
    triplet_to_law,
)
from .errors import DimensionMismatch, GeneratorMismatch, InvalidLaw, LiftError, QIDError
from .lawspec import SpecError, load_spec
from .torus import DEFAULT_BUDGET, certified_min_modulus, kronecker_min_probe

EXIT_OK, EXIT_NOT_QID, EXIT_UNDECIDED, EXIT_INPUT = 0, 1, 2, 64

_INPUT_ERRORS = (SpecError, InvalidLaw, LiftError, DimensionMismatch, GeneratorMismatch)

_EXIT = {Verdict.QID: EXIT_OK, Verdict.ID: EXIT_OK, Verdict.NOT_QID: EXIT_NOT_QID,
         Verdict.UNDECIDED: EXIT_UNDECIDED}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _num(x):
    """JSON-ready value with floats cut to 15 significant digits."""
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, np.ndarray):
        return _num(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.15g}")
    return x


def _emit(doc):
    sys.stdout.write(json.dumps(_num(doc), indent=2) + "\n")


def _triplet_doc(tr: QuasiLevyTriplet, top_k: int | None) -> dict:
    gs = tr.gs
    items = tr.top(top_k)
    return {
        "drift": {"lattice": list(tr.drift) if tr.drift is not None else None,
                  "embedding": tr.drift_embedding()},
        "coefficients": [{"u": list(z), "embedding": gs.embed_float(np.array(z)), "lambda": v}
                         for z, v in items],
        "num_coefficients": len(tr.coefficients),
        "lambda_l1": tr.l1,
        "min_lambda": tr.min_coefficient(),
        "max_imag": tr.max_imag,
        "tail_error": tr.tail_error,
    }


def _report_doc(rep: AnalysisReport, top_k: int | None) -> dict:
    cert = rep.certificate
    doc = {"verdict": rep.verdict.value}
    if cert is not None:
        doc["mu_interval"] = [cert.mu_lower, cert.mu_upper]
        doc["certified"] = cert.certified
        doc["grid"] = list(cert.grid)
    if rep.triplet is not None:
        doc["triplet"] = _triplet_doc(rep.triplet, top_k)
        doc["parseval_residual"] = rep.parseval_residual
        doc["reconstruction_error"] = rep.reconstruction_error
    if rep.witness_torus is not None:
        doc["witness"] = {"torus": rep.witness_torus,
                          "t": rep.witness_t,
                          "modulus": rep.witness_value}
    if rep.truncation_bound:
        doc["truncation_bound"] = rep.truncation_bound
    if rep.reason:
        doc["reason"] = rep.reason
    if rep.verdict is Verdict.UNDECIDED:
        doc["budget"] = rep.budget_params or {"budget": rep.tolerances.budget}
    doc["tolerances"] = rep.tolerances.as_dict()
    return doc


def _law_doc(law) -> dict:
    emb = law.embeddings()
    return {"generators": law.gs.describe(),
            "atoms": [{"u": list(map(int, z)), "x": e, "weight": w}
                      for z, e, w in zip(law.freqs, emb, law.coefs.real)]}


def _tolerances(args, spec) -> Tolerances:
    kw = dict(spec.tolerances)
    for name in ("epsilon", "target_width", "zero_threshold", "budget"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    return Tolerances(**kw)


def _parse_real(text: str):
    text = text.strip()
    try:
        if "." not in text and "e" not in text.lower():
            return Fraction(text)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"not a number: {text!r}") from None


def _parse_vector(text: str) -> tuple:
    return tuple(_parse_real(p) for p in text.split(",") if p.strip())


def _analyze_for_triplet(args, spec):
    rep = analyze(spec.law, _tolerances(args, spec))
    if rep.triplet is None:
        _emit({"command": args.command, **_report_doc(rep, args.top_k)})
        return rep, _EXIT[rep.verdict]
    return rep, None


def cmd_analyze(args, spec):
    rep = analyze(spec.law, _tolerances(args, spec))
    _emit({"command": "analyze", "generators": spec.law.gs.describe(), **_report_doc(rep, args.top_k)})
    return _EXIT[rep.verdict]


def cmd_triplet(args, spec):
    rep, code = _analyze_for_triplet(args, spec)
    if code is not None:
        return code
    _emit({"command": "triplet", "verdict": rep.verdict.value,
           "generators": spec.law.gs.describe(),
           "triplet": _triplet_doc(rep.triplet, args.top_k),
           "tolerances": rep.tolerances.as_dict()})
    return EXIT_OK


def cmd_power(args, spec):
    rep, code = _analyze_for_triplet(args, spec)
    if code is not None:
        return code
    s = _parse_real(args.s)
    tr = convolution_power(rep.triplet, s)
    doc = {"command": "power", "s": float(s), "verdict": rep.verdict.value,
           "triplet": _triplet_doc(tr, args.top_k), "tolerances": rep.tolerances.as_dict()}
    if tr.drift is None:
        msg = "s * drift leaves the lattice; drift reported as a real vector"
        print(f"warning: {msg}", file=sys.stderr)
        doc["warning"] = msg
    _emit(doc)
    return EXIT_OK


def cmd_factorize(args, spec):
    rep, code = _analyze_for_triplet(args, spec)
    if code is not None:
        return code
    tol = rep.tolerances
    plus, minus = factorize(rep.triplet)
    lhs = triplet_to_law(plus, tol.tau_tail)
    rhs = spec.law * triplet_to_law(minus, tol.tau_tail)
    _emit({"command": "factorize", "verdict": rep.verdict.value,
           "plus": _triplet_doc(plus, args.top_k), "minus": _triplet_doc(minus, args.top_k),
           "identity_residual_l1": lhs.l1_distance(rhs), "tolerances": tol.as_dict()})
    return EXIT_OK


def cmd_project(args, spec):
    c = generic_direction(spec.law) if args.c is None else _parse_vector(args.c)
    if len(c) != spec.law.gs.d:
        raise SpecError(f"direction has {len(c)} entries, law has dimension {spec.law.gs.d}")
    pl, coll = project_with_collisions(spec.law, c)
    rep = analyze(pl, _tolerances(args, spec))
    _emit({"command": "project", "direction": [float(v) for v in c], "collisions": coll,
           "law": _law_doc(pl), **_report_doc(rep, args.top_k)})
    return _EXIT[rep.verdict]


def cmd_cwtest(args, spec):
    if args.count and args.seed is None:
        raise SpecError("--count needs an explicit --seed", source=args.spec)
    dirs = [_parse_vector(v) for v in args.direction or ()]
    res = cw_test(spec.law, directions=dirs, count=args.count, seed=args.seed, joint=args.joint,
                  tol=_tolerances(args, spec))
    doc = {"command": "cwtest", "conclusion": res.conclusion, "note": res.note,
           "projections": [{"kind": p.kind, "direction": [float(v) for v in p.direction],
                            "collisions": p.collisions, "verdict": p.verdict.value,
                            "mu_interval": [p.report.certificate.mu_lower, p.report.certificate.mu_upper]}
                           for p in res.projections]}
    if res.joint is not None:
        doc["joint"] = _report_doc(res.joint, args.top_k)
    doc["tolerances"] = _tolerances(args, spec).as_dict()
    _emit(doc)
    if res.conclusion.startswith("NotQID"):
        return EXIT_NOT_QID
    if res.joint is not None:
        return _EXIT[res.joint.verdict]
    return EXIT_OK if res.conclusion == "consistent-with-QID" else EXIT_UNDECIDED


def cmd_probe(args, spec):
    seed = 0 if args.seed is None else args.seed
    steps = kronecker_min_probe(spec.law, spec.liftmap, T_max=args.t_max, samples=args.samples,
                                steps=args.steps, seed=seed)
    mins = [st.running_min for st in steps]
    doc = {"command": "probe", "t_max": args.t_max, "samples": args.samples, "seed": seed,
           "table": [{"radius": st.radius, "running_min": st.running_min, "argmin": st.argmin}
                     for st in steps],
           "monotone": all(b <= a for a, b in zip(mins, mins[1:]))}
    if spec.law.gs.M <= 8:
        try:
            cert = certified_min_modulus(spec.law, budget=args.budget or DEFAULT_BUDGET)
            doc["torus_mu_interval"] = [cert.mu_lower, cert.mu_upper]
        except QIDError:
            pass
    _emit(doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qidlab", description="Quasi-infinite divisibility of discrete laws.")
    p.add_argument("--version", action="version", version=f"qidlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("spec", help="YAML law specification")
        sp.add_argument("--epsilon", type=float, help="truncation tolerance for infinite support")
        sp.add_argument("--target-width", type=float, help="stop once mu_upper - mu_lower is below this")
        sp.add_argument("--zero-threshold", type=float, help="moduli below this count as zeros")
        sp.add_argument("--top-k", type=int, default=10, help="coefficients to print (default 10)")
        sp.add_argument("--budget", type=int, help="maximum grid points per evaluation")
        if seed:
            sp.add_argument("--seed", type=int, help="seed for sampled diagnostics")

    for name, fn, hlp in [("analyze", cmd_analyze, "verdict, certificate and triplet summary"),
                          ("triplet", cmd_triplet, "full quasi-Levy triplet"),
                          ("factorize", cmd_factorize, "split into two infinitely divisible factors")]:
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("power", help="triplet of a real convolution power")
    common(sp)
    sp.add_argument("--s", required=True, help="exponent, e.g. 2, -1, 1/2")
    sp.set_defaults(func=cmd_power)

    sp = sub.add_parser("project", help="analyze the law of <c, X>")
    common(sp)
    sp.add_argument("--c", help="comma-separated direction (default: generic)")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("cwtest", help="projection test over several directions")
    common(sp)
    sp.add_argument("--count", type=int, default=0, help="number of random directions (needs --seed)")
    sp.add_argument("--direction", action="append", help="extra comma-separated direction")
    sp.add_argument("--joint", action="store_true", help="also run the joint analysis")
    sp.set_defaults(func=cmd_cwtest)

    sp = sub.add_parser("probe", help="running minimum of |f| over growing boxes")
    common(sp)
    sp.add_argument("--t-max", type=float, default=100.0)
    sp.add_argument("--samples", type=int, default=200_001)
    sp.add_argument("--steps", type=int, default=12)
    sp.set_defaults(func=cmd_probe)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_spec(args.spec)
        return args.func(args, spec)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QIDError as exc:
        # Numerical failure (realness, budget, certificate): no verdict.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED

if __name__ == "__main__":
    sys.exit(main())
