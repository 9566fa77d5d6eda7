"""
Acceptance suite: nine end-to-end criteria with closed-form oracles.

Each criterion is a function returning ``(ok, detail)``; the tests record
the outcome so that one PASS/FAIL line per criterion is printed in the
pytest summary. Running this file as a script prints the same lines.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from corpus import SQRT2, corpus, gen_law, int_law, poisson_head, qid_cases
from qidlab.cramer_wold import cw_test, generic_direction, project
from qidlab.engine import Verdict, analyze, convolution_power, factorize, reconstruct_error, triplet_to_law
from qidlab.spectrum import Spectrum
from qidlab.torus import certified_min_modulus, kronecker_min_probe

RESULTS: dict[int, tuple[bool, str]] = {}


def _analyses():
    if not hasattr(_analyses, "cache"):
        _analyses.cache = [(c, analyze(c.law)) for c in corpus()]
    return _analyses.cache


def criterion_1():
    """Two-point law: exponent coefficients follow the Mercator series."""
    rep = analyze(int_law({0: .7, 1: .3}))
    lam = rep.triplet.coefficients
    err = max(abs(lam.get((m,), 0.0) - (-1) ** (m - 1) * (3 / 7) ** m / m) for m in range(1, 21))
    ok = (err <= 1e-10 and rep.triplet.drift == (0,) and rep.verdict is Verdict.QID
          and lam[(2,)] < 0)
    return ok, f"max |lambda_m - oracle| = {err:.2e}, drift {rep.triplet.drift}, verdict {rep.verdict.value}"


def criterion_2():
    """Verdicts agree with ground truth on all 50 corpus laws, no Undecided."""
    rows = _analyses()
    right = sum(r.verdict.is_qid == c.qid and r.verdict is not Verdict.UNDECIDED for c, r in rows)
    undecided = sum(r.verdict is Verdict.UNDECIDED for _, r in rows)
    certified = all(r.certificate.mu_lower >= 0.05 for c, r in rows if c.qid)
    return right == len(rows) == 50 and certified, (
        f"{right}/{len(rows)} correct, {undecided} undecided, QID mu_lower >= 0.05: {certified}")


def criterion_3():
    """Round trip law -> triplet -> law for every QID corpus law."""
    worst_rec, worst_l1 = 0.0, 0.0
    for c, r in _analyses():
        if not c.qid:
            continue
        worst_rec = max(worst_rec, reconstruct_error(c.law, r.triplet, sample_size=1000))
        worst_l1 = max(worst_l1, triplet_to_law(r.triplet).l1_distance(c.law))
    return worst_rec <= 1e-7 and worst_l1 <= 1e-7, (
        f"max reconstruct_error {worst_rec:.2e}, max l1 round trip {worst_l1:.2e}")


def criterion_4():
    """Poisson(0.5) truncated at tail 1e-10 is infinitely divisible."""
    eps = 1e-10
    rep = analyze(poisson_head(0.5), epsilon=eps)
    lam = rep.triplet.coefficients
    others = max((abs(v) for z, v in lam.items() if z != (1,)), default=0.0)
    ok = (rep.verdict is Verdict.ID and abs(lam[(1,)] - 0.5) <= 1e-8 and others <= 1e-8
          and rep.triplet.tail_error <= 2 * eps)
    return ok, (f"verdict {rep.verdict.value}, lambda_1 - 0.5 = {lam[(1,)] - 0.5:.2e}, "
                f"max other |lambda| {others:.2e}, exponent bound {rep.triplet.tail_error:.2e} <= {2 * eps:g}")


def criterion_5():
    """Factorization into two infinitely divisible laws for every QID corpus law."""
    worst, signs = 0.0, True
    for c, r in _analyses():
        if not c.qid:
            continue
        plus, minus = factorize(r.triplet)
        signs &= plus.min_coefficient() >= 0 and minus.min_coefficient() >= 0
        worst = max(worst, triplet_to_law(plus).l1_distance(c.law * triplet_to_law(minus)))
    return worst <= 1e-6 and signs, f"max identity residual {worst:.2e}, factors nonnegative: {signs}"


def criterion_6():
    """1-d scan of the {0, 1, sqrt 2} law approaches the 2-torus minimum."""
    law = gen_law([["1", SQRT2]], [[0, 0], [1, 0], [0, 1]], [.6, .3, .1])
    cert = certified_min_modulus(law)
    t0 = time.perf_counter()
    steps = kronecker_min_probe(law, T_max=1e4)
    dt = time.perf_counter() - t0
    final = steps[-1].running_min
    mins = [s.running_min for s in steps]
    ok = (abs(final - cert.mu_upper) <= 1e-2 and min(mins) >= cert.mu_lower
          and all(b <= a for a, b in zip(mins, mins[1:])) and dt <= 300)
    return ok, (f"probe min {final:.6f}, torus bracket [{cert.mu_lower:.6f}, {cert.mu_upper:.6f}], "
                f"{dt:.1f}s")


def criterion_7():
    """Projections agree with the joint verdict."""
    laws = [c.law for c in qid_cases() if c.law.gs.d == 2][:5]
    bad = 0
    for k, law in enumerate(laws):
        res = cw_test(law, count=20, seed=100 + k)
        bad += sum(not p.verdict.is_qid for p in res.projections if p.kind == "random")
    half = int_law({(0, 0): .5, (1, 0): .25, (0, 1): .25}, 2)
    gen = analyze(project(half, generic_direction(half)))
    joint = analyze(half)
    zero = abs(half.evaluate([math.pi, math.pi]))
    ok = (len(laws) == 5 and bad == 0 and gen.verdict is Verdict.NOT_QID
          and gen.witness_torus is not None and joint.verdict is Verdict.NOT_QID and zero < 1e-15)
    return ok, (f"{bad} non-QID among {5 * 20} random projections; generic projection "
                f"{gen.verdict.value}, joint {joint.verdict.value}, |f(pi,pi)| = {zero:.1e}")


def criterion_8():
    """Parseval residual of the logarithm on well-conditioned laws."""
    rho = [r.parseval_residual for c, r in _analyses() if c.qid and r.certificate.mu_lower >= 0.1]
    return max(rho) <= 1e-12, f"{len(rho)} laws, max residual {max(rho):.2e}"


def criterion_9():
    """Power -1 is the convolution inverse."""
    picked = [(c, r) for c, r in _analyses() if c.qid][:10]
    worst = 0.0
    for c, r in picked:
        inv = triplet_to_law(convolution_power(r.triplet, -1))
        worst = max(worst, (c.law * inv).l1_distance(Spectrum.delta(c.law.gs)))
    return len(picked) == 10 and worst <= 1e-6, f"{len(picked)} laws, max ||law * inverse - delta_0||_1 {worst:.2e}"


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 10)}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, detail = CRITERIA[number]()
    RESULTS[number] = (ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for k, fn in CRITERIA.items():
        ok, detail = fn()
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
