"""Verdicts, triplets and the triplet calculus."""

import math
from fractions import Fraction

import numpy as np
import pytest

from corpus import corpus, int_law, poisson_head, qid_cases, rat_law
from qidlab.engine import (
    QuasiLevyTriplet,
    Tolerances,
    Verdict,
    analyze,
    convolution_power,
    factorize,
    reconstruct_error,
    triplet_to_law,
)
from qidlab.errors import InvalidLaw, NoTriplet
from qidlab.spectrum import DiscreteLaw, GeneratorSystem, Spectrum

Z1 = GeneratorSystem.integer(1)


def mercator(m: int, r: float = 3 / 7) -> float:
    return (-1) ** (m - 1) * r ** m / m


@pytest.fixture(scope="module")
def two_point():
    law = int_law({0: .7, 1: .3})
    return law, analyze(law)


def test_symmetric_two_point_is_not_qid():
    rep = analyze(int_law({0: .5, 1: .5}))
    assert rep.verdict is Verdict.NOT_QID and rep.triplet is None
    assert abs(rep.witness_t[0] - math.pi) < 1e-6


def test_two_point_qid_not_id(two_point):
    law, rep = two_point
    assert rep.verdict is Verdict.QID
    tr = rep.triplet
    assert tr.drift == (0,)
    assert tr.coefficients[(2,)] == pytest.approx(-0.0918367, abs=1e-7)
    assert tr.coefficients[(2,)] < 0


def test_poisson_is_infinitely_divisible():
    eps = 1e-8
    rep = analyze(poisson_head(), epsilon=eps)
    assert rep.verdict is Verdict.ID
    tr = rep.triplet
    assert tr.drift == (0,)
    assert tr.coefficients[(1,)] == pytest.approx(0.5, abs=1e-8)
    assert tr.tail_error <= 2 * eps


def test_series_head_needs_epsilon():
    with pytest.raises(InvalidLaw):
        analyze(poisson_head())


def test_drift_is_the_winding_vector():
    rep = analyze(rat_law({0: .2, "1/2": .8}))
    assert rep.verdict is Verdict.QID
    assert rep.triplet.drift == (1,)
    assert rep.triplet.drift_embedding() == pytest.approx([0.5])


def test_budget_exhaustion_is_undecided():
    law = int_law({(0, 0): .55, (1, 2): .25, (2, 1): .2}, 2)
    rep = analyze(law, budget=5_000)
    assert rep.verdict is Verdict.UNDECIDED and rep.triplet is None
    assert rep.budget_params["budget"] == 5_000


@pytest.mark.parametrize("case", corpus(), ids=lambda c: c.name)
def test_criterion_equivalence_and_realness(case):
    rep = analyze(case.law)
    assert rep.verdict.is_qid == case.qid
    assert rep.verdict.is_qid == (rep.certificate.mu_lower > 0)
    if case.qid:
        assert rep.triplet.max_imag <= 1e-9
        if rep.verdict is Verdict.ID:
            assert rep.certificate.mu_lower > 0 and rep.triplet.min_coefficient() >= -1e-9
    else:
        assert rep.witness_torus is not None


# ---------------------------------------------------------------- powers

def test_power_identity_and_poisson_doubling():
    rep = analyze(poisson_head(), epsilon=1e-10)
    tr = rep.triplet
    assert convolution_power(tr, 1).coefficients == tr.coefficients
    two = convolution_power(tr, 2)
    assert two.coefficients[(1,)] == pytest.approx(1.0, abs=2e-8)
    assert two.drift == (0,)


def test_power_minus_one_inverts(two_point):
    law, rep = two_point
    inv = triplet_to_law(convolution_power(rep.triplet, -1))
    assert (law * inv).l1_distance(Spectrum.delta(Z1)) <= 1e-7


def test_power_off_lattice_drift():
    rep = analyze(rat_law({0: .2, "1/2": .8}))
    half = convolution_power(rep.triplet, Fraction(1, 2))
    assert half.drift is None and half.drift_real == pytest.approx((0.25,))
    assert convolution_power(rep.triplet, 2).drift == (2,)
    with pytest.raises(NoTriplet):
        triplet_to_law(half)


def test_exponent_linearity(two_point):
    tr = two_point[1].triplet
    for s, s2 in [(2, 3), (-1, 0.5), (0.25, 0.75)]:
        a = convolution_power(tr, s + s2).coefficients
        b, c = convolution_power(tr, s).coefficients, convolution_power(tr, s2).coefficients
        for z in a:
            assert a[z] == pytest.approx(b[z] + c[z], rel=4 * np.finfo(float).eps, abs=1e-300)


# ---------------------------------------------------------------- factorization

def test_factorize_two_point_signs(two_point):
    law, rep = two_point
    plus, minus = factorize(rep.triplet)
    assert minus.coefficients[(2,)] == pytest.approx(9 / 98, abs=1e-12)
    assert all(z[0] % 2 == 0 for z in minus.coefficients)
    assert all(z[0] % 2 == 1 for z in plus.coefficients if abs(plus.coefficients[z]) > 1e-13)
    assert plus.is_infinitely_divisible(0.0) and minus.is_infinitely_divisible(0.0)
    lhs = triplet_to_law(plus)
    rhs = law * triplet_to_law(minus)
    assert lhs.l1_distance(rhs) <= 1e-7


def test_factorize_id_input():
    rep = analyze(poisson_head(), epsilon=1e-10)
    _, minus = factorize(rep.triplet)
    assert all(abs(v) <= 1e-9 for v in minus.coefficients.values())


# ---------------------------------------------------------------- triplet -> law

def test_triplet_to_law_examples():
    gs = GeneratorSystem.integer(2)
    assert triplet_to_law(QuasiLevyTriplet(gs, (3, -1), {})) == Spectrum.delta(gs, (3, -1))
    p = triplet_to_law(QuasiLevyTriplet(Z1, (0,), {(1,): 0.5}))
    for k in range(15):
        assert p[(k,)].real == pytest.approx(math.exp(-0.5) * 0.5 ** k / math.factorial(k), abs=1e-12)
    assert p.total() == pytest.approx(1.0, abs=1e-12)


def test_random_triplet_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(20):
        d = int(rng.integers(1, 3))
        gs = GeneratorSystem.integer(d)
        n = int(rng.integers(1, 4))
        coefs = {}
        while len(coefs) < n:
            z = tuple(int(v) for v in rng.integers(-3, 4, size=d))
            if any(z):
                coefs[z] = float(rng.uniform(0.02, 0.25))
        drift = tuple(int(v) for v in rng.integers(-2, 3, size=d))
        tr = QuasiLevyTriplet(gs, drift, coefs)
        law = DiscreteLaw.from_spectrum(triplet_to_law(tr, tau_tail=1e-14))
        got = analyze(law).triplet
        assert got.drift == drift
        keys = set(coefs) | set(got.coefficients)
        assert sum(abs(coefs.get(k, 0) - got.coefficients.get(k, 0)) for k in keys) <= 1e-7


# ---------------------------------------------------------------- reconstruction

def test_reconstruct_error_examples():
    pm = DiscreteLaw.point_mass(Z1, (4,))
    assert reconstruct_error(pm, QuasiLevyTriplet(Z1, (4,), {})) <= 1e-15
    law = int_law({0: .7, 1: .3})
    tr20 = QuasiLevyTriplet(Z1, (0,), {(m,): mercator(m) for m in range(1, 21)})
    r = 3 / 7
    tail = r ** 21 / (21 * (1 - r))
    assert reconstruct_error(law, tr20) <= tail * math.exp(tail) * 1.0001
    with pytest.raises(NoTriplet):
        reconstruct_error(int_law({0: .5, 1: .5}), analyze(int_law({0: .5, 1: .5})).triplet)


def test_report_carries_tolerances():
    tol = Tolerances(target_width=1e-4, seed=3)
    rep = analyze(int_law({0: .8, 1: .2}), tol)
    assert rep.tolerances == tol
    assert rep.certificate.width <= 1e-4
