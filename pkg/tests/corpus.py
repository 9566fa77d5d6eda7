"""
Test corpus with ground truth fixed by closed-form arguments.

QID laws carry an analytic lower bound on ``inf |f|``: a dominant atom
``p_max > 1/2`` gives ``|f| >= 2 p_max - 1``, and products of independent
factors multiply their bounds. Laws with zeros carry an explicit torus
point where the lifted function vanishes; :func:`torus_value` checks it by
a plain complex sum that does not touch the library.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from qidlab.lattice import lift, lift_rational
from qidlab.spectrum import DiscreteLaw, GeneratorSystem

SQRT2 = "1.41421356237309504880168872420969807856967187537694"
SQRT3 = "1.73205080756887729352744634150587236694280525381038"
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Case:
    name: str
    law: DiscreteLaw
    qid: bool
    mu_bound: float | None = None      # analytic lower bound on inf|f| (QID cases)
    zero: tuple | None = None          # torus point with phi(zero) = 0 (NotQID cases)


def torus_value(law: DiscreteLaw, theta) -> complex:
    """``sum_k p_k exp(i <theta, z_k>)`` by a plain Python loop."""
    acc = 0j
    for z, p in zip(law.freqs.tolist(), law.coefs.real.tolist()):
        acc += p * cmath.exp(1j * sum(a * b for a, b in zip(theta, z)))
    return acc


def dominant(weights) -> float:
    return 2 * max(weights) - 1


def int_law(atoms: dict, d: int = 1) -> DiscreteLaw:
    keys = [k if isinstance(k, tuple) else (k,) for k in atoms]
    return DiscreteLaw(GeneratorSystem.integer(d), keys, list(atoms.values()))


def rat_law(atoms: dict) -> DiscreteLaw:
    pts = [[Fraction(a)] if not isinstance(a, tuple) else [Fraction(v) for v in a] for a in atoms]
    return lift_rational(pts, list(atoms.values()))[0]


def gen_law(gens, rows, weights) -> DiscreteLaw:
    gs = GeneratorSystem(gens)
    pts = [gs.embed(r) for r in rows]
    return lift(pts, weights, gs, rows)[0]


def product(a: DiscreteLaw, b: DiscreteLaw) -> DiscreteLaw:
    """Independent product of two integer laws, as a law on Z^(da+db)."""
    atoms = {}
    for za, pa in zip(a.freqs.tolist(), a.coefs.real.tolist()):
        for zb, pb in zip(b.freqs.tolist(), b.coefs.real.tolist()):
            atoms[tuple(za) + tuple(zb)] = pa * pb
    return int_law(atoms, a.gs.d + b.gs.d)


def two_point(p: float) -> DiscreteLaw:
    return int_law({0: p, 1: 1 - p})


def qid_cases() -> list[Case]:
    out = []
    for p in (0.7, 0.8, 0.9, 0.3, 0.2, 0.1):
        out.append(Case(f"two-point-{p}", two_point(p), True, abs(2 * p - 1)))
    for atoms in ({0: .6, 1: .25, 3: .15}, {0: .55, 2: .3, 5: .15}, {-1: .1, 0: .7, 2: .2},
                  {0: .2, 1: .65, 2: .15}, {0: .1, 3: .8, 4: .1}, {0: .6, 1: .1, 2: .1, 3: .1, 4: .1}):
        out.append(Case(f"dominant-{sorted(atoms)}", int_law(atoms), True, dominant(atoms.values())))
    for atoms in ({0: .7, "1/2": .3}, {"-1/3": .25, 0: .6, "2/3": .15}):
        out.append(Case(f"rational-{list(atoms)}", rat_law(atoms), True, dominant(atoms.values())))
    out.append(Case("sqrt2-0.6/0.3/0.1", gen_law([["1", SQRT2]], [[0, 0], [1, 0], [0, 1]], [.6, .3, .1]),
                    True, 0.2))
    out.append(Case("sqrt2-sqrt3", gen_law([["1", SQRT2, SQRT3]], [[0, 0, 0], [0, 1, 0], [0, 0, 1]],
                                           [.7, .2, .1]), True, 0.4))
    out.append(Case("product-0.7x0.8", product(two_point(.7), two_point(.8)), True, 0.4 * 0.6))
    out.append(Case("product-0.3x0.9", product(two_point(.3), two_point(.9)), True, 0.4 * 0.8))
    for atoms in ({(0, 0): .6, (1, 0): .2, (0, 1): .1, (1, 1): .1},
                  {(0, 0): .7, (1, 0): .1, (0, 1): .1, (-1, -1): .1},
                  {(0, 0): .55, (1, 2): .25, (2, 1): .2},
                  {(0, 0): .6, (1, 1): .2, (2, 0): .1, (0, 2): .1}):
        out.append(Case(f"2d-dominant-{list(atoms)}", int_law(atoms, 2), True, dominant(atoms.values())))
    out.append(Case("3d-dominant", int_law({(0, 0, 0): .7, (1, 0, 0): .1, (0, 1, 0): .1, (0, 0, 1): .1}, 3),
                    True, 0.4))
    out.append(Case("3d-product", product(product(two_point(.8), two_point(.7)), two_point(.9)),
                    True, 0.6 * 0.4 * 0.8))
    out.append(Case("2d-sqrt2", gen_law([["1", SQRT2], ["1"]], [[0, 0, 0], [1, 0, 0], [0, 1, 1]], [.7, .2, .1]),
                    True, 0.4))
    assert len(out) == 25
    return out


def _triangle_zero(a: float, b: float, c: float) -> tuple:
    """Angles ``(x, y)`` with ``a + b e^{ix} + c e^{iy} = 0`` (law of cosines)."""
    cos_x = (c * c - a * a - b * b) / (2 * a * b)
    x = math.acos(cos_x)
    w = -(a + b * cmath.exp(1j * x)) / c
    return x, cmath.phase(w) % TWO_PI


def zero_cases() -> list[Case]:
    out = []

    def add(name, law, theta):
        out.append(Case(name, law, False, zero=tuple(float(v) for v in theta)))

    add("sym-0-1", int_law({0: .5, 1: .5}), [math.pi])
    add("sym-0-2", int_law({0: .5, 2: .5}), [math.pi / 2])
    add("sym-pm1", int_law({-1: .5, 1: .5}), [math.pi / 2])
    for n in (3, 4, 5):
        add(f"uniform-{n}", int_law({k: 1 / n for k in range(n)}), [TWO_PI / n])
    add("sym-times-0.7", int_law({0: .35, 1: .5, 2: .15}), [math.pi])
    add("binomial-2", int_law({0: .25, 1: .5, 2: .25}), [math.pi])
    add("binomial-3", int_law({0: .125, 1: .375, 2: .375, 3: .125}), [math.pi])
    add("half-step", rat_law({0: .5, "1/2": .5}), [math.pi])
    add("uniform-thirds", rat_law({0: 1 / 3, "1/3": 1 / 3, "2/3": 1 / 3}), [TWO_PI / 3])
    add("sym-sqrt2", gen_law([[SQRT2]], [[0], [1]], [.5, .5]), [math.pi])
    add("sym-x-sym-sqrt2", gen_law([["1", SQRT2]], [[0, 0], [1, 0], [0, 1], [1, 1]], [.25] * 4),
        [math.pi, 0.0])
    add("triangle-sqrt2", gen_law([["1", SQRT2]], [[0, 0], [1, 0], [0, 1]], [.4, .2, .4]),
        _triangle_zero(.4, .2, .4))
    add("sqrt2-half-quarter", gen_law([["1", SQRT2]], [[0, 0], [1, 0], [0, 1]], [.5, .25, .25]),
        [math.pi, math.pi])
    add("cos-zero", int_law({0: .3, 1: .4, 2: .3}), [math.acos(-2 / 3)])
    add("raised-cos", int_law({-1: .25, 0: .5, 1: .25}), [math.pi])
    add("palindrome-4", int_law({0: .2, 1: .3, 2: .3, 3: .2}), [math.pi])
    add("sparse-quarter", int_law({0: .25, 1: .25, 2: .25, 5: .25}), [math.pi])
    add("2d-half-quarter", int_law({(0, 0): .5, (1, 0): .25, (0, 1): .25}, 2), [math.pi, math.pi])
    add("2d-uniform-triangle", int_law({(0, 0): 1 / 3, (1, 0): 1 / 3, (0, 1): 1 / 3}, 2),
        [TWO_PI / 3, 2 * TWO_PI / 3])
    add("2d-sym-x-0.8", product(int_law({0: .5, 1: .5}), two_point(.8)), [math.pi, 1.0])
    add("2d-diagonal", int_law({(0, 0): .5, (1, 1): .5}, 2), [math.pi, 0.0])
    add("2d-square", int_law({(0, 0): .25, (1, 0): .25, (0, 1): .25, (1, 1): .25}, 2), [math.pi, math.pi])
    add("3d-half-quarter", int_law({(0, 0, 0): .5, (1, 0, 0): .25, (0, 0, 1): .25}, 3),
        [math.pi, 0.3, math.pi])
    assert len(out) == 25
    return out


def corpus() -> list[Case]:
    return qid_cases() + zero_cases()


def poisson_head(lam: float = 0.5, kmax: int = 24) -> DiscreteLaw:
    """Poisson weights for ``k <= kmax`` (tail below 1e-30), flagged as a series head."""
    ks = np.arange(kmax + 1)
    w = np.array([math.exp(-lam) * lam ** k / math.factorial(k) for k in ks])
    return DiscreteLaw(GeneratorSystem.integer(1), ks[:, None], w, series=True)
