"""
Z-module bases for supports and the lift of a law onto ``Z^M``.

Every atom ``x_k`` of a law is written coordinate-wise as an integer
combination of declared generators, ``x_k^(j) = sum_l c_{k,l}^(j) beta_l^(j)``.
The integer rows ``c_k`` are the lattice frequencies of the lifted law; the
lifted function on the torus is ``sum_k p_k exp(i <theta, c_k>)`` and its
restriction to the diagonal ``theta_l^(j) = beta_l^(j) t^(j)`` is the
characteristic function again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import LiftError
from .spectrum import TAU_PROB, DiscreteLaw, GeneratorSystem

__all__ = ["rational_basis", "LiftMap", "lift", "lift_rational", "injective_functional"]


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot read {x!r} as an exact rational")


def rational_basis(coords: Sequence) -> tuple[Fraction, list[int]]:
    """Single generator of the Z-module spanned by rational numbers.

    Returns ``(g / L, coeffs)`` where ``L`` is the lcm of the denominators
    and ``g`` the gcd of the scaled numerators, so that
    ``coeffs[i] * generator == coords[i]`` exactly. The generator is
    positive.

    >>> rational_basis(["1/2", "3/4", "5/6"])
    (Fraction(1, 12), [6, 9, 10])
    """
    fracs = [_to_fraction(c) for c in coords]
    if not fracs or all(f == 0 for f in fracs):
        raise ValueError("all coordinates are zero; elide this coordinate")
    L = reduce(math.lcm, (f.denominator for f in fracs), 1)
    nums = [int(f * L) for f in fracs]
    g = reduce(math.gcd, (abs(n) for n in nums), 0)
    return Fraction(g, L), [n // g for n in nums]


def injective_functional(freqs) -> list[int]:
    """Integer weights separating a finite set of lattice frequencies.

    The weights are ``B**m`` on axis ``m`` with ``B = 2 * max|z| + 1``, a
    balanced mixed-radix code: distinct frequencies get distinct values of
    ``<w, z>``. A single frequency gets all-ones weights.
    """
    rows = [tuple(int(v) for v in z) for z in freqs]
    if not rows:
        raise ValueError("empty frequency set")
    M = len(rows[0])
    if any(len(r) != M for r in rows):
        raise ValueError("frequencies have different lengths")
    if len(set(rows)) != len(rows):
        raise ValueError("frequencies must be pairwise distinct")
    if len(rows) == 1:
        return [1] * M
    base = 2 * max(abs(v) for r in rows for v in r) + 1
    return [base ** m for m in range(M)]


@dataclass(frozen=True)
class LiftMap:
    """Atom index <-> lattice frequency correspondence for one law."""

    gs: GeneratorSystem
    rows: np.ndarray          # (n, M) integer coefficient rows
    atoms: tuple              # exact or float coordinates, one tuple per atom

    def forward(self, k: int) -> tuple:
        return tuple(int(v) for v in self.rows[k])

    def embed(self, z) -> np.ndarray:
        return self.gs.embed_float(np.asarray(z))

    def embed_exact(self, z) -> tuple:
        return self.gs.embed(z)

    def index_of(self, z) -> int:
        z = np.asarray(z, dtype=np.int64)
        hit = np.nonzero(np.all(self.rows == z, axis=1))[0]
        if hit.size == 0:
            raise KeyError(tuple(z))
        return int(hit[0])

    def __len__(self):
        return self.rows.shape[0]


def _coord_tolerance(gs: GeneratorSystem, j: int, row_part, x) -> float:
    prec = sum(abs(int(c)) * p for c, p in zip(row_part, gs.precision[j]))
    return prec + 1e-12 * max(1.0, abs(float(x)))


def lift(atoms, weights, gs: GeneratorSystem, coeff_rows, tau_prob: float = TAU_PROB,
         series: bool = False) -> tuple[DiscreteLaw, LiftMap]:
    """Lift a law given by real atoms onto the lattice of ``gs``.

    Parameters
    ----------
    atoms : sequence of length-d sequences
        Atom coordinates (Fractions, ints, decimal strings or floats).
    weights : sequence of float
    gs : GeneratorSystem
    coeff_rows : integer array, shape (n, M)
        Row ``k`` writes atom ``k`` in the generators of ``gs``.

    Raises
    ------
    LiftError
        If a row does not reproduce its atom within the declared generator
        precision, or two atoms share a row.
    """
    rows = np.asarray(coeff_rows, dtype=np.int64)
    n = len(atoms)
    if rows.shape != (n, gs.M):
        raise LiftError(f"coefficient rows have shape {rows.shape}, expected {(n, gs.M)}")
    if len(weights) != n:
        raise LiftError("need one weight per atom")
    stored = []
    for k, atom in enumerate(atoms):
        if len(atom) != gs.d:
            raise LiftError(f"atom {k} has dimension {len(atom)}, expected {gs.d}")
        exact_embed = gs.embed(rows[k])
        coords = []
        for j, x in enumerate(atom):
            part = rows[k, gs.offsets[j]:gs.offsets[j] + gs.counts[j]]
            exact_input = isinstance(x, (int, Fraction)) or (isinstance(x, str) and "." not in x)
            if exact_input and all(gs.exact[j]):
                xv = _to_fraction(x)
                if xv != exact_embed[j]:
                    raise LiftError(f"atom {k}, coordinate {j}: row gives {exact_embed[j]}, atom is {xv}")
                coords.append(xv)
            else:
                xv = float(_to_fraction(x)) if isinstance(x, str) else float(x)
                err = abs(float(exact_embed[j]) - xv)
                if err > _coord_tolerance(gs, j, part, xv):
                    raise LiftError(f"atom {k}, coordinate {j}: row embeds to "
                                    f"{float(exact_embed[j])!r}, atom is {xv!r}")
                coords.append(xv)
        stored.append(tuple(coords))
    if len({tuple(r) for r in rows.tolist()}) != n:
        raise LiftError("two atoms lift to the same lattice frequency")
    law = DiscreteLaw(gs, rows, weights, tau_prob=tau_prob, series=series)
    if len(law) != n:
        # Zero weights are pruned; keep the map aligned with the law.
        keep = [k for k in range(n) if any(np.all(law.freqs == rows[k], axis=1))]
        rows = rows[keep]
        stored = [stored[k] for k in keep]
    rows = rows.copy()
    rows.setflags(write=False)
    return law, LiftMap(gs, rows, tuple(stored))


def lift_rational(atoms, weights, tau_prob: float = TAU_PROB,
                  series: bool = False) -> tuple[DiscreteLaw, LiftMap]:
    """Lift a law with exactly rational atoms, one generator per coordinate.

    Coordinates that vanish on every atom keep a dummy generator 1 with zero
    coefficients.
    """
    d = len(atoms[0])
    fr = [[_to_fraction(a[j]) for j in range(d)] for a in atoms]
    gens, cols = [], []
    for j in range(d):
        col = [row[j] for row in fr]
        if all(v == 0 for v in col):
            gens.append([1])
            cols.append([0] * len(col))
        else:
            g, coeffs = rational_basis(col)
            gens.append([g])
            cols.append(coeffs)
    gs = GeneratorSystem(gens)
    rows = np.array(cols, dtype=np.int64).T.reshape(len(atoms), d)
    return lift(fr, weights, gs, rows, tau_prob=tau_prob, series=series)
