"""
Absolutely convergent Fourier series over a lifted integer lattice.

A :class:`Spectrum` is a finitely supported map from integer frequency
vectors ``z`` in ``Z^M`` to complex coefficients. The real frequency of
``z`` is its embedding ``B @ z`` where ``B`` is the ``d x M`` matrix of
declared generators (see :class:`GeneratorSystem`). Frequencies are
compared on their integer coordinates only; real embeddings are derived.

The same object plays two roles:

* as a function on ``R^d``: ``t -> sum_z q_z exp(i <t, B z>)``
  (:meth:`Spectrum.evaluate`), e.g. the characteristic function of a
  discrete law;
* as a function on the torus ``T^M``: ``theta -> sum_z q_z exp(i <theta, z>)``
  (:meth:`Spectrum.evaluate_torus`), the lifted function used for all
  certification work.

Coefficients are complex throughout; probability-specific realness is a
downstream assertion.
"""

from __future__ import annotations

import decimal
import math
import os
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.fft
import scipy.signal

from .errors import (
    BudgetExceeded,
    CertificateError,
    DimensionMismatch,
    GeneratorMismatch,
    InvalidLaw,
    TruncationError,
)

__all__ = [
    "TAU_DROP",
    "TAU_PROB",
    "GeneratorSystem",
    "Spectrum",
    "DiscreteLaw",
    "evaluate",
    "convolve",
    "scale",
    "add",
    "reflect",
    "truncate_normalize",
    "exp_spectrum",
    "invert",
]

TAU_DROP = 1e-15
TAU_PROB = 1e-12

# Dense box convolution is used while the result box stays below this many
# cells; beyond it, pairwise products are aggregated sparsely.
_DENSE_LIMIT = 1 << 22
_PAIR_LIMIT = 1 << 25
_EPS_F = float(np.finfo(float).eps)

_INT_RE = re.compile(r"^[+-]?\d+$")
_RATIO_RE = re.compile(r"^[+-]?\d+\s*/\s*[+-]?\d+$")


def _workers() -> int:
    """FFT worker threads, from ``QIDLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("QIDLAB_THREADS", "1")))
    except ValueError:
        return 1


def grid_values(s: "Spectrum", grid, multiplier=None, shift=None) -> np.ndarray:
    """Values of ``sum_z c_z exp(i <theta, z>)`` on the grid ``2 pi k / N``.

    ``multiplier`` rescales the coefficients (e.g. ``i z_m`` for a partial
    derivative); ``shift`` offsets every grid point by a fixed vector.
    Aliasing ``z mod N`` is exact at grid points, so any ``N`` works.
    """
    grid = tuple(int(n) for n in grid)
    c = s.coefs if multiplier is None else s.coefs * multiplier
    if shift is not None:
        c = c * np.exp(1j * (s.freqs @ np.asarray(shift, dtype=float)))
    A = np.zeros(grid, dtype=complex)
    if len(s):
        idx = tuple((s.freqs % np.asarray(grid)).T)
        np.add.at(A, idx, c)
    return scipy.fft.ifftn(A, workers=_workers()) * float(np.prod(grid))


def parse_generator(value):
    """Return ``(Fraction, exact, precision)`` for a generator given as int,
    Fraction, float or string.

    ``exact`` is True only for values known to be rational: integers,
    fractions and ``"p/q"`` / integer strings. Decimal strings and floats
    are read at full written precision but flagged as approximations of a
    possibly irrational number; ``precision`` is the half-unit of the last
    written decimal (or the float spacing).
    """
    if isinstance(value, bool):
        raise TypeError("generator must be numeric, not bool")
    if isinstance(value, int):
        return Fraction(value), True, 0.0
    if isinstance(value, Fraction):
        return value, True, 0.0
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"generator must be finite, got {value!r}")
        return Fraction(value), False, math.ulp(value)
    if isinstance(value, str):
        text = value.strip()
        if _INT_RE.match(text):
            return Fraction(int(text)), True, 0.0
        if _RATIO_RE.match(text):
            num, den = text.split("/")
            return Fraction(int(num), int(den)), True, 0.0
        try:
            frac = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse generator {value!r}") from exc
        mantissa = text.lower().split("e")[0]
        places = len(mantissa.split(".")[1]) if "." in mantissa else 0
        exponent = int(text.lower().split("e")[1]) if "e" in text.lower() else 0
        return frac, False, 0.5 * 10.0 ** (exponent - places)
    raise TypeError(f"unsupported generator type {type(value).__name__}")


class GeneratorSystem:
    """Per-coordinate real generators defining the lattice ``Z^M``.

    Parameters
    ----------
    generators : sequence of sequences
        ``generators[j]`` lists the generators of coordinate ``j``. Entries
        may be ints, Fractions, floats or strings (``"3"``, ``"1/12"``,
        ``"1.41421356237309504880"``).
    independent : bool
        Declares the generators of each coordinate linearly independent
        over ``Z``. The declaration is trusted and never checked against
        floating values.
    """

    __slots__ = ("values", "exact", "precision", "independent", "_matrix", "_hash")

    def __init__(self, generators: Sequence[Sequence], independent: bool = True):
        if len(generators) == 0:
            raise ValueError("need at least one coordinate")
        values, exact, precision = [], [], []
        for j, coord in enumerate(generators):
            if len(coord) == 0:
                raise ValueError(f"coordinate {j} has no generators")
            parsed = [parse_generator(g) for g in coord]
            vals = tuple(p[0] for p in parsed)
            if any(v == 0 for v in vals):
                raise ValueError(f"coordinate {j}: generators must be nonzero")
            if len(set(vals)) != len(vals):
                raise ValueError(f"coordinate {j}: generators must be distinct")
            values.append(vals)
            exact.append(tuple(p[1] for p in parsed))
            precision.append(tuple(p[2] for p in parsed))
        self.values = tuple(values)
        self.exact = tuple(exact)
        self.precision = tuple(precision)
        self.independent = bool(independent)
        d, M = self.d, self.M
        mat = np.zeros((d, M))
        for j, off in enumerate(self.offsets):
            for l, v in enumerate(self.values[j]):
                mat[j, off + l] = float(v)
        mat.setflags(write=False)
        self._matrix = mat
        self._hash = hash((self.values, self.independent))

    @classmethod
    def integer(cls, d: int = 1) -> "GeneratorSystem":
        """The standard lattice ``Z^d`` (one generator 1 per coordinate)."""
        return cls([[1]] * d)

    @property
    def d(self) -> int:
        return len(self.values)

    @property
    def counts(self) -> tuple:
        return tuple(len(v) for v in self.values)

    @property
    def M(self) -> int:
        return sum(self.counts)

    @property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for m in self.counts:
            out.append(acc)
            acc += m
        return tuple(out)

    @property
    def axis_coordinate(self) -> np.ndarray:
        """Coordinate index ``j`` owning each lattice axis."""
        return np.repeat(np.arange(self.d), self.counts)

    @property
    def matrix(self) -> np.ndarray:
        """The ``d x M`` float matrix ``B`` with ``embedding(z) = B @ z``."""
        return self._matrix

    @property
    def is_exact(self) -> bool:
        return all(all(e) for e in self.exact)

    def embed(self, z) -> tuple:
        """Exact embedding of one frequency as a tuple of Fractions."""
        z = tuple(int(v) for v in z)
        if len(z) != self.M:
            raise DimensionMismatch(f"frequency has length {len(z)}, expected {self.M}")
        out = []
        for j, off in enumerate(self.offsets):
            out.append(sum((Fraction(z[off + l]) * b for l, b in enumerate(self.values[j])),
                           Fraction(0)))
        return tuple(out)

    def embed_float(self, freqs) -> np.ndarray:
        """Float embedding; ``freqs`` has shape ``(M,)`` or ``(n, M)``."""
        freqs = np.asarray(freqs)
        if freqs.shape[-1] != self.M:
            raise DimensionMismatch(f"frequencies have length {freqs.shape[-1]}, expected {self.M}")
        return freqs @ self._matrix.T

    def describe(self) -> list:
        return [[_fraction_text(v, e, p) for v, e, p in zip(vals, ex, pr)]
                for vals, ex, pr in zip(self.values, self.exact, self.precision)]

    def __eq__(self, other):
        if not isinstance(other, GeneratorSystem):
            return NotImplemented
        return self.values == other.values and self.independent == other.independent

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"GeneratorSystem({self.describe()!r})"


def _fraction_text(v: Fraction, exact: bool, precision: float = 0.0) -> str:
    if exact:
        return str(v)
    if 0 < precision < math.ulp(float(v)):
        # Written with more digits than a double holds; keep them.
        places = max(0, math.ceil(-math.log10(2 * precision)))
        with decimal.localcontext() as ctx:
            ctx.prec = places + 40
            q = decimal.Decimal(v.numerator) / decimal.Decimal(v.denominator)
            return str(q.quantize(decimal.Decimal(1).scaleb(-places)))
    return repr(float(v))


def _as_complex_array(coefs) -> np.ndarray:
    return np.asarray(coefs, dtype=complex).reshape(-1)


def _encode(freqs: np.ndarray, lo: np.ndarray, shape: np.ndarray) -> np.ndarray:
    """Mixed-radix integer key of each row inside the box ``lo + [0, shape)``."""
    keys = np.zeros(freqs.shape[0], dtype=np.int64)
    for m in range(freqs.shape[1]):
        keys = keys * int(shape[m]) + (freqs[:, m] - lo[m])
    return keys


def _decode(keys: np.ndarray, lo: np.ndarray, shape: np.ndarray) -> np.ndarray:
    M = len(shape)
    out = np.empty((keys.shape[0], M), dtype=np.int64)
    rest = keys.copy()
    for m in range(M - 1, -1, -1):
        out[:, m] = rest % int(shape[m]) + lo[m]
        rest //= int(shape[m])
    return out


class Spectrum:
    """Immutable finitely supported complex measure on the lattice ``Z^M``.

    Parameters
    ----------
    gs : GeneratorSystem
    freqs : array_like of int, shape (n, M)
        Integer frequency vectors. Repeated rows are summed.
    coefs : array_like of complex, shape (n,)
    tau_drop : float
        Coefficients with modulus ``<= tau_drop`` are pruned; their total
        modulus is added to :attr:`pruned`.
    pruned : float
        l1 mass already dropped upstream (an error bound carried along).
    series : bool
        Marks the stored terms as the head of a countable series, the only
        case in which :func:`truncate_normalize` drops terms.
    """

    __slots__ = ("gs", "freqs", "coefs", "tau_drop", "pruned", "series")

    def __init__(self, gs: GeneratorSystem, freqs, coefs, tau_drop: float = TAU_DROP,
                 pruned: float = 0.0, series: bool = False):
        coefs = _as_complex_array(coefs)
        freqs = np.asarray(freqs, dtype=np.int64)
        if coefs.size == 0:
            freqs = np.zeros((0, gs.M), dtype=np.int64)
        freqs = freqs.reshape(coefs.size, -1) if coefs.size else freqs.reshape(0, gs.M)
        if freqs.shape[1] != gs.M:
            raise DimensionMismatch(f"frequencies have length {freqs.shape[1]}, expected {gs.M}")
        if coefs.size > 1:
            freqs, inverse = np.unique(freqs, axis=0, return_inverse=True)
            inverse = inverse.reshape(-1)
            summed = np.zeros(freqs.shape[0], dtype=complex)
            np.add.at(summed, inverse, coefs)
            coefs = summed
        mags = np.abs(coefs)
        keep = mags > tau_drop
        dropped = float(mags[~keep].sum())
        freqs, coefs = freqs[keep], coefs[keep]
        freqs.setflags(write=False)
        coefs.setflags(write=False)
        self.gs = gs
        self.freqs = freqs
        self.coefs = coefs
        self.tau_drop = float(tau_drop)
        self.pruned = float(pruned) + dropped
        self.series = bool(series)

    # -- construction ---------------------------------------------------

    @classmethod
    def from_dict(cls, gs: GeneratorSystem, mapping: Mapping, **kw) -> "Spectrum":
        items = list(mapping.items())
        freqs = [tuple(_as_freq(k)) for k, _ in items]
        coefs = [v for _, v in items]
        return cls(gs, np.array(freqs, dtype=np.int64).reshape(len(items), gs.M), coefs, **kw)

    @classmethod
    def delta(cls, gs: GeneratorSystem, z=None, weight: complex = 1.0) -> "Spectrum":
        z = np.zeros(gs.M, dtype=np.int64) if z is None else np.asarray(_as_freq(z), dtype=np.int64)
        return cls(gs, z.reshape(1, gs.M), [weight])

    @classmethod
    def zero(cls, gs: GeneratorSystem) -> "Spectrum":
        return cls(gs, np.zeros((0, gs.M), dtype=np.int64), [])

    def _new(self, freqs, coefs, pruned=None) -> "Spectrum":
        return Spectrum(self.gs, freqs, coefs, tau_drop=self.tau_drop,
                        pruned=self.pruned if pruned is None else pruned)

    # -- inspection -----------------------------------------------------

    @property
    def terms(self) -> dict:
        """Mapping ``tuple(z) -> complex``."""
        return {tuple(int(v) for v in z): complex(c) for z, c in zip(self.freqs, self.coefs)}

    def __len__(self):
        return self.coefs.size

    def __iter__(self):
        return iter(self.terms.items())

    def __getitem__(self, z) -> complex:
        z = np.asarray(_as_freq(z), dtype=np.int64)
        hit = np.nonzero(np.all(self.freqs == z, axis=1))[0]
        return complex(self.coefs[hit[0]]) if hit.size else 0j

    @property
    def l1(self) -> float:
        return float(math.fsum(np.abs(self.coefs)))

    def total(self) -> complex:
        """Value at the origin, ``sum_z q_z``."""
        return complex(math.fsum(self.coefs.real), math.fsum(self.coefs.imag))

    def max_abs_coords(self) -> np.ndarray:
        """Per-axis maximum ``|z_m|`` over the support."""
        if len(self) == 0:
            return np.zeros(self.gs.M, dtype=np.int64)
        return np.abs(self.freqs).max(axis=0)

    def embeddings(self) -> np.ndarray:
        return self.gs.embed_float(self.freqs)

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coefs.imag) <= tol))

    # -- evaluation -----------------------------------------------------

    def evaluate(self, t) -> complex | np.ndarray:
        """Evaluate at ``t`` in ``R^d`` (shape ``(d,)`` or ``(n, d)``)."""
        t = np.asarray(t, dtype=float)
        if t.shape[-1:] != (self.gs.d,):
            raise DimensionMismatch(f"t has trailing dimension {t.shape[-1:]}, expected {self.gs.d}")
        return self._phase_sum(t, self.embeddings())

    def evaluate_torus(self, theta) -> complex | np.ndarray:
        """Evaluate the lifted function at ``theta`` in ``R^M``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1:] != (self.gs.M,):
            raise DimensionMismatch(f"theta has trailing dimension {theta.shape[-1:]}, expected {self.gs.M}")
        return self._phase_sum(theta, self.freqs.astype(float))

    def _phase_sum(self, pts: np.ndarray, nodes: np.ndarray):
        single = pts.ndim == 1
        pts2 = pts.reshape(-1, pts.shape[-1])
        out = np.empty(pts2.shape[0], dtype=complex)
        chunk = max(1, (1 << 22) // max(1, len(self)))
        for start in range(0, pts2.shape[0], chunk):
            ph = pts2[start:start + chunk] @ nodes.T
            out[start:start + chunk] = np.exp(1j * ph) @ self.coefs
        if single:
            return complex(out[0])
        return out.reshape(pts.shape[:-1])

    # -- algebra --------------------------------------------------------

    def _check_same(self, other: "Spectrum"):
        if self.gs != other.gs:
            raise GeneratorMismatch("spectra live on different generator systems")

    def __add__(self, other: "Spectrum") -> "Spectrum":
        self._check_same(other)
        return self._new(np.vstack([self.freqs, other.freqs]),
                         np.concatenate([self.coefs, other.coefs]),
                         pruned=self.pruned + other.pruned)

    def __sub__(self, other: "Spectrum") -> "Spectrum":
        return self + other * -1.0

    def __neg__(self) -> "Spectrum":
        return self * -1.0

    def __mul__(self, c) -> "Spectrum":
        if isinstance(c, Spectrum):
            return convolve(self, c)
        c = complex(c)
        return self._new(self.freqs, self.coefs * c, pruned=abs(c) * self.pruned)

    __rmul__ = __mul__

    def reflect(self) -> "Spectrum":
        """Negate frequencies and conjugate coefficients."""
        return self._new(-self.freqs, np.conj(self.coefs))

    def shift(self, z) -> "Spectrum":
        """Translate by the lattice vector ``z`` (convolution with a point mass)."""
        z = np.asarray(_as_freq(z), dtype=np.int64).reshape(1, -1)
        return self._new(self.freqs + z, self.coefs)

    def real(self) -> "Spectrum":
        return self._new(self.freqs, self.coefs.real.astype(complex))

    def l1_distance(self, other: "Spectrum") -> float:
        self._check_same(other)
        diff = Spectrum(self.gs, np.vstack([self.freqs, other.freqs]),
                        np.concatenate([self.coefs, -other.coefs]), tau_drop=0.0)
        return diff.l1

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (self.gs == other.gs and self.freqs.shape == other.freqs.shape
                and bool(np.all(self.freqs == other.freqs))
                and bool(np.all(self.coefs == other.coefs)))

    __hash__ = None

    def __repr__(self):
        shown = list(self.terms.items())[:6]
        body = ", ".join(f"{k}: {v:.6g}" for k, v in shown)
        more = ", ..." if len(self) > 6 else ""
        return f"Spectrum({{{body}{more}}}, M={self.gs.M})"


def _as_freq(z) -> tuple:
    if np.isscalar(z):
        return (int(z),)
    return tuple(int(v) for v in z)


class DiscreteLaw(Spectrum):
    """A spectrum whose coefficients are probability weights.

    Weights must be real, nonnegative and sum to one within ``tau_prob``;
    the support must be nonempty. As a function on ``R^d`` the object is the
    characteristic function of the law.
    """

    __slots__ = ("tau_prob",)

    def __init__(self, gs: GeneratorSystem, freqs, weights, tau_prob: float = TAU_PROB,
                 tau_drop: float = TAU_DROP, series: bool = False):
        w = np.asarray(weights)
        if np.iscomplexobj(w):
            if np.any(np.abs(w.imag) > tau_prob):
                raise InvalidLaw("weights must be real")
            w = w.real
        w = np.asarray(w, dtype=float).reshape(-1)
        if w.size == 0:
            raise InvalidLaw("a law needs at least one atom")
        if np.any(~np.isfinite(w)):
            raise InvalidLaw("weights must be finite")
        if np.any(w < 0):
            raise InvalidLaw(f"negative weight {w.min():.6g}")
        total = math.fsum(w)
        if abs(total - 1.0) > tau_prob:
            raise InvalidLaw(f"weights sum to {total!r}, not 1 within {tau_prob:g}")
        super().__init__(gs, freqs, w, tau_drop=tau_drop, series=series)
        if len(self) == 0:
            raise InvalidLaw("all weights were pruned")
        self.tau_prob = float(tau_prob)

    @classmethod
    def from_spectrum(cls, s: Spectrum, tau_prob: float = TAU_PROB, tol_imag: float = 1e-12) -> "DiscreteLaw":
        if np.any(np.abs(s.coefs.imag) > tol_imag):
            raise InvalidLaw("spectrum has complex coefficients")
        w = np.clip(s.coefs.real, 0.0, None)
        if np.any(s.coefs.real < -tol_imag):
            raise InvalidLaw("spectrum has negative coefficients")
        return cls(s.gs, s.freqs, w, tau_prob=tau_prob, tau_drop=s.tau_drop)

    @classmethod
    def point_mass(cls, gs: GeneratorSystem, z=None) -> "DiscreteLaw":
        z = np.zeros(gs.M, dtype=np.int64) if z is None else np.asarray(_as_freq(z))
        return cls(gs, z.reshape(1, -1), [1.0])

    @property
    def weights(self) -> np.ndarray:
        return self.coefs.real

    def atoms(self) -> np.ndarray:
        """Atom coordinates in ``R^d`` (float embedding)."""
        return self.embeddings()

    def _new(self, freqs, coefs, pruned=None) -> Spectrum:
        # Algebra on laws leaves the probability simplex; results are spectra.
        return Spectrum(self.gs, freqs, coefs, tau_drop=self.tau_drop,
                        pruned=self.pruned if pruned is None else pruned)


# ---------------------------------------------------------------------------
# Functional API
# ---------------------------------------------------------------------------

def evaluate(s: Spectrum, t):
    """``sum_y q_y exp(i <t, embedding(y)>)``."""
    return s.evaluate(t)


def scale(s: Spectrum, c) -> Spectrum:
    return s * c


def add(a: Spectrum, b: Spectrum) -> Spectrum:
    return a + b


def reflect(s: Spectrum) -> Spectrum:
    return s.reflect()


def convolve(a: Spectrum, b: Spectrum) -> Spectrum:
    """Convolution of coefficient maps (pointwise product of the functions)."""
    if a.gs != b.gs:
        raise GeneratorMismatch("spectra live on different generator systems")
    gs = a.gs
    tau = max(a.tau_drop, b.tau_drop)
    carried = a.pruned * b.l1 + b.pruned * a.l1 + a.pruned * b.pruned
    if len(a) == 0 or len(b) == 0:
        return Spectrum(gs, np.zeros((0, gs.M), dtype=np.int64), [], tau_drop=tau, pruned=carried)
    lo_a, lo_b = a.freqs.min(0), b.freqs.min(0)
    shape_a = a.freqs.max(0) - lo_a + 1
    shape_b = b.freqs.max(0) - lo_b + 1
    shape = shape_a + shape_b - 1
    lo = lo_a + lo_b
    volume = float(np.prod(shape.astype(float)))
    pairs = len(a) * len(b)
    if volume <= _DENSE_LIMIT and volume <= 16.0 * pairs + 4096:
        da = np.zeros(tuple(shape_a), dtype=complex)
        da[tuple((a.freqs - lo_a).T)] = a.coefs
        db = np.zeros(tuple(shape_b), dtype=complex)
        db[tuple((b.freqs - lo_b).T)] = b.coefs
        dense = scipy.signal.convolve(da, db, method="auto")
        idx = np.nonzero(dense)
        freqs = np.stack(idx, axis=1).astype(np.int64) + lo
        return Spectrum(gs, freqs, dense[idx], tau_drop=tau, pruned=carried)
    if pairs > _PAIR_LIMIT:
        raise BudgetExceeded(f"convolution needs {pairs} pair products",
                             params={"pair_limit": _PAIR_LIMIT})
    if volume < 2.0 ** 62:
        key_parts, coef_parts = [], []
        chunk = max(1, (1 << 22) // len(b))
        for start in range(0, len(a), chunk):
            fa = a.freqs[start:start + chunk]
            ca = a.coefs[start:start + chunk]
            f = (fa[:, None, :] + b.freqs[None, :, :]).reshape(-1, gs.M)
            key_parts.append(_encode(f, lo, shape))
            coef_parts.append((ca[:, None] * b.coefs[None, :]).reshape(-1))
        keys = np.concatenate(key_parts)
        coefs = np.concatenate(coef_parts)
        ukeys, inv = np.unique(keys, return_inverse=True)
        summed = np.zeros(ukeys.size, dtype=complex)
        np.add.at(summed, inv.reshape(-1), coefs)
        return Spectrum(gs, _decode(ukeys, lo, shape), summed, tau_drop=tau, pruned=carried)
    f = (a.freqs[:, None, :] + b.freqs[None, :, :]).reshape(-1, gs.M)
    c = (a.coefs[:, None] * b.coefs[None, :]).reshape(-1)
    return Spectrum(gs, f, c, tau_drop=tau, pruned=carried)


def truncate_normalize(s: Spectrum, eps: float, mu_lower: float | None = None,
                       tau_prob: float = TAU_PROB):
    """Replace a series head by its shortest renormalized sub-head.

    Terms are enumerated by decreasing modulus. The returned head ``h_n`` of
    ``n`` terms, divided by its own sum, satisfies
    ``sup |h - h_n| <= (2A + 1) * sum_{m > n} |q_m| <= eps * mu_lower``
    (``<= eps`` when ``mu_lower`` is omitted), with ``A`` the l1 norm.

    Returns
    -------
    head : Spectrum
        Renormalized head summing to one.
    achieved : float
        The sup-norm bound ``(2A + 1) * tail`` actually reached.

    Spectra not flagged as series heads are finite already and come back
    unchanged with bound 0.
    """
    if not (0.0 < eps < 0.25):
        raise TruncationError(f"eps must lie in (0, 1/4), got {eps!r}")
    if mu_lower is not None and not mu_lower > 0:
        raise TruncationError("mu_lower must be positive")
    total = s.total()
    if abs(total - 1.0) > tau_prob:
        raise TruncationError(f"spectrum sums to {total}, not 1")
    if not s.series:
        return s, 0.0
    order = np.lexsort((np.arange(len(s)), -np.abs(s.coefs)))
    coefs = s.coefs[order]
    freqs = s.freqs[order]
    mags = np.abs(coefs)
    A = math.fsum(mags)
    # Mass beyond the stored terms counts as tail too.
    unstored = max(0.0, 1.0 - A) if s.is_real() else abs(1.0 - total)
    suffix = np.concatenate([np.cumsum(mags[::-1])[::-1], [0.0]])  # suffix[n] = sum_{m>=n}
    tails = suffix[1:] + unstored  # tails[n-1] = mass after the first n terms
    target = eps * (mu_lower if mu_lower is not None else 1.0)
    bounds = (2 * A + 1) * tails
    heads = np.cumsum(coefs)
    ok = (bounds <= target) & (np.abs(heads) >= 0.5)
    hits = np.nonzero(ok)[0]
    if hits.size == 0:
        if np.abs(heads[-1]) < 0.5:
            raise TruncationError("head partial sum has modulus below 1/2")
        raise TruncationError(f"stored terms cannot reach bound {target:g}; "
                              f"best is {bounds[-1]:g}")
    n = int(hits[0]) + 1
    head = coefs[:n] / heads[n - 1]
    # Pin the sum to one: absorb the rounding residue in the largest term.
    head = head.copy()
    rest_re = math.fsum(head.real[1:])
    rest_im = math.fsum(head.imag[1:])
    head[0] = complex(1.0 - rest_re, -rest_im)
    out = Spectrum(s.gs, freqs[:n], head, tau_drop=s.tau_drop, pruned=s.pruned)
    if isinstance(s, DiscreteLaw):
        out = DiscreteLaw(s.gs, out.freqs, out.coefs.real, tau_prob=s.tau_prob, tau_drop=s.tau_drop)
    return out, float(bounds[n - 1])


def _exp_tail(x: float, m: int) -> float:
    """Bound on ``sum_{j > m} x^j / j!`` for ``0 <= x < m + 2``."""
    lead = math.exp((m + 1) * math.log(x) - math.lgamma(m + 2)) if x > 0 else 0.0
    return lead / (1.0 - x / (m + 2))


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def _exp_taylor(s: Spectrum, tau_tail: float, max_terms: int) -> Spectrum:
    a = s.l1
    one = Spectrum.delta(s.gs)
    k = 0 if a <= 1.0 else int(math.ceil(math.log2(a)))
    x = s * (2.0 ** -k)
    ax = a * 2.0 ** -k
    step_tol = tau_tail / (2.0 ** k * math.exp(a))
    result = Spectrum(s.gs, one.freqs, one.coefs, tau_drop=s.tau_drop)
    term = result
    m = 0
    while True:
        m += 1
        term = convolve(term, x) * (1.0 / m)
        result = result + term
        if _exp_tail(ax, m) <= step_tol:
            break
        if m >= max_terms:
            raise BudgetExceeded("exponential series did not converge",
                                 params={"max_terms": max_terms})
    for _ in range(k):
        result = convolve(result, result)
    return result


def _exp_grid(s: Spectrum, tau_tail: float, budget: int, check_points: int = 256):
    """Exponential through torus values, or None when no grid fits ``budget``.

    ``exp`` of the grid values of ``s`` is transformed back on a window
    centred at the mean frequency ``sum_z Re(c_z) z``; the grid doubles
    until successive coefficient sets differ by at most ``tau_tail`` in l1
    and the result matches ``exp(s)`` at random off-grid points.
    """
    M = s.gs.M
    span = s.max_abs_coords()
    active = span > 0
    centre = np.rint(s.coefs.real @ s.freqs).astype(np.int64) if len(s) else np.zeros(M, np.int64)
    centre = np.where(active, centre, 0)
    grid = np.where(active, [_next_pow2(max(16, 2 * int(v) + 1)) for v in span], 1).astype(np.int64)
    rng = np.random.default_rng(0)
    probe = rng.uniform(0.0, 2 * np.pi, size=(check_points, M))
    target = np.exp(s.evaluate_torus(probe))
    prev = None
    while float(np.prod(grid.astype(float))) <= budget:
        vals = np.exp(grid_values(s, grid))
        coef = scipy.fft.fftn(vals, workers=_workers()) / float(np.prod(grid))
        lo = centre - grid // 2
        # index m of the rolled array <-> frequency lo + m
        cur = np.roll(coef, tuple(int(v) for v in -(lo % grid)), axis=tuple(range(M)))
        if prev is not None:
            inner = tuple(slice(int(n) // 4, int(n) // 4 + int(p)) if a else slice(None)
                          for n, p, a in zip(grid, prev.shape, active))
            outside = float(np.sum(np.abs(cur))) - float(np.sum(np.abs(cur[inner])))
            change = float(np.sum(np.abs(cur[inner] - prev))) + max(0.0, outside)
            if change <= tau_tail:
                mags = np.abs(cur)
                idx = np.nonzero(mags > s.tau_drop)
                dropped = math.fsum(mags[mags <= s.tau_drop].ravel())
                freqs = np.stack(idx, axis=1).astype(np.int64) + lo
                out = Spectrum(s.gs, freqs, cur[idx], tau_drop=s.tau_drop,
                               pruned=s.pruned + change + dropped)
                err = float(np.max(np.abs(out.evaluate_torus(probe) - target)))
                if err <= max(tau_tail, 64 * _EPS_F * float(np.max(np.abs(target)))):
                    return out
        prev = cur
        grid = np.where(active, grid * 2, grid)
    return None


def exp_spectrum(s: Spectrum, tau_tail: float = 1e-12, max_terms: int = 200,
                 method: str = "auto", budget: int = _DENSE_LIMIT) -> Spectrum:
    """Exponential in the convolution algebra, ``sum_m s^{*m} / m!``.

    ``method="taylor"`` sums the series directly; for ``||s||_1 > 1`` the
    argument is scaled by ``2^-k`` and the result squared ``k`` times, with
    the Taylor cut-off chosen so that the error after the squarings stays
    below ``tau_tail`` in l1. ``method="grid"`` exponentiates torus values
    and transforms back (see :func:`_exp_grid`). ``"auto"`` uses the series
    for spectra with a handful of terms and the grid otherwise, falling back
    to the series when no grid fits ``budget``.
    """
    if method not in ("auto", "taylor", "grid"):
        raise ValueError(f"unknown method {method!r}")
    one = Spectrum.delta(s.gs)
    if s.l1 == 0.0:
        return Spectrum(s.gs, one.freqs, one.coefs, tau_drop=s.tau_drop, pruned=s.pruned)
    if method == "grid" or (method == "auto" and len(s) > 8):
        out = _exp_grid(s, tau_tail, budget)
        if out is not None:
            return out
        if method == "grid":
            raise BudgetExceeded("no exponential grid within budget", params={"budget": budget})
    return _exp_taylor(s, tau_tail, max_terms)


def invert(s: Spectrum, cert, tau_tail: float = 1e-10, check_points: int = 1000) -> Spectrum:
    """Inverse in the Wiener algebra, ``1 / s`` as a spectrum.

    Computed as ``delta_{-gamma} * exp(-(log coefficients))`` from the
    distinguished logarithm, so it needs a positive min-modulus certificate
    ``cert`` for ``s`` (see :func:`qidlab.torus.certified_min_modulus`).
    The result is checked on ``check_points`` deterministic torus points:
    ``|s r - 1| <= tau_tail`` or :class:`BudgetExceeded` is raised.
    """
    from .torus import MinModulusCertificate, distinguished_log

    if not isinstance(cert, MinModulusCertificate):
        raise CertificateError("invert needs a MinModulusCertificate")
    if len(cert.grid) != s.gs.M:
        raise CertificateError("certificate belongs to a different lattice")
    if not cert.mu_lower > 0:
        raise CertificateError("certificate does not bound |s| away from zero")
    mu = cert.mu_lower
    dl = distinguished_log(s, cert, tau_coeff=tau_tail * mu / 8.0)
    r = dl.exponentiate(sign=-1, tau_tail=tau_tail * mu / 8.0)
    rng = np.random.default_rng(0)
    theta = rng.uniform(0.0, 2 * np.pi, size=(check_points, s.gs.M))
    err = float(np.max(np.abs(s.evaluate_torus(theta) * r.evaluate_torus(theta) - 1.0)))
    if err > tau_tail:
        raise BudgetExceeded(f"inverse residual {err:.3g} exceeds {tau_tail:g}",
                             params={"tau_tail": tau_tail})
    return r


def l1_norm(s: Spectrum) -> float:
    return s.l1


def spectrum_from_pairs(gs: GeneratorSystem, pairs: Iterable) -> Spectrum:
    """Build a spectrum from ``(frequency, coefficient)`` pairs."""
    pairs = list(pairs)
    return Spectrum(gs, np.array([_as_freq(z) for z, _ in pairs], dtype=np.int64).reshape(len(pairs), gs.M),
                    [c for _, c in pairs])
