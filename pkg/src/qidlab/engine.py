"""
Quasi-infinite divisibility of discrete laws: verdicts and triplet calculus.

A discrete law is quasi-infinitely divisible exactly when its characteristic
function stays away from zero. In that case

    f(t) = exp( i<t, gamma> + sum_{u != 0} lambda_u (exp(i<t, u>) - 1) )

with a drift ``gamma`` and real, absolutely summable ``lambda_u``, both
living on the Z-module generated by the atoms. The law is infinitely
divisible when additionally every ``lambda_u >= 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, CertificateError, InvalidLaw, NoTriplet, RealnessError, UnwrapError
from .spectrum import TAU_DROP, DiscreteLaw, GeneratorSystem, Spectrum, exp_spectrum, truncate_normalize
from .torus import (
    DEFAULT_BUDGET,
    DistinguishedLog,
    MinModulusCertificate,
    certified_min_modulus,
    distinguished_log,
)

__all__ = [
    "Verdict",
    "Tolerances",
    "QuasiLevyTriplet",
    "AnalysisReport",
    "analyze",
    "convolution_power",
    "factorize",
    "triplet_to_law",
    "reconstruct_error",
]


class Verdict(str, enum.Enum):
    QID = "QID"
    ID = "InfinitelyDivisible"
    NOT_QID = "NotQID"
    UNDECIDED = "Undecided"

    @property
    def is_qid(self) -> bool:
        return self in (Verdict.QID, Verdict.ID)


@dataclass(frozen=True)
class Tolerances:
    """Every numerical knob of :func:`analyze`, reported alongside verdicts."""

    epsilon: float | None = None
    target_width: float = 1e-3
    zero_threshold: float = 1e-9
    tau_coeff: float = 1e-12
    tau_tail: float = 1e-12
    tau_real: float = 1e-9
    budget: int = DEFAULT_BUDGET
    sample_size: int = 1000
    seed: int = 0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class QuasiLevyTriplet:
    """Drift plus real exponent coefficients ``u -> lambda_u`` (``u != 0``).

    ``drift`` is an exact lattice frequency; it is None only after a real
    power moved the drift off the lattice, in which case ``drift_real``
    carries it. ``tail_error`` bounds the sup-norm error of the exponent.
    """

    gs: GeneratorSystem
    drift: tuple | None
    coefficients: dict
    tail_error: float = 0.0
    drift_real: tuple | None = None
    max_imag: float = 0.0

    @property
    def l1(self) -> float:
        return math.fsum(abs(v) for v in self.coefficients.values())

    def drift_embedding(self) -> np.ndarray:
        if self.drift is not None:
            return self.gs.embed_float(np.asarray(self.drift, dtype=float))
        return np.asarray(self.drift_real, dtype=float)

    def min_coefficient(self) -> float:
        return min(self.coefficients.values(), default=0.0)

    def is_infinitely_divisible(self, tau_real: float = 1e-9) -> bool:
        return self.min_coefficient() >= -tau_real

    def exponent_spectrum(self) -> Spectrum:
        """``sum_u lambda_u (delta_u - delta_0)`` as a lattice spectrum."""
        M = self.gs.M
        if not self.coefficients:
            return Spectrum.zero(self.gs)
        freqs = np.array(list(self.coefficients), dtype=np.int64).reshape(-1, M)
        lam = np.array(list(self.coefficients.values()), dtype=float)
        freqs = np.vstack([freqs, np.zeros((1, M), dtype=np.int64)])
        coefs = np.append(lam, -math.fsum(lam))
        return Spectrum(self.gs, freqs, coefs, tau_drop=TAU_DROP)

    def exponent(self, t) -> np.ndarray:
        """The exponent evaluated at points ``t`` in ``R^d``."""
        t = np.asarray(t, dtype=float)
        return 1j * (t @ self.drift_embedding()) + self.exponent_spectrum().evaluate(t)

    def top(self, k: int | None = None) -> list:
        items = sorted(self.coefficients.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
        return items if k is None else items[:k]


@dataclass(frozen=True)
class AnalysisReport:
    verdict: Verdict
    certificate: MinModulusCertificate | None
    triplet: QuasiLevyTriplet | None = None
    log: DistinguishedLog | None = field(default=None, repr=False)
    parseval_residual: float | None = None
    reconstruction_error: float | None = None
    witness_torus: np.ndarray | None = field(default=None, repr=False)
    witness_t: np.ndarray | None = field(default=None, repr=False)
    witness_value: float | None = None
    truncation_bound: float = 0.0
    tolerances: Tolerances = field(default_factory=Tolerances)
    reason: str = ""
    budget_params: dict = field(default_factory=dict)

    @property
    def is_qid(self) -> bool:
        return self.verdict.is_qid


def _witness_in_rd(gs: GeneratorSystem, theta: np.ndarray):
    """Map a torus point back to ``R^d`` when every coordinate has one generator."""
    if any(m != 1 for m in gs.counts):
        return None
    beta = np.array([float(v[0]) for v in gs.values])
    return np.asarray(theta, dtype=float) / beta


def _triplet_from_log(dl: DistinguishedLog, tau_real: float, tail_error: float) -> QuasiLevyTriplet:
    levy = dl.levy()
    max_imag = max((abs(c.imag) for c in levy.values()), default=0.0)
    if max_imag > tau_real:
        raise RealnessError(f"exponent coefficient has imaginary part {max_imag:.3g} > {tau_real:g}")
    coefs = {z: float(c.real) for z, c in levy.items()}
    return QuasiLevyTriplet(dl.coefficients.gs, tuple(dl.winding), coefs,
                            tail_error=tail_error, max_imag=float(max_imag))


def analyze(law: DiscreteLaw, tol: Tolerances | None = None, **overrides) -> AnalysisReport:
    """Decide quasi-infinite divisibility and extract the triplet.

    Pipeline: optional truncation of a series head, min-modulus certificate
    of the lifted function, then either a zero witness (``NotQID``), the
    distinguished logarithm and its triplet (``QID`` or
    ``InfinitelyDivisible``), or ``Undecided`` when the budget ran out with
    the bracket still touching zero.
    """
    tol = replace(tol or Tolerances(), **overrides)
    if not isinstance(law, DiscreteLaw):
        raise InvalidLaw("analyze needs a DiscreteLaw")
    work = law
    bound = 0.0
    if law.series:
        if tol.epsilon is None:
            raise InvalidLaw("a series-head law needs a truncation epsilon")
        work, bound = truncate_normalize(law, tol.epsilon)

    def certify(s):
        try:
            return certified_min_modulus(s, target_width=tol.target_width,
                                         zero_threshold=tol.zero_threshold, budget=tol.budget), {}
        except BudgetExceeded as exc:
            return exc.partial, exc.params

    cert, exhausted = certify(work)
    if law.series and cert.certified and cert.mu_lower > 0:
        mu_h = cert.mu_lower - bound
        if mu_h > 0 and bound > tol.epsilon * mu_h:
            work, bound = truncate_normalize(law, tol.epsilon, mu_lower=mu_h)
            cert, exhausted = certify(work)

    common = dict(certificate=cert, truncation_bound=bound, tolerances=tol, budget_params=exhausted)

    if cert.zero:
        theta = np.asarray(cert.witness, dtype=float)
        value = abs(law.evaluate_torus(theta))
        if value < tol.zero_threshold:
            return AnalysisReport(Verdict.NOT_QID, witness_torus=theta,
                                  witness_t=_witness_in_rd(law.gs, theta), witness_value=float(value),
                                  reason="numerical zero of the lifted function", **common)
        return AnalysisReport(Verdict.UNDECIDED, witness_torus=theta, witness_value=float(value),
                              reason="truncated law vanishes but the full law does not", **common)
    if not (cert.certified and cert.mu_lower > 0):
        why = "uncertified sampled minimum" if not cert.certified else "bracket touches zero"
        return AnalysisReport(Verdict.UNDECIDED, reason=why, **common)

    try:
        dl = distinguished_log(work, cert, tau_coeff=tol.tau_coeff, budget=tol.budget)
    except BudgetExceeded as exc:
        common["budget_params"] = exc.params
        return AnalysisReport(Verdict.UNDECIDED, reason=str(exc), **common)
    except UnwrapError as exc:
        return AnalysisReport(Verdict.UNDECIDED, reason=str(exc), **common)

    # Exponent error from truncation: |Ln(h / h_n)| <= -log(1 - x) with
    # x = sup|h - h_n| / inf|h_n|.
    trunc_err = 0.0
    if bound > 0:
        x = bound / cert.mu_lower
        trunc_err = -math.log1p(-x) if x < 1 else math.inf
    tail_error = trunc_err + dl.reconstruction_error + dl.coefficients.pruned
    triplet = _triplet_from_log(dl, tol.tau_real, tail_error)
    verdict = Verdict.ID if triplet.is_infinitely_divisible(tol.tau_real) else Verdict.QID
    recon = reconstruct_error(law, triplet, tol.sample_size, seed=tol.seed)
    return AnalysisReport(verdict, triplet=triplet, log=dl, parseval_residual=dl.parseval_residual,
                          reconstruction_error=recon, **common)


def convolution_power(tr: QuasiLevyTriplet, s) -> QuasiLevyTriplet:
    """Triplet of the ``s``-th convolution power: the exponent times ``s``.

    The drift stays a lattice frequency when ``s * gamma`` is integral;
    otherwise it is reported as the real vector ``s * embedding(gamma)``
    and ``drift`` becomes None.
    """
    coefs = {z: s * v for z, v in tr.coefficients.items() if s * v != 0}
    if tr.drift is not None:
        sf = Fraction(s) if not isinstance(s, Fraction) else s
        scaled = [sf * g for g in tr.drift]
        if all(x.denominator == 1 for x in scaled):
            return QuasiLevyTriplet(tr.gs, tuple(int(x) for x in scaled), coefs,
                                    tail_error=abs(s) * tr.tail_error, max_imag=abs(s) * tr.max_imag)
    real = tuple(float(v) for v in float(s) * tr.drift_embedding())
    return QuasiLevyTriplet(tr.gs, None, coefs, tail_error=abs(s) * tr.tail_error,
                            drift_real=real, max_imag=abs(s) * tr.max_imag)


def factorize(tr: QuasiLevyTriplet) -> tuple[QuasiLevyTriplet, QuasiLevyTriplet]:
    """Split a triplet into two infinitely divisible ones.

    ``plus`` keeps the drift and the positive coefficients, ``minus`` has
    zero drift and the negated negative coefficients, so that
    ``law * law(minus) = law(plus)``.
    """
    plus = {z: v for z, v in tr.coefficients.items() if v > 0}
    minus = {z: -v for z, v in tr.coefficients.items() if v < 0}
    zero = (0,) * tr.gs.M
    return (QuasiLevyTriplet(tr.gs, tr.drift, plus, tail_error=tr.tail_error, drift_real=tr.drift_real),
            QuasiLevyTriplet(tr.gs, zero, minus, tail_error=0.0))


def triplet_to_law(tr: QuasiLevyTriplet, tau_tail: float = 1e-12) -> Spectrum:
    """``delta_gamma * exp(sum_u lambda_u (delta_u - delta_0))``."""
    if tr.drift is None:
        raise NoTriplet("drift is off the lattice; no lattice law to build")
    body = exp_spectrum(tr.exponent_spectrum(), tau_tail=tau_tail)
    return body.shift(tr.drift)


def reconstruct_error(law: Spectrum, tr: QuasiLevyTriplet | None, sample_size: int = 1000,
                      seed: int = 0, T: float = 50.0) -> float:
    """``sup |f(t) - exp(exponent(t))|`` over seeded samples ``t`` in ``[-T, T]^d``."""
    if tr is None:
        raise NoTriplet("law has no triplet (not quasi-infinitely divisible?)")
    rng = np.random.default_rng(seed)
    t = rng.uniform(-T, T, size=(sample_size, law.gs.d))
    t[0] = 0.0
    return float(np.max(np.abs(law.evaluate(t) - np.exp(tr.exponent(t)))))
