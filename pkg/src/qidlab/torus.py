"""
Analysis of lifted functions on the torus ``T^M``.

All routines work with the lifted function
``phi(theta) = sum_z q_z exp(i <theta, z>)`` of a lattice spectrum. By
Kronecker's theorem (generators of each coordinate independent over Z) the
infimum of the characteristic function over ``R^d`` equals the minimum of
``|phi|`` over the torus, which is what :func:`certified_min_modulus`
brackets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.optimize

from .errors import BudgetExceeded, CertificateError, UnwrapError
from .spectrum import TAU_DROP, Spectrum, exp_spectrum
from .spectrum import _workers, grid_values as _grid_values

__all__ = [
    "MinModulusCertificate",
    "DistinguishedLog",
    "ProbeStep",
    "certified_min_modulus",
    "winding_numbers",
    "distinguished_log",
    "kronecker_min_probe",
    "DEFAULT_BUDGET",
    "MAX_LATTICE_DIM",
]

DEFAULT_BUDGET = 1 << 22
MAX_LATTICE_DIM = 8
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MinModulusCertificate:
    """Bracket ``[mu_lower, mu_upper]`` for ``min |phi|`` over the torus.

    ``mu_upper`` is the smallest modulus actually evaluated (grid samples and
    local refinements); ``witness`` is where it was attained. ``mu_lower``
    holds for every torus point when ``certified`` is true.
    """

    mu_lower: float
    mu_upper: float
    grid: tuple
    lipschitz: float
    curvature: float
    witness: np.ndarray = field(repr=False)
    certified: bool = True
    converged: bool = True
    zero: bool = False
    target_width: float = 1e-3
    zero_threshold: float = 1e-9

    @property
    def width(self) -> float:
        return self.mu_upper - self.mu_lower

    @property
    def spacing(self) -> np.ndarray:
        return 2 * np.pi / np.asarray(self.grid, dtype=float)


def _refine(s: Spectrum, starts: np.ndarray, max_nfev: int = 60):
    """Local least-squares descent of ``|phi|^2`` from each start point."""
    freqs = s.freqs.astype(float)
    coefs = s.coefs

    def resid(theta):
        v = np.exp(1j * (freqs @ theta)) @ coefs
        return np.array([v.real, v.imag])

    def jac(theta):
        e = np.exp(1j * (freqs @ theta)) * coefs
        dv = (1j * freqs.T) @ e
        return np.vstack([dv.real, dv.imag])

    best_val, best_pt = np.inf, None
    for x0 in starts:
        try:
            res = scipy.optimize.least_squares(resid, x0, jac=jac, method="trf",
                                               max_nfev=max_nfev, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        except (ValueError, np.linalg.LinAlgError):
            continue
        val = abs(complex(*resid(res.x)))
        if val < best_val:
            best_val, best_pt = val, np.mod(res.x, 2 * np.pi)
    return best_val, best_pt


def _sampled_certificate(s, target_width, zero_threshold, n_points, seed=0):
    rng = np.random.default_rng(seed)
    M = s.gs.M
    pts = rng.uniform(0.0, 2 * np.pi, size=(n_points, M))
    vals = np.abs(s.evaluate_torus(pts))
    order = np.argsort(vals)[:8]
    best = float(vals[order[0]])
    witness = pts[order[0]]
    rv, rp = _refine(s, pts[order])
    if rp is not None and rv < best:
        best, witness = rv, rp
    L, L2 = _lipschitz(s)
    return MinModulusCertificate(0.0, best, (0,) * M, L, L2, witness, certified=False,
                                 converged=False, zero=best < zero_threshold,
                                 target_width=target_width, zero_threshold=zero_threshold)


def _lipschitz(s: Spectrum):
    norms = np.linalg.norm(s.freqs, axis=1) if len(s) else np.zeros(0)
    mags = np.abs(s.coefs)
    return float(np.sum(mags * norms)), float(np.sum(mags * norms ** 2))


def certified_min_modulus(s: Spectrum, target_width: float = 1e-3, zero_threshold: float = 1e-9,
                          budget: int = DEFAULT_BUDGET, max_dim: int = MAX_LATTICE_DIM,
                          refine: bool = True) -> MinModulusCertificate:
    """Bracket the minimum modulus of the lifted function on ``T^M``.

    The grid starts at ``2 * max|z_m| + 1`` points per axis and doubles
    until ``mu_upper - mu_lower <= target_width`` or ``mu_upper <
    zero_threshold``. Each grid cell (half-widths ``h_m / 2``) is bounded
    below by the larger of a first-order Lipschitz bound and a second-order
    bound using the exact gradient of ``|phi|`` at the cell centre; both are
    sound for every point of the cell.

    Lattices with ``M > max_dim``, or whose first grid exceeds ``budget``,
    get an uncertified sampled estimate (``certified=False``,
    ``mu_lower = 0``).

    Raises
    ------
    BudgetExceeded
        The next doubling would exceed ``budget`` grid points before either
        stopping condition held. ``exc.partial`` is the last certificate.
    """
    if len(s) == 0:
        raise CertificateError("zero spectrum has no positive minimum")
    M = s.gs.M
    span = s.max_abs_coords()
    grid = np.array([2 * int(m) + 1 for m in span], dtype=np.int64)
    if M > max_dim or float(np.prod(grid.astype(float))) > budget:
        return _sampled_certificate(s, target_width, zero_threshold, min(budget, 1 << 20))
    L, L2 = _lipschitz(s)
    mags = np.abs(s.coefs)
    absz = np.abs(s.freqs).astype(float)
    last = None
    while True:
        half = np.pi / grid
        vals = _grid_values(s, grid)
        absv = np.abs(vals)
        # Box radius of each monomial phase over a cell: sum_m |z_m| h_m / 2.
        phase_r = absz @ half
        first = float(np.sum(mags * phase_r))
        second = 0.5 * float(np.sum(mags * phase_r ** 2))
        fft_err = 8 * _EPS * s.l1 * (math.log2(float(np.prod(grid))) + 2)
        safe = np.where(absv > 0, absv, 1.0)
        unit = np.conj(vals) / safe
        grad_term = np.zeros(grid, dtype=float)
        for m in range(M):
            if span[m] == 0:
                continue
            dm = _grid_values(s, grid, multiplier=1j * s.freqs[:, m])
            grad_term += np.abs((unit * dm).real) * half[m]
        lower_cells = np.maximum(absv - first, absv - grad_term - second) - fft_err
        mu_lower = max(0.0, float(lower_cells.min()))
        flat = int(np.argmin(absv))
        mu_upper = float(absv.flat[flat])
        witness = 2 * half * np.array(np.unravel_index(flat, tuple(grid)), dtype=float)
        if refine and mu_upper >= zero_threshold:
            k = min(8, absv.size)
            cand = np.argpartition(absv.ravel(), k - 1)[:k]
            starts = 2 * half * np.stack(np.unravel_index(cand, tuple(grid)), axis=1).astype(float)
            rv, rp = _refine(s, starts)
            if rp is not None and rv < mu_upper:
                mu_upper, witness = rv, rp
        mu_lower = min(mu_lower, mu_upper)
        zero = mu_upper < zero_threshold
        done = zero or (mu_upper - mu_lower) <= target_width
        cert = MinModulusCertificate(mu_lower, mu_upper, tuple(int(n) for n in grid), L, L2,
                                     witness, certified=True, converged=done, zero=zero,
                                     target_width=target_width, zero_threshold=zero_threshold)
        if done:
            return cert
        last = cert
        nxt = np.where(span > 0, grid * 2, grid)
        if float(np.prod(nxt.astype(float))) > budget:
            raise BudgetExceeded(
                f"grid {tuple(int(n) for n in nxt)} exceeds budget {budget}",
                partial=last, params={"budget": budget, "target_width": target_width,
                                      "zero_threshold": zero_threshold})
        grid = nxt


def winding_numbers(s: Spectrum, cert: MinModulusCertificate, budget: int = DEFAULT_BUDGET) -> tuple:
    """Winding number of the lifted function around each axis loop.

    Each loop is sampled finely enough that ``L_k * h < mu_lower`` (``L_k``
    the Lipschitz constant along axis ``k``), so consecutive samples differ
    in argument by less than ``pi / 2`` and the total increment is
    unambiguous.
    """
    _check_cert(s, cert)
    mu = cert.mu_lower
    mags = np.abs(s.coefs)
    out = []
    for k in range(s.gs.M):
        Lk = float(np.sum(mags * np.abs(s.freqs[:, k])))
        if Lk == 0.0:
            out.append(0)
            continue
        n = max(int(cert.grid[k]), int(math.floor(2 * np.pi * Lk / mu)) + 1, 8)
        if n > budget:
            raise UnwrapError(f"axis {k} needs {n} samples for safe unwrapping")
        theta = np.zeros((n + 1, s.gs.M))
        theta[:, k] = np.linspace(0.0, 2 * np.pi, n + 1)
        v = s.evaluate_torus(theta)
        steps = np.angle(v[1:] / v[:-1])
        if np.any(np.abs(steps) >= np.pi / 2):
            raise UnwrapError(f"axis {k}: argument step reached pi/2; certificate is unsound")
        w = float(np.sum(steps)) / (2 * np.pi)
        r = int(round(w))
        if abs(w - r) > 1e-6:
            raise UnwrapError(f"axis {k}: non-integer winding {w!r}")
        out.append(r)
    return tuple(out)


def _check_cert(s: Spectrum, cert):
    if not isinstance(cert, MinModulusCertificate):
        raise CertificateError("a MinModulusCertificate is required")
    if len(cert.grid) != s.gs.M:
        raise CertificateError("certificate belongs to a different lattice")
    if not cert.certified or not cert.mu_lower > 0:
        raise CertificateError("certificate does not bound the modulus away from zero")


@dataclass(frozen=True)
class DistinguishedLog:
    """Continuous logarithm of a zero-free lifted function.

    ``Ln phi(theta) = log_scale + i <theta, winding> + sum_z c_z exp(i <theta, z>)``
    with ``coefficients`` holding ``c_z``; the coefficient at ``z = 0`` is set
    to ``-sum_{z != 0} c_z`` so the periodic part vanishes at the origin.
    """

    winding: tuple
    coefficients: Spectrum
    log_scale: complex
    parseval_residual: float
    reconstruction_error: float
    grid: tuple
    last_change: float
    tau_coeff: float

    def levy(self) -> dict:
        """Nonzero-frequency coefficients, ``z -> c_z``."""
        zero = (0,) * self.coefficients.gs.M
        return {z: c for z, c in self.coefficients.terms.items() if z != zero}

    def evaluate_torus(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return (self.log_scale + 1j * (theta @ np.asarray(self.winding, dtype=float))
                + self.coefficients.evaluate_torus(theta))

    def exponentiate(self, sign: int = 1, tau_tail: float = 1e-12) -> Spectrum:
        """``exp(sign * Ln phi)`` as a spectrum: the input back for ``sign=1``,
        its Wiener-algebra inverse for ``sign=-1``."""
        body = exp_spectrum(self.coefficients * float(sign), tau_tail=tau_tail)
        body = body.shift(tuple(sign * w for w in self.winding))
        return body * complex(np.exp(sign * self.log_scale))


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _unwrap_grid(vals: np.ndarray, origin_arg: float) -> np.ndarray:
    """Continuous argument on the grid, integrated axis by axis from the origin."""
    M = vals.ndim
    arg = np.zeros(vals.shape)
    arg[(0,) * M] = origin_arg
    for m in range(M):
        if vals.shape[m] == 1:
            continue
        sl = tuple(slice(None) if a <= m else slice(0, 1) for a in range(M))
        v = vals[sl]
        inc = np.angle(np.take(v, range(1, v.shape[m]), axis=m) / np.take(v, range(0, v.shape[m] - 1), axis=m))
        base = np.take(arg[sl], [0], axis=m)
        block = np.concatenate([base, base + np.cumsum(inc, axis=m)], axis=m)
        arg[sl] = block
    return arg


def _check_unwrap(vals: np.ndarray, arg: np.ndarray):
    for m in range(vals.ndim):
        if vals.shape[m] == 1:
            continue
        ratio = np.angle(np.roll(vals, -1, axis=m) / vals)
        if np.any(np.abs(ratio) >= np.pi / 2):
            raise UnwrapError("grid step moves the argument by pi/2 or more")
        darg = np.roll(arg, -1, axis=m) - arg
        if np.max(np.abs(darg - ratio)) > 1e-6:
            raise UnwrapError("argument field is not single-valued on the torus")


def distinguished_log(s: Spectrum, cert: MinModulusCertificate, tau_coeff: float = 1e-12,
                      budget: int = DEFAULT_BUDGET, tau_drop: float = TAU_DROP) -> DistinguishedLog:
    """Fourier coefficients of the distinguished logarithm of ``s`` on ``T^M``.

    The winding vector is removed first, so the remaining function has a
    periodic logarithm. Its values on an ``N^M`` grid (argument integrated
    along grid paths, each step provably below ``pi / 2``) are transformed
    by FFT; ``N`` doubles until the l1 change between successive coefficient
    sets is at most ``tau_coeff``.

    The Parseval residual compares the mean energy of the logarithm on the
    half-step shifted grid, which played no part in the extraction, with
    the energy of the retained coefficients.
    """
    _check_cert(s, cert)
    winding = winding_numbers(s, cert, budget=budget)
    psi = s.shift(tuple(-w for w in winding))
    c0 = psi.total()
    if c0 == 0:
        raise CertificateError("function vanishes at the origin")
    log_scale = complex(np.log(c0))
    mu = cert.mu_lower
    M = s.gs.M
    mags = np.abs(psi.coefs)
    span = psi.max_abs_coords()
    grid = []
    for k in range(M):
        Lk = float(np.sum(mags * np.abs(psi.freqs[:, k])))
        if span[k] == 0:
            grid.append(1)
        else:
            need = max(8, 2 * int(span[k]) + 1, int(math.floor(2 * np.pi * Lk / mu)) + 1)
            grid.append(_next_pow2(need))
    grid = np.array(grid, dtype=np.int64)
    prev = None
    change = np.inf
    while True:
        if float(np.prod(grid.astype(float))) > budget:
            raise BudgetExceeded(f"log grid {tuple(int(n) for n in grid)} exceeds budget {budget}",
                                 params={"budget": budget, "tau_coeff": tau_coeff,
                                         "last_change": change})
        vals = _grid_values(psi, grid)
        arg = _unwrap_grid(vals, float(np.angle(c0)))
        _check_unwrap(vals, arg)
        g = np.log(np.abs(vals)) + 1j * arg - log_scale
        cur = np.fft.fftshift(scipy.fft.fftn(g, workers=_workers()) / float(np.prod(grid)))
        if prev is not None:
            pad = [(int(n) // 2 - int(p) // 2, int(n) - int(p) - (int(n) // 2 - int(p) // 2))
                   for n, p in zip(grid, prev.shape)]
            change = float(np.sum(np.abs(cur - np.pad(prev, pad))))
            if change <= tau_coeff:
                break
        prev = cur
        grid = np.where(span > 0, grid * 2, grid)

    centre = grid // 2
    idx = np.nonzero(np.abs(cur) > tau_drop)
    freqs = np.stack(idx, axis=1).astype(np.int64) - centre
    coefs = cur[idx]
    dropped = float(np.sum(np.abs(cur)) - np.sum(np.abs(coefs)))
    zero_row = np.all(freqs == 0, axis=1)
    coefs = coefs.copy()
    others = coefs[~zero_row]
    lam0 = -complex(math.fsum(others.real), math.fsum(others.imag))
    if zero_row.any():
        coefs[zero_row] = lam0
    else:
        freqs = np.vstack([freqs, np.zeros((1, M), dtype=np.int64)])
        coefs = np.append(coefs, lam0)
    lam = Spectrum(s.gs, freqs, coefs, tau_drop=0.0, pruned=dropped)
    lam = Spectrum(s.gs, lam.freqs, lam.coefs, tau_drop=tau_drop, pruned=lam.pruned)

    # Independent check on the half-step shifted grid.
    shift = np.where(grid > 1, np.pi / grid, 0.0)
    vs = _grid_values(psi, grid, shift=shift)
    Gs = _grid_values(lam, grid, shift=shift)
    im = Gs.imag + np.angle(np.exp(1j * (np.angle(vs) - log_scale.imag - Gs.imag)))
    gs_true = (np.log(np.abs(vs)) - log_scale.real) + 1j * im
    energy = float(np.mean(np.abs(gs_true) ** 2))
    kept = float(math.fsum(np.abs(lam.coefs) ** 2))
    residual = abs(energy - kept)
    recon = float(np.max(np.abs(gs_true - Gs)))
    return DistinguishedLog(winding, lam, log_scale, residual, recon,
                            tuple(int(n) for n in grid), change, tau_coeff)


@dataclass(frozen=True)
class ProbeStep:
    radius: float
    running_min: float
    argmin: np.ndarray = field(repr=False)


def kronecker_min_probe(law: Spectrum, liftmap=None, T_max: float = 100.0, samples: int = 200_001,
                        steps: int = 12, seed: int = 0, refine: bool = True) -> list:
    """Running minimum of ``|f(t)|`` over ``t`` in ``[-T, T]^d`` for growing ``T``.

    Works directly on ``R^d`` (no lifting): a uniform grid of ``samples``
    points when ``d == 1``, seeded uniform samples otherwise, each sample
    optionally polished by a short local search. The minima are reported at
    ``steps`` geometrically spaced radii up to ``T_max`` and never increase.
    By Kronecker's theorem they approach the torus minimum as ``T_max``
    grows, with no rate.

    ``liftmap`` is accepted for symmetry with the lifting API; the sweep only
    needs real atoms, which the spectrum provides.
    """
    d = law.gs.d
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    if d == 1:
        t = np.linspace(-T_max, T_max, samples).reshape(-1, 1)
    else:
        rng = np.random.default_rng(seed)
        t = rng.uniform(-T_max, T_max, size=(samples, d))
    vals = np.abs(law.evaluate(t))
    radius = np.max(np.abs(t), axis=1)
    if refine:
        spacing = 2 * T_max / max(samples - 1, 1) if d == 1 else 2 * T_max / samples ** (1.0 / d)
        k = min(16, vals.size)
        best = np.argpartition(vals, k - 1)[:k]
        emb = law.embeddings()

        def modsq(x):
            v = np.exp(1j * (emb @ x)) @ law.coefs
            return float(abs(v) ** 2)

        for i in best:
            lo = t[i] - spacing
            hi = t[i] + spacing
            res = scipy.optimize.minimize(modsq, t[i], method="L-BFGS-B",
                                          bounds=list(zip(lo, hi)))
            x = np.clip(res.x, -T_max, T_max)
            v = math.sqrt(modsq(x))
            if v < vals[i]:
                t[i] = x
                vals[i] = v
                radius[i] = float(np.max(np.abs(x)))
    order = np.argsort(radius, kind="stable")
    run = np.minimum.accumulate(vals[order])
    arg_idx = np.zeros(order.size, dtype=np.int64)
    cur = 0
    for pos in range(order.size):
        if vals[order[pos]] <= vals[order[cur]]:
            cur = pos
        arg_idx[pos] = order[cur]
    radii = T_max * np.geomspace(1.0 / 2 ** (steps - 1), 1.0, steps)
    out = []
    for r in radii:
        pos = int(np.searchsorted(radius[order], r, side="right")) - 1
        if pos < 0:
            continue
        out.append(ProbeStep(float(r), float(run[pos]), t[arg_idx[pos]].copy()))
    return out
