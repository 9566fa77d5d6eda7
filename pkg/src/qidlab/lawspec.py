"""
Reading law specifications from YAML.

A spec declares generators per coordinate and atoms as integer coefficient
rows, e.g.::

    dimension: 1
    generators: [["1", "1.41421356237309504880"]]
    atoms:
      - {coeffs: [[0, 0]], weight: "0.6"}
      - {coeffs: [[1, 0]], weight: "0.3"}
      - {coeffs: [[0, 1]], weight: "0.1"}
    tolerances: {target_width: 1e-3}

For rational atoms the shortcut ``x: ["1/2", "3"]`` replaces ``coeffs`` and
``generators`` may be omitted. ``support: {infinite: true}`` marks the
atoms as the head of an infinite-support law, which then needs
``tolerances.epsilon``. Numbers are kept as written: floats are never
rounded by the YAML layer before parsing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import yaml

from .errors import QIDError
from .lattice import LiftMap, lift, lift_rational
from .spectrum import TAU_PROB, DiscreteLaw, GeneratorSystem

__all__ = ["SpecError", "LawSpec", "load_spec", "parse_spec"]

TOLERANCE_KEYS = ("epsilon", "target_width", "zero_threshold", "tau_coeff", "tau_tail", "tau_real")


class SpecError(QIDError, ValueError):
    """Malformed law specification; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = f"{source or '<spec>'}" + (f":{line}" if line else "")
        super().__init__(f"{where}: {message}")


class _Loader(yaml.SafeLoader):
    pass


def _raw_float(loader, node):
    return loader.construct_scalar(node)


_Loader.add_constructor("tag:yaml.org,2002:float", _raw_float)


class _Marked(dict):
    line: int = 0


def _construct_mapping(loader, node):
    out = _Marked(loader.construct_mapping(node, deep=True))
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


@dataclass(frozen=True)
class LawSpec:
    law: DiscreteLaw
    liftmap: LiftMap
    tolerances: dict = field(default_factory=dict)


def _weight(value, line, source):
    if isinstance(value, bool) or value is None:
        raise SpecError(f"weight must be a number, got {value!r}", line, source)
    try:
        exact = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"cannot parse weight {value!r}", line, source) from None
    w = float(exact)
    # Decimal-to-binary parse error, folded into the normalization tolerance.
    return w, abs(float(exact - Fraction(w)))


def _coeff_rows(raw, gs: GeneratorSystem, line, source):
    if isinstance(raw, int) and not isinstance(raw, bool):
        raw = [raw]
    if not isinstance(raw, list):
        raise SpecError("coeffs must be a list", line, source)
    if gs.d == 1 and len(raw) == gs.M and all(isinstance(v, int) for v in raw):
        raw = [raw]
    if len(raw) != gs.d:
        raise SpecError(f"coeffs have {len(raw)} coordinates, expected {gs.d}", line, source)
    row = []
    for j, part in enumerate(raw):
        part = [part] if isinstance(part, int) else part
        if not isinstance(part, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in part):
            raise SpecError(f"coeffs of coordinate {j} must be integers", line, source)
        if len(part) != gs.counts[j]:
            raise SpecError(f"coordinate {j} has {gs.counts[j]} generators, got {len(part)} coefficients",
                            line, source)
        row.extend(part)
    return row


def _tolerances(block, source):
    if block is None:
        return {}
    if not isinstance(block, dict):
        raise SpecError("tolerances must be a mapping", getattr(block, "line", None), source)
    out = {}
    for key, value in block.items():
        if key not in TOLERANCE_KEYS:
            raise SpecError(f"unknown tolerance {key!r}", block.line, source)
        try:
            out[key] = float(value)
        except (TypeError, ValueError):
            raise SpecError(f"tolerance {key} must be a number", block.line, source) from None
        if not (out[key] > 0 and math.isfinite(out[key])):
            raise SpecError(f"tolerance {key} must be positive", block.line, source)
    return out


def parse_spec(text: str, source: str | None = None) -> LawSpec:
    """Build a law from spec text; every problem raises :class:`SpecError`."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SpecError(f"YAML syntax: {getattr(exc, 'problem', exc)}",
                        mark.line + 1 if mark else None, source) from None
    if not isinstance(doc, dict):
        raise SpecError("top level must be a mapping", 1, source)
    known = {"dimension", "generators", "atoms", "tolerances", "support", "independent"}
    extra = set(doc) - known
    if extra:
        raise SpecError(f"unknown keys {sorted(extra)}", doc.line, source)

    atoms = doc.get("atoms")
    if not isinstance(atoms, list) or not atoms:
        raise SpecError("atoms must be a non-empty list", doc.line, source)
    for a in atoms:
        if not isinstance(a, dict):
            raise SpecError("each atom must be a mapping", doc.line, source)
    d = doc.get("dimension")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise SpecError("dimension must be a positive integer", doc.line, source)
    support = doc.get("support") or {}
    series = bool(support.get("infinite", False)) if isinstance(support, dict) else False
    tolerances = _tolerances(doc.get("tolerances"), source)

    weights, parse_err = [], []
    for a in atoms:
        if "weight" not in a:
            raise SpecError("atom has no weight", a.line, source)
        w, e = _weight(a["weight"], a.line, source)
        if w < 0:
            raise SpecError(f"negative weight {a['weight']}", a.line, source)
        weights.append(w)
        parse_err.append(e)
    total = math.fsum(weights)
    tau_prob = TAU_PROB + math.fsum(parse_err)
    if abs(total - 1.0) > tau_prob:
        raise SpecError(f"weights sum to {total!r}, not 1", doc.line, source)

    use_x = all("x" in a for a in atoms)
    if not use_x and any("x" in a for a in atoms):
        raise SpecError("mix of 'x' and 'coeffs' atoms", doc.line, source)
    try:
        if use_x:
            pts = []
            for a in atoms:
                x = a["x"] if isinstance(a["x"], list) else [a["x"]]
                if len(x) != d:
                    raise SpecError(f"atom has {len(x)} coordinates, expected {d}", a.line, source)
                try:
                    pts.append([Fraction(str(v).strip()) for v in x])
                except (ValueError, ZeroDivisionError):
                    raise SpecError(f"atom coordinates must be rational: {x!r}", a.line, source) from None
            if len({tuple(p) for p in pts}) != len(pts):
                raise SpecError("atoms must be distinct", doc.line, source)
            law, lm = lift_rational(pts, weights, tau_prob=tau_prob, series=series)
        else:
            gens = doc.get("generators")
            if not isinstance(gens, list) or len(gens) != d:
                raise SpecError(f"generators must list {d} coordinate(s)", doc.line, source)
            gens = [g if isinstance(g, list) else [g] for g in gens]
            try:
                gs = GeneratorSystem([[str(v) for v in g] for g in gens],
                                     independent=bool(doc.get("independent", True)))
            except (TypeError, ValueError) as exc:
                raise SpecError(f"generators: {exc}", doc.line, source) from None
            rows = [_coeff_rows(a.get("coeffs"), gs, a.line, source) for a in atoms]
            pts = [tuple(gs.embed(r)) for r in rows]
            law, lm = lift(pts, weights, gs, np.array(rows, dtype=np.int64).reshape(len(rows), gs.M),
                           tau_prob=tau_prob, series=series)
    except SpecError:
        raise
    except QIDError as exc:
        raise SpecError(str(exc), doc.line, source) from None
    if series and "epsilon" not in tolerances:
        raise SpecError("infinite support needs tolerances.epsilon", doc.line, source)
    return LawSpec(law, lm, tolerances)


def load_spec(path) -> LawSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read: {exc.strerror}", None, str(path)) from None
    return parse_spec(text, source=str(path))
