"""Mass distributions M(x) of a string on [0, L].

A distribution is the sum of three kinds of mass:

* density segments with a polynomial density p(x) (degree <= 3, written in
  the absolute coordinate x, ``p(x) = c0 + c1 x + c2 x^2 + c3 x^3``),
* point masses (atoms) at positions in (0, L],
* Cantor-type singular components, realized as finite dyadic atom chains.

The left end x = 0 never carries an atom.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .errors import DomainError, InputError

_CHECK_POINTS = 65
_MAX_DEGREE = 3


@dataclass(frozen=True)
class DensitySegment:
    x0: float
    x1: float
    coeffs: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "x1", float(self.x1))
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs or (0.0,))
        if not self.x0 < self.x1:
            raise DomainError(f"segment needs x0 < x1, got [{self.x0}, {self.x1}]")
        if len(self.coeffs) > _MAX_DEGREE + 1:
            raise DomainError("density polynomial degree must be <= 3")
        grid = np.linspace(self.x0, self.x1, _CHECK_POINTS)
        if np.any(self.poly(grid) < 0):
            raise DomainError(f"negative density on [{self.x0}, {self.x1}]")

    @cached_property
    def poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    @cached_property
    def _antiderivative(self) -> Polynomial:
        return self.poly.integ(lbnd=self.x0)

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1:])

    def mass_between(self, a: float, b: float) -> float:
        """Mass of the segment inside [a, b] (clipped to the segment)."""
        a, b = max(a, self.x0), min(b, self.x1)
        if b <= a:
            return 0.0
        F = self._antiderivative
        return float(F(b) - F(a))

    @property
    def mass(self) -> float:
        return self.mass_between(self.x0, self.x1)

    def moment_between(self, a: float, b: float, order: int = 1) -> float:
        """Integral of x**order * p(x) over [a, b]."""
        G = (self.poly * Polynomial([0.0] * order + [1.0])).integ()
        return float(G(b) - G(a))

    def sqrt_density_integral(self) -> float:
        """Integral of sqrt(p) over the segment."""
        if self.is_constant:
            return math.sqrt(self.coeffs[0]) * (self.x1 - self.x0)
        from scipy.integrate import quad

        val, _ = quad(lambda x: math.sqrt(max(self.poly(x), 0.0)), self.x0, self.x1,
                      epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def max_density(self) -> float:
        grid = np.linspace(self.x0, self.x1, _CHECK_POINTS)
        return float(np.max(self.poly(grid)))


@dataclass(frozen=True)
class CantorComponent:
    """Middle-gap Cantor measure approximated at a finite dyadic depth.

    The depth-k realization puts ``mass / 2**k`` at the midpoint of each of
    the 2**k intervals produced by iterating the two contractions of ratio
    ``ratio`` that fix the ends of ``[x0, x1]``.
    """

    x0: float
    x1: float
    mass: float
    depth: int
    ratio: float = 1.0 / 3.0

    def __post_init__(self):
        if not self.x0 < self.x1:
            raise DomainError("Cantor support needs x0 < x1")
        if not self.mass > 0:
            raise DomainError("Cantor mass must be positive")
        if int(self.depth) != self.depth or self.depth < 1:
            raise DomainError("Cantor depth must be an integer >= 1")
        if not 0.0 < self.ratio < 0.5:
            raise DomainError("contraction ratio must lie in (0, 1/2)")

    def atoms(self) -> list[tuple[float, float]]:
        lefts = np.array([self.x0])
        width = self.x1 - self.x0
        for _ in range(self.depth):
            width_next = width * self.ratio
            lefts = np.concatenate([lefts, lefts + (width - width_next)])
            width = width_next
        lefts.sort()
        m = self.mass / 2**self.depth
        return [(float(a + 0.5 * width), m) for a in lefts]


@dataclass(frozen=True)
class MassDistribution:
    length: float
    segments: tuple[DensitySegment, ...] = ()
    point_masses: tuple[tuple[float, float], ...] = ()
    singular_parts: tuple[CantorComponent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "length", float(self.length))
        segs = tuple(sorted(self.segments, key=lambda s: s.x0))
        atoms = tuple(sorted((float(x), float(m)) for x, m in self.point_masses))
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "point_masses", atoms)
        object.__setattr__(self, "singular_parts", tuple(self.singular_parts))
        L = self.length
        if not (L > 0 and math.isfinite(L)):
            raise DomainError(f"length must be positive and finite, got {L}")
        for s in segs:
            if s.x0 < 0 or s.x1 > L:
                raise DomainError(f"segment [{s.x0}, {s.x1}] outside [0, {L}]")
        for a, b in zip(segs, segs[1:]):
            if b.x0 < a.x1:
                raise DomainError(f"segments [{a.x0}, {a.x1}] and [{b.x0}, {b.x1}] overlap")
        for x, m in atoms:
            if not m > 0:
                raise DomainError(f"point mass at x={x} must be positive")
            if x <= 0:
                raise DomainError("no point mass allowed at the left end x = 0")
            if x > L:
                raise DomainError(f"point mass at x={x} outside (0, {L}]")
        for c in self.singular_parts:
            if c.x0 < 0 or c.x1 > L:
                raise DomainError("singular component support outside [0, L]")

    # -- queries -------------------------------------------------------------

    @cached_property
    def atoms(self) -> tuple[tuple[float, float], ...]:
        """All point masses, with singular components expanded, sorted by x."""
        expanded = list(self.point_masses)
        for c in self.singular_parts:
            expanded.extend(c.atoms())
        expanded.sort()
        merged: list[list[float]] = []
        for x, m in expanded:
            if merged and merged[-1][0] == x:
                merged[-1][1] += m
            else:
                merged.append([x, m])
        return tuple((x, m) for x, m in merged)

    @property
    def total_mass(self) -> float:
        return math.fsum([s.mass for s in self.segments] + [m for _, m in self.atoms])

    def eval_mass(self, x: float, side: str = "right") -> float:
        """M(x - 0) for ``side='left'``, M(x + 0) for ``side='right'``."""
        if side not in ("left", "right"):
            raise DomainError(f"side must be 'left' or 'right', got {side!r}")
        if not 0.0 <= x <= self.length:
            raise DomainError(f"x={x} outside [0, {self.length}]")
        parts = [s.mass_between(0.0, x) for s in self.segments]
        if side == "right":
            parts += [m for a, m in self.atoms if a <= x]
        else:
            parts += [m for a, m in self.atoms if a < x]
        return math.fsum(parts)

    def sqrt_density_integral(self) -> float:
        """Integral of sqrt(M'(x)) over [0, L]; atoms contribute nothing."""
        return math.fsum(s.sqrt_density_integral() for s in self.segments)

    def density_at(self, x: float) -> float:
        """Absolutely continuous density p(x + 0); zero off the segments."""
        for s in self.segments:
            if s.x0 <= x < s.x1:
                return float(s.poly(x))
        return 0.0

    def growth_at_origin(self, eps_grid=(1e-2, 1e-4, 1e-6, 1e-8)) -> bool:
        """True when M(eps) > M(0) on every grid point, i.e. inf of growth set is 0."""
        return all(self.eval_mass(min(e, self.length)) > 0.0 for e in eps_grid)

    def massless_right_tail(self) -> float:
        """Length of the mass-free interval adjacent to x = L."""
        ends = [s.x1 for s in self.segments if s.mass > 0]
        ends += [x for x, _ in self.atoms if x < self.length]
        return self.length - max(ends, default=0.0)

    # -- transforms ------------------------------------------------------------

    def discretize(self, n_per_segment: int) -> "MassDistribution":
        """Replace every density segment by ``n_per_segment`` equal-mass atoms.

        Each atom sits at the mass centroid of its cell, so the total mass
        and the first moment of every segment are reproduced exactly.
        """
        if int(n_per_segment) != n_per_segment or n_per_segment < 1:
            raise DomainError("n_per_segment must be an integer >= 1")
        n = int(n_per_segment)
        new_atoms = list(self.atoms)
        for seg in self.segments:
            total = seg.mass
            if total <= 0:
                continue
            if seg.is_constant:
                edges = [seg.x0 + (seg.x1 - seg.x0) * i / n for i in range(n)]
            else:
                edges = [seg.x0]
                for i in range(1, n):
                    target = total * i / n
                    edges.append(brentq(lambda t: seg.mass_between(seg.x0, t) - target,
                                        edges[-1], seg.x1, xtol=1e-15, rtol=1e-15))
            edges.append(seg.x1)
            cell_mass = [total / n] * n
            cell_mass[-1] = total - math.fsum(cell_mass[:-1])
            for a, b, m in zip(edges, edges[1:], cell_mass):
                centroid = seg.moment_between(a, b) / seg.mass_between(a, b)
                new_atoms.append((min(max(centroid, a), b), m))
        return MassDistribution(self.length, (), tuple(_merge_atoms(new_atoms)), ())

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "segments": [{"x0": s.x0, "x1": s.x1, "poly": list(s.coeffs)} for s in self.segments],
            "point_masses": [{"x": x, "m": m} for x, m in self.point_masses],
            "singular": [
                {"x0": c.x0, "x1": c.x1, "mass": c.mass, "depth": c.depth, "ratio": c.ratio}
                for c in self.singular_parts
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MassDistribution":
        _check_keys(data, {"length"}, {"segments", "point_masses", "singular"}, "mass file")
        try:
            segs = []
            for i, s in enumerate(data.get("segments", [])):
                where = f"segments[{i}]"
                _check_keys(s, {"x0", "x1"}, {"poly"}, where)
                segs.append(DensitySegment(_num(s, "x0", where), _num(s, "x1", where),
                                           tuple(_num_list(s.get("poly", [1.0]), where + ".poly"))))
            atoms = []
            for i, a in enumerate(data.get("point_masses", [])):
                where = f"point_masses[{i}]"
                _check_keys(a, {"x", "m"}, set(), where)
                atoms.append((_num(a, "x", where), _num(a, "m", where)))
            sing = []
            for i, c in enumerate(data.get("singular", [])):
                where = f"singular[{i}]"
                _check_keys(c, {"x0", "x1", "mass", "depth"}, {"ratio"}, where)
                depth = c["depth"]
                if not isinstance(depth, int) or isinstance(depth, bool):
                    raise InputError("depth must be an integer", f"{where}.depth")
                sing.append(CantorComponent(_num(c, "x0", where), _num(c, "x1", where),
                                            _num(c, "mass", where), depth,
                                            float(c.get("ratio", 1.0 / 3.0))))
            return cls(_num(data, "length", "mass file"), tuple(segs), tuple(atoms), tuple(sing))
        except DomainError as exc:
            raise InputError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "MassDistribution":
        return cls.from_dict(_load_json(path))


# -- constructors for the standard test strings ---------------------------------

def homogeneous(length: float = 1.0, density: float = 1.0) -> MassDistribution:
    return MassDistribution(length, (DensitySegment(0.0, length, (density,)),))


def two_segment(p_left: float = 1.0, p_right: float = 4.0, split: float = 0.5,
                length: float = 1.0) -> MassDistribution:
    return MassDistribution(length, (DensitySegment(0.0, split, (p_left,)),
                                     DensitySegment(split, length, (p_right,))))


def single_atom(position: float = 1.0, mass: float = 1.0, length: float = 2.0) -> MassDistribution:
    return MassDistribution(length, (), ((position, mass),))


def cantor_chain(depth: int, mass: float = 1.0, length: float = 1.0,
                 ratio: float = 1.0 / 3.0) -> MassDistribution:
    return MassDistribution(length, (), (), (CantorComponent(0.0, length, mass, depth, ratio),))


# -- helpers ------------------------------------------------------------------------

def _merge_atoms(atoms):
    atoms = sorted(atoms)
    out: list[list[float]] = []
    for x, m in atoms:
        if out and out[-1][0] == x:
            out[-1][1] += m
        else:
            out.append([x, m])
    return [(x, m) for x, m in out]


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read file: {exc}", str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                         str(path)) from exc


def _check_keys(obj, required, optional, where):
    if not isinstance(obj, dict):
        raise InputError("expected a JSON object", where)
    unknown = sorted(set(obj) - required - optional)
    if unknown:
        raise InputError(f"unknown key {unknown[0]!r}", where)
    missing = sorted(required - set(obj))
    if missing:
        raise InputError(f"missing key {missing[0]!r}", where)


def _num(obj, key, where):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"key {key!r} must be a number", where)
    return float(v)


def _num_list(values, where):
    if not isinstance(values, list):
        raise InputError("expected a list of numbers", where)
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InputError("expected a list of numbers", where)
        out.append(float(v))
    return out
