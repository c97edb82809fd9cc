"""Forward spectral problem: propagate the fundamental solutions through M.

The string equation is taken in its measure form: across an atom (x, m) the
value is continuous and the right derivative jumps by ``-lam * m * y(x)``;
on a density segment ``y'' + lam * p(x) * y = 0``; on mass-free gaps y is
linear.  phi starts from (1, 0) and psi from (0, 1) at x = 0.

Both solutions are carried together as the fundamental matrix
``[[phi, psi], [phi', psi']]`` times ``exp(log_scale)``, which keeps large
negative or complex spectral parameters free of overflow.  For real
``lam >= 0`` the Pruefer angle ``atan2(y, y')`` of each solution is tracked
continuously; it is nondecreasing in x and in lam, and ``floor(angle/pi)``
counts eigenvalues, so no root is ever skipped.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalFailure, PoleProximityError, SearchBoundError
from .extrapolation import (CONVERGED, DIVERGED_TO_INFINITY, DIVERGED_TO_ZERO, AsymptoticReport, judge,
                            loglog_slope, richardson_table)
from .measure import MassDistribution

log = logging.getLogger(__name__)

ODE_TOL = 1e-10
_RESCALE = 1e100
_MAX_PHASE = 0.5          # radians per Magnus step when tracking the angle
_MIN_REL_STEP = 1e-13
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class FundamentalPair:
    """phi, phi'_+, psi, psi'_+ at ``x`` for spectral parameter ``lam``.

    The stored numbers are mantissas; the true values are the mantissas times
    ``exp(log_scale)``.  ``log_scale`` stays 0 unless a value would exceed
    1e100, so for moderate ``lam`` the fields are the plain values.
    """

    x: float
    lam: complex
    phi: complex
    phi_prime: complex
    psi: complex
    psi_prime: complex
    log_scale: float = 0.0
    phi_angle: float | None = None
    psi_angle: float | None = None

    @property
    def wronskian(self):
        w = self.phi * self.psi_prime - self.phi_prime * self.psi
        return w * math.exp(2.0 * self.log_scale) if self.log_scale else w

    @property
    def compliance(self):
        """psi / phi (scale-free)."""
        return self.psi / self.phi

    def values(self):
        """(phi, phi', psi, psi') with the scale applied (may overflow to inf)."""
        f = math.exp(self.log_scale) if self.log_scale < 709 else math.inf
        return (self.phi * f, self.phi_prime * f, self.psi * f, self.psi_prime * f)


@dataclass
class SpectrumResult:
    kind: str                      # "s1" (phi zeros) or "s0" (psi zeros)
    values: np.ndarray
    residuals: np.ndarray          # |characteristic function| at each root
    bracket_widths: np.ndarray
    truncated: bool = False

    def __len__(self):
        return len(self.values)


# -- elementary transfers ---------------------------------------------------------

def _const_transfer(q, h):
    """Transfer matrix of y'' + q y = 0 over length h, as (a, b, c, d, log_factor)."""
    if q == 0:
        return 1.0, h, 0.0, 1.0, 0.0
    if isinstance(q, complex):
        k = cmath.sqrt(q)
        w = k * h
        t = abs(w.imag)
        ep = cmath.exp(1j * w - t)
        em = cmath.exp(-1j * w - t)
        cos_w = 0.5 * (ep + em)
        sin_w = -0.5j * (ep - em)
        if abs(w) < 1e-6:
            s_over_k = h * (1 - w * w / 6) * math.exp(-t)
        else:
            s_over_k = sin_w / k
        return cos_w, s_over_k, -k * sin_w, cos_w, t
    if q > 0:
        k = math.sqrt(q)
        c, s = math.cos(k * h), math.sin(k * h)
        return c, s / k, -k * s, c, 0.0
    kappa = math.sqrt(-q)
    t = kappa * h
    if t < 20.0:
        ch, sh = math.cosh(t), math.sinh(t)
        return ch, (sh / kappa if t > 1e-8 else h), kappa * sh, ch, 0.0
    e = math.exp(-2.0 * t)
    ch = 0.5 * (1 + e)
    sh = 0.5 * (1 - e)
    return ch, sh / kappa, kappa * sh, ch, t


def _magnus_step(lam, poly, x, h):
    """Fourth-order Magnus transfer for y'' + lam p(x) y = 0 over [x, x+h]."""
    q1 = lam * poly(x + h * (0.5 - _SQRT3 / 6))
    q2 = lam * poly(x + h * (0.5 + _SQRT3 / 6))
    alpha = _SQRT3 * h * h / 12.0 * (q2 - q1)
    beta = -0.5 * h * (q1 + q2)
    # Omega = [[alpha, h], [beta, -alpha]] is traceless: exp = cosh(s) I + sinh(s)/s Omega
    s2 = alpha * alpha + h * beta
    if isinstance(s2, complex):
        s = cmath.sqrt(s2)
        t = abs(s.real)
        ep, em = cmath.exp(s - t), cmath.exp(-s - t)
        ch = 0.5 * (ep + em)
        shs = 0.5 * (ep - em) / s if abs(s) > 1e-8 else (1 + s2 / 6) * math.exp(-t)
    elif s2 >= 0:
        s = math.sqrt(s2)
        t = s if s > 20.0 else 0.0
        if t:
            e = math.exp(-2 * s)
            ch, shs = 0.5 * (1 + e), 0.5 * (1 - e) / s
        else:
            ch = math.cosh(s)
            shs = math.sinh(s) / s if s > 1e-8 else 1 + s2 / 6
    else:
        w = math.sqrt(-s2)
        t = 0.0
        ch = math.cos(w)
        shs = math.sin(w) / w if w > 1e-8 else 1 + s2 / 6
    return ch + shs * alpha, shs * h, shs * beta, ch - shs * alpha, t


def _rel_angle(u1, u0, v1, v0):
    """Signed angle from (u1, u0) to (v1, v0) in the (y', y) plane."""
    return math.atan2(u1 * v0 - u0 * v1, u1 * v1 + u0 * v0)


class _State:
    """Fundamental matrix mantissa [[f, g], [fp, gp]], log scale, angles."""

    __slots__ = ("f", "g", "fp", "gp", "log_scale", "af", "ag", "track")

    def __init__(self, track):
        self.f, self.g, self.fp, self.gp = 1.0, 0.0, 0.0, 1.0
        self.log_scale = 0.0
        self.track = track
        self.af = 0.5 * math.pi if track else None
        self.ag = 0.0 if track else None

    def apply(self, a, b, c, d, t, angles=True):
        f0, g0, fp0, gp0 = self.f, self.g, self.fp, self.gp
        self.f, self.fp = a * f0 + b * fp0, c * f0 + d * fp0
        self.g, self.gp = a * g0 + b * gp0, c * g0 + d * gp0
        self.log_scale += t
        if self.track and angles:
            # valid only when the step turns each vector by less than pi
            self.af += _rel_angle(fp0, f0, self.fp, self.f)
            self.ag += _rel_angle(gp0, g0, self.gp, self.g)
        self._rescale()

    def jump(self, lam_m):
        f0, g0, fp0, gp0 = self.f, self.g, self.fp, self.gp
        self.fp -= lam_m * f0
        self.gp -= lam_m * g0
        if self.track:
            self.af += _rel_angle(fp0, f0, self.fp, f0)
            self.ag += _rel_angle(gp0, g0, self.gp, g0)
        self._rescale()

    def _rescale(self):
        n = max(abs(self.f), abs(self.g), abs(self.fp), abs(self.gp))
        if n > _RESCALE or (0 < n < 1 / _RESCALE):
            self.f, self.g, self.fp, self.gp = self.f / n, self.g / n, self.fp / n, self.gp / n
            self.log_scale += math.log(n)


def _scaled_angle(theta, k):
    """Map atan2(y, y') to atan2(k y, y') continuously (fixes multiples of pi/2)."""
    n = round(theta / math.pi)
    r = theta - n * math.pi
    return n * math.pi + math.atan(k * math.tan(r))


def _constant_piece_angles(state, theta_f, theta_g, k, h):
    """Angles after a constant piece: the scaled angle grows linearly at rate k."""
    out = []
    for theta, yp, y in ((theta_f, state.fp, state.f), (theta_g, state.gp, state.g)):
        ts = _scaled_angle(theta, k) + k * h
        tu = _scaled_angle(ts, 1.0 / k)
        # snap onto the propagated vector to remove drift
        tu += math.atan2(math.cos(tu) * y - math.sin(tu) * yp, math.cos(tu) * yp + math.sin(tu) * y)
        out.append(tu)
    return out


# -- propagation -------------------------------------------------------------------

def _pieces(M: MassDistribution):
    """Ordered propagation plan: ('seg', seg, a, b), ('gap', a, b), ('atom', x, m)."""
    L = M.length
    cuts = {0.0, L}
    for s in M.segments:
        cuts.update((s.x0, s.x1))
    atoms = M.atoms
    cuts.update(x for x, _ in atoms)
    cuts = sorted(cuts)
    atom_at = {}
    for x, m in atoms:
        atom_at[x] = atom_at.get(x, 0.0) + m
    plan = []
    for a, b in zip(cuts, cuts[1:]):
        if a in atom_at:
            plan.append(("atom", a, atom_at[a]))
        seg = next((s for s in M.segments if s.x0 <= a and b <= s.x1), None)
        if seg is None:
            plan.append(("gap", a, b))
        else:
            plan.append(("seg", seg, a, b))
    if L in atom_at:
        plan.append(("atom", L, atom_at[L]))
    return plan


def _as_param(lam):
    if isinstance(lam, (complex, np.complexfloating)):
        lam = complex(lam)
        return lam.real if lam.imag == 0 else lam
    return float(lam)


def _march(M: MassDistribution, lam, tol=ODE_TOL, plan=None) -> _State:
    lam = _as_param(lam)
    track = not isinstance(lam, complex) and lam >= 0
    st = _State(track)
    for piece in plan if plan is not None else _pieces(M):
        kind = piece[0]
        if kind == "atom":
            if lam != 0:
                st.jump(lam * piece[2])
        elif kind == "gap":
            st.apply(1.0, piece[2] - piece[1], 0.0, 1.0, 0.0)
        else:
            seg, a, b = piece[1], piece[2], piece[3]
            if seg.is_constant:
                q = lam * seg.coeffs[0]
                mat = _const_transfer(q, b - a)
                if track and q > 0:
                    before = (st.af, st.ag)
                    st.apply(*mat, angles=False)
                    st.af, st.ag = _constant_piece_angles(st, *before, math.sqrt(q), b - a)
                else:
                    st.apply(*mat)
            else:
                _march_variable(st, lam, seg, a, b, tol)
    return st


def _march_variable(st, lam, seg, a, b, tol):
    poly = seg.poly
    pmax = seg.max_density()
    scale = math.sqrt(abs(lam) * pmax) if lam != 0 else 0.0
    h_cap = (b - a) if scale == 0 else min(b - a, _MAX_PHASE / scale)
    h = h_cap
    x = a
    while x < b:
        h = min(h, b - x, h_cap)
        if h < _MIN_REL_STEP * max(1.0, b - a):
            raise NumericalFailure("step size underflow in density segment", position=x)
        full = _magnus_step(lam, poly, x, h)
        h2 = 0.5 * h
        p1 = _magnus_step(lam, poly, x, h2)
        p2 = _magnus_step(lam, poly, x + h2, h2)
        # compose the two half steps: p2 @ p1
        half = (p2[0] * p1[0] + p2[1] * p1[2], p2[0] * p1[1] + p2[1] * p1[3],
                p2[2] * p1[0] + p2[3] * p1[2], p2[2] * p1[1] + p2[3] * p1[3])
        t_half = p1[4] + p2[4]
        f = math.exp(full[4] - t_half)
        err = max(abs(full[i] * f - half[i]) for i in range(4)) / 15.0
        norm = max(abs(v) for v in half)
        if err <= tol * max(norm, 1.0) or h <= _MIN_REL_STEP * 4:
            st.apply(*half, t_half)
            x += h
            grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol * max(norm, 1.0) / err) ** 0.2)
            h *= max(grow, 0.2)
        else:
            h *= max(0.2, 0.9 * (tol * max(norm, 1.0) / err) ** 0.2)


def propagate(M: MassDistribution, lam, tol: float = ODE_TOL) -> FundamentalPair:
    """Fundamental solutions at x = L for spectral parameter ``lam``."""
    st = _march(M, lam, tol)
    return FundamentalPair(M.length, _as_param(lam), st.f, st.fp, st.g, st.gp,
                           st.log_scale, st.af, st.ag)


# -- spectra -----------------------------------------------------------------------

def _angle(M, lam, which, tol, plan):
    st = _march(M, lam, tol, plan)
    return st.af if which == "s1" else st.ag


def _available(M: MassDistribution):
    """Number of eigenvalues of each problem (inf when M has a density part)."""
    if any(s.mass > 0 for s in M.segments):
        return math.inf
    return sum(1 for x, _ in M.atoms if x < M.length)


def _prediction(M: MassDistribution, n: int) -> float:
    """Rough upper estimate of the n-th eigenvalue used to size the search."""
    b = M.sqrt_density_integral()
    if b > 0:
        return (math.pi * (n + 0.5) / b) ** 2
    # Gershgorin bound of the Dirichlet chain matrix (upper bound for both problems)
    xs = [0.0] + [x for x, _ in M.atoms if x < M.length] + [M.length]
    ms = [m for x, m in M.atoms if x < M.length]
    return max((1 / (xs[i + 1] - xs[i]) + 1 / (xs[i + 2] - xs[i + 1])) * 2 / ms[i]
               for i in range(len(ms)))


def _spectrum(M, n_max, tol, which, ode_tol=ODE_TOL) -> SpectrumResult:
    if int(n_max) != n_max or n_max < 1:
        raise DomainError("n_max must be an integer >= 1")
    if not 0 < tol < 1:
        raise DomainError("tol must lie in (0, 1)")
    n_avail = _available(M)
    target = int(min(n_max, n_avail))
    truncated = target < n_max
    if target == 0:
        return SpectrumResult(which, np.array([]), np.array([]), np.array([]), truncated)
    plan = _pieces(M)

    def g(k, n):
        return _angle(M, k * k, which, ode_tol, plan) - n * math.pi

    bound = 4.0 * _prediction(M, target)
    for attempt in range(4):
        found = math.floor(_angle(M, bound, which, ode_tol, plan) / math.pi)
        if found >= target:
            break
        if attempt == 3:
            raise SearchBoundError(f"search bound {bound:.6g} exhausted for {which}", found)
        bound *= 2.0
    k_max = math.sqrt(bound)

    roots, widths, residuals = [], [], []
    k_lo = 0.0
    for n in range(1, target + 1):
        # near-linear growth of the angle in sqrt(lam): guess the next root from the spacing
        hi = k_max
        if len(roots) >= 2:
            guess = k_lo + 1.5 * (roots[-1] - roots[-2])
            if guess < k_max and g(guess, n) > 0:
                hi = guess
        k = brentq(g, k_lo, hi, args=(n,), xtol=1e-300, rtol=max(tol / 2, 4.5e-16), maxiter=200)
        widths.append(hi * hi - k_lo * k_lo)
        pair = propagate(M, k * k, ode_tol)
        val = pair.phi if which == "s1" else pair.psi
        residuals.append(abs(val) * math.exp(pair.log_scale))
        roots.append(k)
        k_lo = k
    lam = np.array(roots) ** 2
    return SpectrumResult(which, lam, np.array(residuals), np.array(widths), truncated)


def eigenvalues_s1(M: MassDistribution, n_max: int, tol: float = 1e-12,
                   ode_tol: float = ODE_TOL) -> SpectrumResult:
    """First zeros of lam -> phi(L, lam): the free-left/fixed-right spectrum."""
    return _spectrum(M, n_max, tol, "s1", ode_tol)


def eigenvalues_s0(M: MassDistribution, n_max: int, tol: float = 1e-12,
                   ode_tol: float = ODE_TOL) -> SpectrumResult:
    """First zeros of lam -> psi(L, lam): the fixed-fixed spectrum."""
    return _spectrum(M, n_max, tol, "s0", ode_tol)


def eigenvalue_count(M: MassDistribution, lam: float, which: str = "s1",
                     ode_tol: float = ODE_TOL) -> int:
    """Number of eigenvalues <= lam (oscillation count)."""
    if lam < 0:
        return 0
    return math.floor(_angle(M, lam, which, ode_tol, None) / math.pi)


# -- compliance ----------------------------------------------------------------------

def compliance_forward(M: MassDistribution, z, tol: float = ODE_TOL):
    """Dynamic compliance T(z) = psi(L, z) / phi(L, z)."""
    pair = propagate(M, z, tol)
    if abs(pair.phi) <= 1e-13 * max(abs(pair.phi_prime) * M.length, abs(pair.psi) / M.length,
                                    abs(pair.phi)):
        raise PoleProximityError(f"z={z!r} is numerically a zero of phi(L, .)")
    return pair.compliance


DEFAULT_Z_GRID = tuple(100.0 * 2.0**k for k in range(16))


def density_at_origin_limit(M: MassDistribution, z_grid=DEFAULT_Z_GRID, order: int = 3,
                            tol: float = 1e-6, ode_tol: float = ODE_TOL) -> AsymptoticReport:
    """Estimate lim (phi(L,-z) / (sqrt(z) psi(L,-z)))**2 as z -> +inf.

    The ratio is evaluated on ``z_grid`` and extrapolated polynomially in
    1/sqrt(z).  A raw sequence decaying like a power of z is reported as
    ``diverged-to-zero`` (zero density at the origin).
    """
    z = np.asarray(z_grid, dtype=float)
    if len(z) < 4 or np.any(np.diff(z) <= 0) or z[0] <= 0:
        raise DomainError("z_grid must be increasing, positive, with at least 4 points")
    raw = []
    for zi in z:
        pair = propagate(M, -zi, ode_tol)
        if pair.psi == 0:
            raise NumericalFailure(f"psi(L, -{zi}) vanished; positivity of spectra violated")
        raw.append((pair.phi / pair.psi) ** 2 / zi)
    h = 1.0 / np.sqrt(z)
    table = richardson_table(h, raw, order)
    partials = [v for _, v in table]
    verdict = judge(z, raw, partials, tol)
    est = {DIVERGED_TO_ZERO: 0.0, DIVERGED_TO_INFINITY: math.inf}.get(verdict, partials[-1])
    report = AsymptoticReport(est, f"richardson(1/sqrt(z), order={order})",
                              [(float(zz), float(r)) for zz, r in zip(z, raw)], verdict)
    report.bound = abs(partials[-1] - partials[-2]) if len(partials) > 1 else math.nan
    if verdict == DIVERGED_TO_ZERO:
        report.notes.append("zero density at origin")
        report.notes.append(f"raw log-log slope {loglog_slope(z[-5:], raw[-5:]):.3f}")
    elif verdict != CONVERGED:
        report.notes.append("not converged: last extrapolants differ by more than tol")
    return report
