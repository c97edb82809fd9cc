"""Limits at the left end and at high frequency: Kasahara constants, the
mass-at-origin limits, effective length and the zero-density classifier."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import DomainError, InputError, UnboundedTailError
from .extrapolation import (CONVERGED, DIVERGED_TO_INFINITY, DIVERGED_TO_ZERO, INCONCLUSIVE, AsymptoticReport,
                            judge, loglog_slope, lsq_intercept, richardson_table)
from .twospectra import TwoSpectra, residues

DEFAULT_Z_GRID = tuple(100.0 * 2.0**k for k in range(16))
POSITIVE_DENSITY = "positive-density-possible"
DENSITY_ZERO = "density-zero-ae"
# lower-envelope log-log slopes separating the classifier outcomes
ZERO_SLOPE = -0.1
FLAT_SLOPE = -0.05
CLASSIFY_THRESHOLD = 1e-3


def b_alpha(alpha: float) -> float:
    """B(a) = (a/(a+1)^2)^(a/(a+1)) / Gamma((2a+1)/(a+1))^2."""
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be a positive finite number, got {alpha!r}")
    a = float(alpha)
    e = a / (a + 1)
    return (a / (a + 1) ** 2) ** e / math.gamma((2 * a + 1) / (a + 1)) ** 2


def _compliance_constant(alpha):
    a = alpha
    return (b_alpha(a) * math.gamma(1 / (a + 1)) * math.gamma((2 * a + 1) / (a + 1))) ** (a + 1)


def mass_limit_from_compliance(limit: float, alpha: float) -> float:
    """lim M(x)/x^a given lim T(-z) z^(1/(a+1))."""
    if limit <= 0:
        return math.inf
    return _compliance_constant(alpha) * limit ** (-(alpha + 1))


def mass_limit_from_tau(limit: float, alpha: float) -> float:
    """lim M(x)/x^a given lim tau(lam) lam^(-a/(a+1))."""
    if limit <= 0:
        return math.inf
    return (limit / b_alpha(alpha)) ** (-(alpha + 1))


def kasahara_from_compliance(sampler: Callable[[float], float], alpha: float, z_grid=DEFAULT_Z_GRID,
                             order: int = 3, tol: float = 1e-6) -> AsymptoticReport:
    """Estimate lim M(x)/x^alpha from samples of the compliance on the negative axis.

    ``sampler(z)`` must return T(z) for z < 0.  The products T(-z) z^(1/(a+1))
    are extrapolated in z^(-1/(a+1)) and mapped to the mass limit.
    """
    b_alpha(alpha)
    z = np.asarray(z_grid, dtype=float)
    if len(z) < 4 or np.any(z <= 0) or np.any(np.diff(z) <= 0):
        raise DomainError("z_grid must be at least 4 increasing positives")
    e = 1.0 / (alpha + 1)
    raw = np.array([float(sampler(-zi)) * zi**e for zi in z])
    h = z ** -e
    ext = richardson_table(h, raw, order)
    partials = [mass_limit_from_compliance(v, alpha) for _, v in ext]
    mapped_raw = [mass_limit_from_compliance(v, alpha) for v in raw]
    verdict = judge(z, mapped_raw, partials, tol)
    table = [(float(zi), m) for zi, m in zip(z[len(z) - len(partials):], partials)]
    notes = []
    if verdict != CONVERGED:
        notes.append("limit of T(-z) z^(1/(alpha+1)) not established on this grid")
    est = _estimate(verdict, partials[-1], mapped_raw[-1])
    bound = abs(partials[-1] - partials[-2]) if len(partials) > 1 else math.nan
    return AsymptoticReport(est, "compliance", table, verdict, bound, notes)


def _estimate(verdict, extrapolated, last_raw):
    if verdict == CONVERGED:
        return extrapolated
    if verdict == DIVERGED_TO_ZERO:
        return 0.0
    if verdict == DIVERGED_TO_INFINITY:
        return math.inf
    return last_raw


def _tau_sequence(S: TwoSpectra, alpha):
    """tau(mu_n) mu_n^(-a/(a+1)) with tau taken at the node midpoint."""
    rho = residues(S)
    tau_mid = np.cumsum(rho) - 0.5 * rho
    return tau_mid * S.mu ** (-alpha / (alpha + 1))


def _tail_fits(n, seq, start_frac=0.5, min_points=6):
    """Intercepts of least-squares fits seq ~ c + d/n over windows [m/2, m]."""
    out = []
    for m in range(max(min_points * 2, 8), len(seq) + 1):
        lo = int(m * start_frac)
        c, _ = lsq_intercept(1.0 / n[lo:m], seq[lo:m])
        out.append((int(n[m - 1]), c))
    return out


def kasahara_from_tau(S: TwoSpectra, alpha: float, tol: float = 2e-3) -> AsymptoticReport:
    """Estimate lim M(x)/x^alpha from the main spectral function at its nodes.

    The sequence tau(mu_n) mu_n^(-alpha/(alpha+1)) is fitted by c + d/n on a
    trailing window; the intercepts form the convergence table.
    """
    b_alpha(alpha)
    if S.tail.kind == "none":
        raise UnboundedTailError("the spectral-function limit needs a tail model")
    return _tau_report(S, alpha, tol)


def _tau_report(S, alpha, tol):
    n = np.arange(1, S.N + 1, dtype=float)
    seq = _tau_sequence(S, alpha)
    if S.N < 12:
        raise InputError("need at least 12 eigenvalues", "mu")
    fits = _tail_fits(n, seq)
    partials = [mass_limit_from_tau(c, alpha) for _, c in fits]
    mapped_raw = [mass_limit_from_tau(v, alpha) for v in seq]
    verdict = judge(n, mapped_raw, partials, tol)
    table = [(float(k), m) for (k, _), m in zip(fits, partials)]
    bound = float(np.ptp(partials[-5:])) if len(partials) >= 5 else math.nan
    est = _estimate(verdict, partials[-1], mapped_raw[-1])
    return AsymptoticReport(est, "tau", table, verdict, bound, [])


def check_alpha_conditions(S: TwoSpectra, alpha: float, tol: float = 1e-2) -> dict:
    """Empirical check of the two conditions for the alpha-limit.

    (1) tau(mu_n) mu_n^(-alpha/(alpha+1)) has a finite nonzero limit;
    (2) mu_(k+1)/mu_k -> 1.  Works with or without a tail model (the prefix
    residues are used as they are).
    """
    b_alpha(alpha)
    n = np.arange(1, S.N + 1, dtype=float)
    seq = _tau_sequence(S, alpha)
    fits = _tail_fits(n, seq) if S.N >= 12 else [(int(k), v) for k, v in zip(n, seq)]
    partials = [c for _, c in fits]
    v1 = judge(n, seq, partials, tol)
    ratio = S.mu[1:] / S.mu[:-1]
    k = n[:-1]
    rfits = _tail_fits(k, ratio) if len(ratio) >= 12 else [(int(i), r) for i, r in zip(k, ratio)]
    r_lim = rfits[-1][1]
    ok2 = abs(r_lim - 1) <= tol
    return {
        "alpha": alpha,
        "sequence_limit": {"estimate": partials[-1], "verdict": v1, "passed": v1 == CONVERGED,
                           "table": [(float(a), float(b)) for a, b in fits]},
        "ratio_limit": {"estimate": r_lim, "passed": ok2,
                        "table": [(float(a), float(b)) for a, b in rfits]},
        "passed": v1 == CONVERGED and ok2,
    }


def krein_effective_length(mu, M=None, tol: float = 1e-3) -> AsymptoticReport:
    """lim n / sqrt(mu_n), compared with (1/pi) * integral of sqrt(M') when M is given.

    Partial estimates are intercepts of c + d/n fitted over trailing windows,
    which removes the O(1/n) bias of the raw sequence.
    """
    mu = np.asarray(mu, dtype=float)
    if len(mu) < 10:
        raise InputError("need at least 10 eigenvalues", "mu")
    n = np.arange(1, len(mu) + 1, dtype=float)
    seq = n / np.sqrt(mu)
    fits = _tail_fits(n, seq, min_points=3)
    partials = [c for _, c in fits]
    verdict = judge(n, seq, partials, tol)
    notes = []
    if M is not None:
        ref = M.sqrt_density_integral() / math.pi
        notes.append(f"density integral / pi = {ref!r}")
    else:
        ref = math.nan
    if verdict == DIVERGED_TO_ZERO:
        est = 0.0
    else:
        est = partials[-1]
    bound = float(np.ptp(partials[-5:])) if len(partials) >= 5 else math.nan
    return AsymptoticReport(est, "effective-length", [(float(a), float(b)) for a, b in fits],
                            verdict, bound, notes, ref)


def _lower_envelope(mu, first_block=2):
    n = np.arange(1, len(mu) + 1)
    s = n / np.sqrt(mu)
    xs, ys = [], []
    k = first_block
    while 2**k <= len(mu):
        sel = (n >= 2**k) & (n < 2 ** (k + 1))
        i = int(np.argmin(np.where(sel, s, np.inf)))
        xs.append(int(n[i]))
        ys.append(float(s[i]))
        k += 1
    return xs, ys


def classify_density(mu, threshold: float = CLASSIFY_THRESHOLD) -> tuple[str, dict]:
    """Decide whether liminf n/sqrt(mu_n) is zero, which forces M' = 0 a.e.

    Uses the minima of n/sqrt(mu_n) over dyadic index blocks.  A power-law
    decay of these minima (log-log slope <= ZERO_SLOPE) means the liminf is
    zero; a flat envelope above ``threshold`` leaves positive density possible.
    """
    mu = np.sort(np.asarray(mu, dtype=float))
    if len(mu) < 10:
        raise InputError("need at least 10 eigenvalues", "mu")
    if np.any(mu <= 0):
        raise InputError("eigenvalues must be positive", "mu")
    xs, ys = _lower_envelope(mu)
    slope = loglog_slope(xs, ys)
    info = {"slope": slope, "envelope": list(zip(xs, ys))}
    if slope <= ZERO_SLOPE or ys[-1] < threshold:
        return DENSITY_ZERO, info
    if slope > FLAT_SLOPE:
        return POSITIVE_DENSITY, info
    return INCONCLUSIVE, info
