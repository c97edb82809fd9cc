"""Sequence-limit estimation and the report type used for all asymptotic limits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONVERGED = "converged"
DIVERGED_TO_ZERO = "diverged-to-zero"
DIVERGED_TO_INFINITY = "diverged-to-infinity"
INCONCLUSIVE = "inconclusive"

# finite-data criterion for "limit exists, finite, nonzero"
WINDOW = 5
ZERO_THRESHOLD = 1e-6
# log-log slope beyond which a monotone sequence counts as a power-law trend
TREND_SLOPE = 0.25


@dataclass
class AsymptoticReport:
    estimate: float
    method: str
    table: list[tuple[float, float]] = field(default_factory=list)
    verdict: str = INCONCLUSIVE
    bound: float = math.nan
    notes: list[str] = field(default_factory=list)
    reference: float = math.nan

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "method": self.method,
            "verdict": self.verdict,
            "bound": self.bound,
            "table": [[p, v] for p, v in self.table],
            "notes": list(self.notes),
            "reference": self.reference,
        }


def neville(h, values, at=0.0):
    """Value at ``at`` of the polynomial interpolating (h, values)."""
    h = np.asarray(h, dtype=float)
    p = np.array(values, dtype=float)
    n = len(h)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = ((at - h[i + m]) * p[i] + (h[i] - at) * p[i + 1]) / (h[i] - h[i + m])
    return float(p[0])


def richardson_table(h, values, order):
    """Sliding-window polynomial extrapolation to h = 0.

    Entry i uses points i-order .. i; returns a list of (h_i, extrapolant).
    """
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    order = min(order, len(h) - 1)
    return [(float(h[i]), neville(h[i - order:i + 1], values[i - order:i + 1]))
            for i in range(order, len(h))]


def aitken(seq):
    """Aitken delta-squared transform; falls back to the raw term on zero curvature."""
    s = np.asarray(seq, dtype=float)
    out = []
    for i in range(len(s) - 2):
        d1 = s[i + 1] - s[i]
        d2 = s[i + 2] - 2 * s[i + 1] + s[i]
        if d2 == 0 or not math.isfinite(d2):
            out.append(float(s[i + 2]))
        else:
            out.append(float(s[i + 2] - (s[i + 2] - s[i + 1]) ** 2 / d2))
    return out


def lsq_intercept(h, values):
    """Intercept and slope of the least-squares line values ~ c + d*h."""
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    d, c = np.polyfit(h, values, 1)
    return float(c), float(d)


def loglog_slope(x, y):
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def judge(params, raw, partials, tol, zero_threshold=ZERO_THRESHOLD, window=WINDOW):
    """Verdict for a limit estimated from ``raw`` (sampled at ``params``).

    ``partials`` are the successive extrapolated estimates.  Converged means the
    last ``window`` partials agree to ``tol`` (relative) and stay above
    ``zero_threshold``; divergence verdicts need a monotone raw trend.
    """
    partials = [p for p in partials if math.isfinite(p)]
    k = min(window, len(partials))
    # a sequence heading to a finite nonzero limit has a flat log-log tail
    m = min(window, len(raw))
    flat = m < 3 or not abs(loglog_slope(params[-m:], raw[-m:])) >= TREND_SLOPE
    if k >= 2 and flat:
        last = np.asarray(partials[-k:])
        scale = np.max(np.abs(last))
        if np.ptp(last) <= tol * scale and abs(last[-1]) > zero_threshold:
            return CONVERGED
    k = min(window, len(raw))
    tail_p = np.asarray(params[-k:], dtype=float)
    tail = np.asarray(raw[-k:], dtype=float)
    if k >= 3:
        diffs = np.diff(tail)
        slope = loglog_slope(tail_p, tail)
        increasing_param = tail_p[-1] > tail_p[0]
        if not increasing_param:
            slope = -slope
        if np.all(diffs < 0) and (abs(partials[-1] if partials else tail[-1]) <= zero_threshold
                                  or slope <= -TREND_SLOPE):
            return DIVERGED_TO_ZERO
        if np.all(diffs > 0) and slope >= TREND_SLOPE:
            return DIVERGED_TO_INFINITY
    return INCONCLUSIVE
