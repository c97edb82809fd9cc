"""Quantities computable from the length L and the two spectra alone.

``mu`` is the spectrum with the left end free (zeros of phi(L, .)), ``lam``
the spectrum with both ends fixed (zeros of psi(L, .)).  Infinite products
over the spectra are split into the stored prefix and a tail; the tail is
taken from a reference class whose products are known in closed form,

    quadratic:  mu0_n = (pi (n - 1/2) / b)**2,  lam0_n = (pi n / b)**2
    quartic:    mu0_n = (pi (n - 1/2) / b)**4,  lam0_n = (pi n / b)**4

and the deviation of the true tail from the reference is bounded with a
power-law envelope |mu_n - mu0_n| <= C n**beta fitted on the prefix.
A tail class ``none`` declares the stored spectra complete (a finite
Stieltjes chain); products are then finite and exact.
"""
from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, InputError, TruncationWarning, UnboundedTailError
from .measure import _check_keys, _load_json, _num, _num_list

_EPS = np.finfo(float).eps
_TAIL_TERMS = 100_000
# Wallis-type constants: prod lam0_n^2 / (mu0_n mu0_{n+1}) over n >= 1
WALLIS = {"quadratic": math.pi**2 / 4, "quartic": math.pi**4 / 16}
_POWER = {"quadratic": 2, "quartic": 4}
_BETA_MAX = {"quadratic": 1.0, "quartic": 3.0}


@dataclass(frozen=True)
class TailModel:
    kind: str = "none"
    b: float = math.nan
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "quadratic", "quartic"):
            raise DomainError(f"unknown tail class {self.kind!r}")
        if self.kind != "none":
            if not self.b > 0:
                raise DomainError("tail parameter b must be positive")
            if not 0.0 <= self.beta < _BETA_MAX[self.kind]:
                raise DomainError(f"beta must lie in [0, {_BETA_MAX[self.kind]:g}) "
                                  f"for the {self.kind} class")

    def reference(self, n):
        """Reference eigenvalues (mu0_n, lam0_n) for the indices in ``n``."""
        n = np.asarray(n, dtype=float)
        p = _POWER[self.kind]
        return (math.pi * (n - 0.5) / self.b) ** p, (math.pi * n / self.b) ** p

    def to_dict(self):
        return {"class": self.kind, "b": self.b, "beta": self.beta}


@dataclass(frozen=True)
class Diagnostics:
    passed: bool
    first_violation: int | None = None
    beta_fit: float = math.nan
    messages: tuple[str, ...] = ()


@dataclass
class TwoSpectra:
    L: float
    mu: np.ndarray
    lam: np.ndarray
    tail: TailModel = field(default_factory=TailModel)
    precision: float = 0.0      # relative accuracy of the stored eigenvalues

    def __post_init__(self):
        self.L = float(self.L)
        self.mu = np.asarray(self.mu, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InputError("L must be positive and finite", "L")
        if self.mu.ndim != 1 or len(self.mu) == 0:
            raise InputError("mu must be a non-empty list", "mu")
        if len(self.lam) not in (len(self.mu), len(self.mu) - 1):
            raise InputError("lambda must have the length of mu or one less", "lambda")
        for name, arr in (("mu", self.mu), ("lambda", self.lam)):
            bad = np.flatnonzero(~np.isfinite(arr) | (arr <= 0))
            if len(bad):
                raise InputError("eigenvalues must be positive and finite", f"{name}[{bad[0]}]")
        self._cache = {}

    @property
    def N(self):
        return len(self.mu)

    # -- serialization ----------------------------------------------------------

    def to_dict(self):
        return {"L": self.L, "mu": self.mu.tolist(), "lambda": self.lam.tolist(),
                "tail": self.tail.to_dict()}

    @classmethod
    def from_dict(cls, data):
        _check_keys(data, {"L", "mu", "lambda"}, {"tail", "residuals", "truncated", "precision"},
                    "spectra file")
        tail = TailModel()
        if "tail" in data:
            t = data["tail"]
            _check_keys(t, {"class"}, {"b", "beta"}, "tail")
            try:
                tail = TailModel(t["class"], float(t.get("b", math.nan)), float(t.get("beta", 0.0)))
            except (DomainError, TypeError, ValueError) as exc:
                raise InputError(str(exc), "tail") from exc
        return cls(_num(data, "L", "spectra file"), _num_list(data["mu"], "mu"),
                   _num_list(data["lambda"], "lambda"), tail,
                   float(data.get("precision", 0.0)))

    @classmethod
    def load(cls, path):
        return cls.from_dict(_load_json(path))

    def with_tail(self, tail: TailModel) -> "TwoSpectra":
        return TwoSpectra(self.L, self.mu, self.lam, tail, self.precision)


# -- reference data and tail fitting ---------------------------------------------------

def reference_spectra(kind: str, b: float, n: int, L: float = 1.0, beta: float = 0.0) -> TwoSpectra:
    """Exact reference-class spectra with ``n`` pairs and the matching tail model."""
    tail = TailModel(kind, b, beta)
    mu0, lam0 = tail.reference(np.arange(1, n + 1))
    return TwoSpectra(L, mu0, lam0, tail)


_NOISE = 1e-12


def _envelope(n, resid, scale=None, rel_floor=_NOISE):
    """Power-law envelope C n**beta of |resid| from geometric block maxima.

    Residuals below ``rel_floor * scale`` are treated as zero (eigenvalue noise).
    """
    n = np.asarray(n, dtype=float)
    r = np.abs(np.asarray(resid, dtype=float))
    if scale is not None:
        r = np.where(r <= rel_floor * np.abs(scale), 0.0, r)
    if not np.any(r > 0):
        return 0.0, 0.0
    edges = np.unique(np.geomspace(n[0], n[-1] + 1, 9).astype(int))
    xs, ys = [], []
    for a, b in zip(edges, edges[1:]):
        sel = (n >= a) & (n < b)
        if sel.any() and r[sel].max() > 0:
            i = np.argmax(np.where(sel, r, -1.0))
            xs.append(n[i])
            ys.append(r[i])
    if len(xs) >= 2:
        slope = float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
    else:
        slope = 0.0
    beta = max(slope, 0.0)
    C = float(np.max(r / n**beta))
    return C, beta


def fit_tail(mu, lam, kind: str, beta_cap: float | None = None) -> TailModel:
    """Fit the reference-class parameter b and remainder exponent beta.

    b comes from the slope of mu_n**(1/p) against n on the trailing half of
    the prefix (p = 2 or 4); beta from the envelope of the residuals.  beta is
    clipped just below the class limit when the fit lands outside it.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    p = _POWER[kind]
    n = np.arange(1, len(mu) + 1)
    half = slice(len(mu) // 2, None)
    slope = np.polyfit(n[half], mu[half] ** (1.0 / p), 1)[0]
    b = math.pi / slope
    probe = TailModel(kind, b, 0.0)
    mu0, lam0 = probe.reference(n)
    m = len(lam)
    resid = np.concatenate([mu - mu0, lam - lam0[:m]])
    ref = np.concatenate([mu0, lam0[:m]])
    idx = np.concatenate([n, n[:m]])
    order = np.argsort(idx, kind="stable")
    h = len(idx) // 2
    _, beta = _envelope(idx[order][h:], resid[order][h:], ref[order][h:])
    cap = _BETA_MAX[kind] - 1e-9 if beta_cap is None else beta_cap
    return TailModel(kind, b, min(beta, cap))


def validate(S: TwoSpectra) -> Diagnostics:
    """Interlacing 0 < mu_1 < lam_1 < mu_2 < ... and tail-class residual growth."""
    seq = np.empty(len(S.mu) + len(S.lam))
    seq[0::2] = S.mu
    seq[1::2] = S.lam
    msgs = []
    if seq[0] <= 0:
        return Diagnostics(False, 1, math.nan, ("mu_1 must be positive",))
    bad = np.flatnonzero(np.diff(seq) <= 0)
    if len(bad):
        first = int(bad[0]) // 2 + 1
        which = "mu_{0} < lambda_{0}".format(first) if bad[0] % 2 == 0 else \
            "lambda_{0} < mu_{1}".format(first, first + 1)
        return Diagnostics(False, first, math.nan, (f"interlacing fails: {which}",))
    if S.tail.kind == "none":
        return Diagnostics(True, None, math.nan, ("no tail model",))
    n = np.arange(1, S.N + 1)
    mu0, lam0 = S.tail.reference(n)
    m = len(S.lam)
    half = slice(S.N // 2, None)
    floor = max(S.precision, _NOISE)
    _, beta_mu = _envelope(n[half], (S.mu - mu0)[half], mu0[half], floor)
    _, beta_lam = _envelope(n[:m][half], (S.lam - lam0[:m])[half], lam0[:m][half], floor)
    beta_fit = max(beta_mu, beta_lam)
    ok = beta_fit <= S.tail.beta + 0.1
    if not ok:
        msgs.append(f"residuals grow like n^{beta_fit:.3f}, above declared beta={S.tail.beta:g}")
    return Diagnostics(ok, None, beta_fit, tuple(msgs))


# -- products ------------------------------------------------------------------------

def _log_factor(z, ev):
    """log(1 - z/ev) summed over the eigenvalues ``ev`` (complex, any branch)."""
    if len(ev) == 0:
        return 0j
    t = -z / ev
    if isinstance(z, complex):
        return complex(np.sum(np.log1p(t)))
    pos = t > -1
    s = math.fsum(np.log1p(t[pos])) + math.fsum(np.log(-(1 + t[~pos])))
    return complex(s, math.pi * int(np.count_nonzero(~pos)))


def _sinc(d):
    return 1 - d * d / 6 if abs(d) < 1e-4 else cmath.sin(d) / d


def _log_tan_tail(v, b, n_lam, n_mu):
    """log of tan(b sqrt v)/(b sqrt v) with the first n_lam zero factors
    (1 - v/nu_k), nu_k = (pi k/b)^2, and n_mu pole factors (1 - v/eta_k),
    eta_k = (pi (k - 1/2)/b)^2, divided out.

    Near the real axis the closest zero and pole are cancelled analytically,
    so the result stays accurate at (and next to) the prefix eigenvalues.
    """
    v = complex(v)
    k_lam = np.arange(1, n_lam + 1, dtype=float)
    k_mu = np.arange(1, n_mu + 1, dtype=float)
    nu = (math.pi * k_lam / b) ** 2
    eta = (math.pi * (k_mu - 0.5) / b) ** 2
    w = b * cmath.sqrt(v)
    if abs(w) < 1e-4:
        return complex(np.sum(-np.log1p(-v / nu)) + np.sum(np.log1p(-v / eta))) + \
            cmath.log(1 + w * w / 3)
    if abs(w.imag) > 1.0:
        head = cmath.log(cmath.tan(w) / w)
        return head - complex(np.sum(np.log1p(-v / nu))) + complex(np.sum(np.log1p(-v / eta)))
    jz = int(round(w.real / math.pi))
    jp = int(round(w.real / math.pi + 0.5))
    if 1 <= jz <= n_lam:
        wz = math.pi * jz
        num = -(-1) ** jz * _sinc(w - wz) * wz * wz / (wz + w)
        nu = np.delete(nu, jz - 1)
    else:
        num = cmath.sin(w)
    if 1 <= jp <= n_mu:
        wp = math.pi * (jp - 0.5)
        den = -(-1) ** jp * _sinc(w - wp) * wp * wp / (wp + w)
        eta = np.delete(eta, jp - 1)
    else:
        den = cmath.cos(w)
    head = cmath.log(num / (den * w))
    return head - complex(np.sum(np.log1p(-v / nu))) + complex(np.sum(np.log1p(-v / eta)))


def _reference_log_tail(tail: TailModel, z, n_mu, n_lam):
    """log of prod_{k > n_lam}(1 - z/lam0_k) / prod_{k > n_mu}(1 - z/mu0_k)."""
    z = complex(z)
    if tail.kind == "quadratic":
        return _log_tan_tail(z, tail.b, n_lam, n_mu)
    u = cmath.sqrt(z)
    # quartic factors split as (1 - u/a)(1 + u/a) with a = reference value in u
    return _log_tan_tail(u, tail.b, n_lam, n_mu) + _log_tan_tail(-u, tail.b, n_lam, n_mu)


def _log_product(S: TwoSpectra, z):
    """log(T(z)/L) from the prefix and the reference tail (any branch)."""
    zc = complex(z)
    arg = zc if zc.imag != 0 else zc.real
    u = _log_factor(arg, S.lam) - _log_factor(arg, S.mu)
    if S.tail.kind != "none":
        u += _reference_log_tail(S.tail, zc, S.N, len(S.lam))
    return u


def _finish(z, val):
    if isinstance(z, complex) and z.imag != 0:
        return val
    return val.real


class ComplianceValue(NamedTuple):
    value: complex | float
    bound: float


def _tail_sum(terms_fn, start, beta_power):
    """Sum of terms_fn(k) for k > start with a power-law remainder estimate."""
    k = np.arange(start + 1, start + 1 + _TAIL_TERMS, dtype=float)
    vals = terms_fn(k)
    rem = vals[-1] * k[-1] / max(beta_power - 1.0, 1e-3)
    return float(np.sum(vals) + rem)


def _envelope_of(S: TwoSpectra):
    key = "envelope"
    if key not in S._cache:
        n = np.arange(1, S.N + 1)
        mu0, lam0 = S.tail.reference(n)
        m = len(S.lam)
        half = slice(S.N // 2, None)
        floor = max(S.precision, _NOISE)
        dm = np.abs(S.mu - mu0)[half]
        dl = np.abs(S.lam - lam0[:m])[half]
        dm[dm <= floor * mu0[half]] = 0.0
        dl[dl <= floor * lam0[:m][half]] = 0.0
        _, bm = _envelope(n[half], dm)
        _, bl = _envelope(n[:m][half], dl)
        beta = max(bm, bl, S.tail.beta)
        C = max(float(np.max(dm / n[half] ** beta)),
                float(np.max(dl / n[:m][half] ** beta)) if len(dl) else 0.0)
        S._cache[key] = (C, beta)
    return S._cache[key]


def compliance_product(S: TwoSpectra, z) -> ComplianceValue:
    """T(z) = L prod (1 - z/lam_k)/(1 - z/mu_k) with a bound on the neglected error.

    The bound covers the deviation of the true tail from the reference tail,
    the stated precision of the stored eigenvalues, and rounding.
    """
    zc = complex(z)
    if zc.imag == 0 and np.any(S.mu == zc.real):
        raise DomainError(f"z={z!r} is a pole (an element of mu)")
    u = _log_product(S, z)
    val = _finish(z, S.L * cmath.exp(u))
    err = (S.N + len(S.lam)) * 4 * _EPS
    az = abs(zc)
    if S.precision > 0:
        err += S.precision * az * float(np.sum(1 / np.abs(S.mu - zc) + 1 / np.abs(S.lam - zc)))
    if S.tail.kind != "none":
        C, beta = _envelope_of(S)
        if C > 0:
            p = _POWER[S.tail.kind]

            def terms(k):
                mu0, lam0 = S.tail.reference(k)
                return C * k**beta * az * (1 / (mu0 * np.abs(mu0 - zc)) + 1 / (lam0 * np.abs(lam0 - zc)))

            err += _tail_sum(terms, S.N, 2 * p - beta)
    return ComplianceValue(val, abs(val) * math.expm1(err))


def length_identity(S: TwoSpectra) -> dict:
    """Compare T(0) = L with the residue sum; the difference is the massless tail.

    For a complete (tail ``none``) spectrum the residue sum is finite.  With a
    tail class the sum beyond the prefix is estimated from the reference
    residues rescaled to the last stored residues.
    """
    rho = residues(S)
    head = math.fsum(rho / S.mu)
    tail_est = 0.0
    if S.tail.kind != "none":
        k = np.arange(S.N + 1, S.N + 1 + _TAIL_TERMS, dtype=float)
        ref = _reference_residues(S.tail, S.L, k)
        mu0, _ = S.tail.reference(k)
        last = np.arange(max(1, S.N - S.N // 4), S.N + 1)
        scale = float(np.mean(rho[last - 1] / _reference_residues(S.tail, S.L, last)))
        vals = scale * ref / mu0
        tail_est = float(np.sum(vals)) + float(vals[-1] * k[-1] / (_POWER[S.tail.kind] - 1))
    t0 = compliance_product(S, 0.0).value
    total = head + tail_est
    return {"T0": t0, "residue_sum": total, "residue_sum_prefix": head,
            "residue_tail": tail_est, "ell_inf": t0 - total}


def _reference_residues(tail: TailModel, L, k):
    """Jumps of the spectral function of the reference compliance."""
    k = np.asarray(k, dtype=float)
    s = math.pi * (k - 0.5) / tail.b
    if tail.kind == "quadratic":
        return np.full_like(s, 2 * L / tail.b**2)
    return 4 * L * s * np.tanh(tail.b * s) / tail.b**3


# -- residues and the spectral function ----------------------------------------------

def residue_jump(S: TwoSpectra, j: int) -> float:
    """rho_j = -res_{mu_j} T, for 1-based j within the stored prefix."""
    if not 1 <= j <= S.N:
        raise IndexError(f"residue index {j} outside 1..{S.N}")
    return float(residues(S)[j - 1])


def residues(S: TwoSpectra) -> np.ndarray:
    """All rho_j for the stored prefix, via the product representation."""
    if "rho" in S._cache:
        return S._cache["rho"]
    mu, lam = S.mu, S.lam
    out = np.empty(S.N)
    for j in range(S.N):
        x = mu[j]
        others = np.delete(mu, j)
        logs = [math.log(S.L)]
        sign = 1
        if j < len(lam):
            logs += [math.log(lam[j] - x), math.log(x), -math.log(lam[j])]
            lam_rest = np.delete(lam, j)
        else:
            # lam_N missing: the factor (1 - z/lam_N) belongs to the tail
            logs += [math.log(x)]
            lam_rest = lam
        t = 1 - x / lam_rest
        logs += np.log(np.abs(t)).tolist()
        sign *= (-1) ** int(np.count_nonzero(t < 0))
        t = 1 - x / others
        logs += (-np.log(np.abs(t))).tolist()
        sign *= (-1) ** int(np.count_nonzero(t < 0))
        val = sign * math.exp(math.fsum(logs))
        if S.tail.kind != "none":
            n_lam = len(lam)
            tl = _reference_log_tail(S.tail, complex(x), S.N, n_lam)
            val *= cmath.exp(tl).real
        out[j] = val
    S._cache["rho"] = out
    return out


@dataclass(frozen=True)
class SpectralStep:
    """The main spectral function as sorted (mu_j, rho_j) jumps, tau(0) = 0."""

    nodes: np.ndarray
    jumps: np.ndarray

    def __call__(self, lam: float, side: str = "mid") -> float:
        """tau(lam + 0) for side='right', tau(lam - 0) for 'left', their mean for 'mid'."""
        if lam < 0:
            return 0.0
        right = math.fsum(self.jumps[self.nodes <= lam])
        if side == "right":
            return right
        at = self.jumps[self.nodes == lam]
        left = right - math.fsum(at)
        return left if side == "left" else 0.5 * (left + right)


def spectral_step(S: TwoSpectra) -> SpectralStep:
    return SpectralStep(S.mu.copy(), residues(S).copy())


def spectral_function(S: TwoSpectra, lam: float, side: str = "mid") -> float:
    """Main spectral function built from the two spectra.

    The default uses the normalization tau = (tau(+0) + tau(-0)) / 2 at the
    nodes; ``side='right'`` gives tau(lam + 0).  Values beyond the last stored
    node miss the unstored jumps and emit a :class:`TruncationWarning`.
    """
    if lam < 0:
        raise DomainError("spectral function is evaluated for lam >= 0")
    if lam > S.mu[-1] and S.tail.kind != "none":
        warnings.warn(f"lam={lam} beyond the stored prefix (mu_N={S.mu[-1]:.6g})",
                      TruncationWarning, stacklevel=2)
    return spectral_step(S)(lam, side)


def stieltjes_inversion(S: TwoSpectra, lam: float, eps_grid=None) -> float:
    """tau(lam) from (1/pi) lim_{eps->0} int_0^lam Im T(t + i eps) dt.

    The integral is computed for each eps in ``eps_grid`` and extrapolated
    polynomially to eps = 0.  Independent of :func:`residues`: it only uses
    the product representation of T off the real axis.  By default the grid
    is four halvings starting at a quarter of the distance from ``lam`` to the
    nearest node (capped at 0.2).
    """
    from .extrapolation import neville

    if not lam > 0:
        raise DomainError("lam must be positive")
    gap = float(np.min(np.abs(S.mu - lam)))
    if eps_grid is None:
        e0 = min(0.2, gap / 4)
        eps_grid = [e0 / 2**k for k in range(4)]
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise DomainError("eps_grid must be decreasing positives")
    if gap < 2 * eps[0]:
        node = S.mu[np.argmin(np.abs(S.mu - lam))]
        raise DomainError(f"lam={lam} lies within the smoothing width of node mu={node:.17g}")
    pts = [float(p) for p in S.mu if 0 < p < lam]
    vals = []
    for e in eps:
        def f(t):
            return (S.L * cmath.exp(_log_product(S, complex(t, e)))).imag

        total, err = 0.0, 0.0
        cuts = [0.0] + pts + [lam]
        for a, b in zip(cuts, cuts[1:]):
            v, ev = quad(f, a, b, limit=400, epsabs=1e-11, epsrel=1e-10)
            total += v
            err += ev
            if ev > 1e-6 * max(1.0, abs(v)):
                raise DomainError(f"quadrature failed to converge next to node mu={b:.17g}")
        vals.append(total / math.pi)
    return neville(eps, vals)


# -- Barcilon product -------------------------------------------------------------------

class BarcilonResult(NamedTuple):
    estimate: float
    bound: float
    raw: float            # prefix product only, no tail
    table: list           # (N, tail-corrected partial) along the prefix


def barcilon_product(S: TwoSpectra, window: int | None = None) -> BarcilonResult:
    """p(0) = (1/(L^2 mu_1)) prod lam_n^2 / (mu_n mu_{n+1}) with a closed-form tail.

    The prefix product stops at the last n with mu_{n+1} stored; the
    reference tail from there on is the Wallis-type constant divided by the
    reference prefix.  The estimate averages the tail-corrected partial
    products over a trailing window, which cancels oscillating deviations of
    the spectra from the reference class.  The bound is the larger of the
    analytic perturbation bound (finite only for beta below the class limit)
    and the spread of the window.
    """
    kind = S.tail.kind
    if kind == "none":
        raise UnboundedTailError("Barcilon product needs a quadratic or quartic tail model")
    n_terms = min(len(S.lam), S.N - 1)
    if n_terms < 1:
        raise InputError("need at least two values of mu", "mu")
    n = np.arange(1, n_terms + 1)
    terms = 2 * np.log(S.lam[:n_terms]) - np.log(S.mu[:n_terms]) - np.log(S.mu[1:n_terms + 1])
    ref = (_POWER[kind]) * (2 * np.log(n) - np.log(n - 0.5) - np.log(n + 0.5))
    head = np.cumsum(terms)
    ref_head = np.cumsum(ref)
    log_w = math.log(WALLIS[kind])
    pre = -2 * math.log(S.L) - math.log(S.mu[0])
    partial = np.exp(pre + head + log_w - ref_head)
    raw = math.exp(pre + math.fsum(terms))
    # exact final partial with compensated sums
    final = math.exp(pre + math.fsum(terms) + log_w - math.fsum(ref))
    partial[-1] = final
    w = window or max(3, n_terms // 10)
    w = min(w, n_terms)
    tail_window = partial[-w:]
    estimate = float(np.mean(tail_window))
    spread = float(np.ptp(tail_window)) / 2
    C, beta = _envelope_of(S)
    p = _POWER[kind]
    if C == 0:
        analytic = 0.0
    elif beta >= p - 1:
        analytic = math.inf
    else:
        def terms_fn(k):
            mu0, lam0 = S.tail.reference(k)
            mu1, _ = S.tail.reference(k + 1)
            return C * k**beta * (2 / lam0 + 1 / mu0) + C * (k + 1) ** beta / mu1

        analytic = estimate * math.expm1(_tail_sum(terms_fn, n_terms, p - beta))
    rounding = estimate * 8 * n_terms * _EPS
    bound = max(spread, analytic if analytic < math.inf else spread) + rounding
    if analytic == math.inf:
        bound = max(bound, spread)
    table = [(int(k), float(v)) for k, v in zip(n, partial)]
    return BarcilonResult(estimate, bound, raw, table)


# -- log-compliance diagnostics ---------------------------------------------------------

@dataclass(frozen=True)
class LogComplianceCheck:
    points: tuple[float, ...]
    im_u: tuple[float, ...]
    expected: tuple[float, ...]
    max_deviation: float
    sum_mismatch: float
    u_at_minus_one: float
    passed: bool


def log_compliance_check(S: TwoSpectra, points, eps: float = 1e-4, tol: float = 1e-2) -> LogComplianceCheck:
    """Check Im U(lam + i eps) against pi on (mu_j, lam_j) and 0 on (lam_j, mu_{j+1}).

    U = log(T/L) with the principal branch.  Also compares U with the sum of
    the integral terms log((lam_j - z)/(mu_j - z)) - log(lam_j/mu_j) at z = i,
    and reports U(-1), which must be negative.
    """
    pts = np.asarray(points, dtype=float)
    im, expect = [], []
    for x in pts:
        j = np.searchsorted(S.mu, x)          # number of mu_k < x
        if (j < S.N and x == S.mu[j]) or np.any(S.lam == x):
            raise DomainError(f"point {x} coincides with an eigenvalue")
        inside = j >= 1 and j - 1 < len(S.lam) and x < S.lam[j - 1]
        expect.append(math.pi if inside else 0.0)
        q = cmath.exp(_log_product(S, complex(x, eps)))
        im.append(cmath.phase(q))
    dev = float(np.max(np.abs(np.array(im) - np.array(expect)))) if len(pts) else 0.0
    z = 1j
    principal = cmath.log(cmath.exp(_log_product(S, z)))
    m = len(S.lam)
    terms = (np.log(S.lam - z) - np.log(S.mu[:m] - z) - np.log(S.lam / S.mu[:m]))
    direct = complex(np.sum(terms))
    if m < S.N:
        direct += complex(np.sum(-np.log1p(-z / S.mu[m:])))
    if S.tail.kind != "none":
        direct += _reference_log_tail(S.tail, z, S.N, m)
    mismatch = abs(principal - direct)
    u_m1 = float(_log_product(S, -1.0).real)
    passed = dev <= tol and u_m1 < 0 and mismatch <= 1e-8
    return LogComplianceCheck(tuple(pts), tuple(im), tuple(expect), dev, mismatch, u_m1, passed)
