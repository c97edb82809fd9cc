"""Acceptance criteria, one test each.  Every test prints a single
``criterion N: PASS|FAIL ...`` line (visible in ``pytest -v`` output and when
this file is run directly with ``python3 tests/test_acceptance.py``)."""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.special import polygamma

sys.path.insert(0, str(Path(__file__).parent))
from conftest import forward_two_spectra, reference_lam, reference_mu  # noqa: E402
from kreinstring import (DensitySegment, MassDistribution, b_alpha, barcilon_product,  # noqa: E402
                         cantor_chain, classify_density, compliance_forward, compliance_product,
                         density_at_origin_limit, eigenvalues_s0, eigenvalues_s1, homogeneous,
                         kasahara_from_compliance, kasahara_from_tau, krein_effective_length,
                         length_identity, log_compliance_check, propagate, reference_spectra,
                         residues, single_atom, spectral_function, stieltjes_inversion, two_segment,
                         validate)
from kreinstring.forward import ODE_TOL  # noqa: E402

_CACHE = {}


def spectra(name):
    if name not in _CACHE:
        builders = {
            "homogeneous": lambda: forward_two_spectra(homogeneous()),
            "density4": lambda: forward_two_spectra(homogeneous(density=4.0)),
            "two_segment": lambda: forward_two_spectra(two_segment()),
            "linear": lambda: forward_two_spectra(LINEAR, n=40),
            "single_atom": lambda: forward_two_spectra(single_atom(), n=5, kind="none"),
        }
        _CACHE[name] = builders[name]()
    return _CACHE[name]


LINEAR = MassDistribution(1.0, (DensitySegment(0.0, 1.0, (1.0, 1.0)),))
MASSES = {"homogeneous": homogeneous(), "density4": homogeneous(density=4.0),
          "two_segment": two_segment(), "linear": LINEAR, "single_atom": single_atom()}


def report(number, ok, detail, request=None):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    if request is not None:
        capman = request.config.pluginmanager.getplugin("capturemanager")
        with capman.global_and_fixture_disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


# -- 1 -----------------------------------------------------------------------------------

def criterion_1():
    mu = eigenvalues_s1(homogeneous(), 20).values
    lam = eigenvalues_s0(homogeneous(), 20).values
    err = max(np.max(np.abs(mu / reference_mu(20) - 1)), np.max(np.abs(lam / reference_lam(20) - 1)))
    return err <= 1e-8, f"homogeneous spectra n<=20: max rel err {err:.2e} (tol 1e-8)"


# -- 2 -----------------------------------------------------------------------------------

def criterion_2():
    res = barcilon_product(reference_spectra("quadratic", 1.0, 200))
    e_tail, e_raw = abs(res.estimate - 1), abs(res.raw - 1)
    ok = e_tail <= 1e-6 and e_raw <= 1e-2
    return ok, (f"quadratic reference p0 with tail err {e_tail:.2e} (tol 1e-6); "
                f"raw 200-term err {e_raw:.2e} (tol 1e-2)")


# -- 3 -----------------------------------------------------------------------------------

def criterion_3():
    res = barcilon_product(reference_spectra("quartic", 1.0, 200))
    err = abs(res.estimate - 1)
    return err <= 1e-6, f"quartic reference p0 err {err:.2e} (tol 1e-6)"


# -- 4 -----------------------------------------------------------------------------------

def criterion_4():
    dens = density_at_origin_limit(two_segment())
    bar = barcilon_product(spectra("two_segment"))
    d1, d2, d3 = abs(dens.estimate - bar.estimate), abs(dens.estimate - 1), abs(bar.estimate - 1)
    ok = max(d1, d2, d3) <= 1e-2 and dens.converged
    return ok, (f"two-segment p0: compliance limit {dens.estimate:.8f}, two-spectra product "
                f"{bar.estimate:.8f}; max deviation {max(d1, d2, d3):.2e} (tol 1e-2)")


# -- 5 -----------------------------------------------------------------------------------

def criterion_5():
    worst_ratio, exact_zero = 0.0, True
    for name, M in MASSES.items():
        S = spectra(name)
        for z in -np.geomspace(1, 100, 20):
            val, bound = compliance_product(S, z)
            diff = abs(val - compliance_forward(M, z))
            worst_ratio = max(worst_ratio, diff / bound if bound > 0 else (0 if diff == 0 else math.inf))
        exact_zero &= compliance_product(S, 0.0).value == S.L
    ok = worst_ratio <= 1.0 and exact_zero
    return ok, (f"{len(MASSES)} strings x 20 z in [-100,-1]: max |diff|/bound {worst_ratio:.3f} "
                f"(<= 1); T(0) == L exactly: {exact_zero}")


# -- 6 -----------------------------------------------------------------------------------

def criterion_6():
    S = spectra("homogeneous")
    rho = residues(S)
    e_rho = float(np.max(np.abs(rho[:50] - 2)))
    partial = np.cumsum(rho / S.mu)
    rate_err = 0.0
    for J in (10, 20, 50, 100, 150):
        predicted = 2 * polygamma(1, J + 0.5) / math.pi**2
        rate_err = max(rate_err, abs((S.L - partial[J - 1]) / predicted - 1))
    ell = length_identity(spectra("single_atom"))["ell_inf"]
    e_ell = abs(ell - (2.0 - 1.0))
    ok = e_rho <= 1e-6 and rate_err <= 1e-3 and e_ell <= 1e-12
    return ok, (f"rho_j=2 for j<=50: max err {e_rho:.2e} (tol 1e-6); residue-sum tail vs "
                f"2*sum 1/(pi^2 (j-1/2)^2): max rel dev {rate_err:.2e}; single atom ell_inf "
                f"{ell:.15f} (L-a=1, err {e_ell:.1e})")


# -- 7 -----------------------------------------------------------------------------------

def criterion_7():
    e_b = abs(b_alpha(1.0) - 2 / math.pi)
    kc = kasahara_from_compliance(lambda z: compliance_forward(homogeneous(), z), 1.0)
    e_kc = abs(kc.estimate - 1)
    worst = 0.0
    for name in ("homogeneous", "two_segment", "density4"):
        kt = kasahara_from_tau(spectra(name), 1.0)
        kf = kasahara_from_compliance(lambda z, M=MASSES[name]: compliance_forward(M, z), 1.0)
        worst = max(worst, abs(kt.estimate / kf.estimate - 1))
    ok = e_b <= 1e-12 and e_kc <= 1e-4 and worst <= 2e-2
    return ok, (f"|B(1)-2/pi| {e_b:.1e} (tol 1e-12); compliance route homogeneous err "
                f"{e_kc:.1e} (tol 1e-4); tau vs compliance on forward spectra max rel "
                f"{worst:.2e} (tol 2e-2)")


# -- 8 -----------------------------------------------------------------------------------

def criterion_8():
    rep = krein_effective_length(spectra("two_segment").mu, two_segment())
    err = abs(rep.estimate / (3 / (2 * math.pi)) - 1)
    return err <= 1e-2, f"two-segment effective length {rep.estimate:.6f} vs 3/(2pi): rel err {err:.2e} (tol 1e-2)"


# -- 9 -----------------------------------------------------------------------------------

def criterion_9():
    cantor = eigenvalues_s1(cantor_chain(8), 64).values
    cases = [("quartic", reference_mu(200, power=4), "density-zero-ae"),
             ("homogeneous", spectra("homogeneous").mu, "positive-density-possible"),
             ("cantor depth 8", cantor, "density-zero-ae")]
    rng = np.random.default_rng(20240601)
    outcomes = []
    ok = True
    for label, mu, expect in cases:
        got = classify_density(mu)[0]
        stable = all(classify_density(mu * (1 + 0.01 * rng.uniform(-1, 1, len(mu))))[0] == expect
                     for _ in range(10))
        ok &= got == expect and stable
        outcomes.append(f"{label}->{got}{'' if stable else ' (unstable)'}")
    return ok, "; ".join(outcomes) + "; 10 noisy replicas each at 1%"


# -- 10 ----------------------------------------------------------------------------------

def criterion_10():
    failures = []
    # Wronskian, scaled by the size of the products that cancel
    strings = list(MASSES.values()) + [cantor_chain(4)]
    for M in strings:
        for lam in (-1e4, -10.0, 0.5, 42.0, 900.0, 3e4, 5 + 40j):
            pair = propagate(M, lam)
            phi, dphi, psi, dpsi = pair.values()
            scale = max(1.0, abs(phi * dpsi) + abs(dphi * psi))
            if abs(pair.wronskian - 1) > 10 * ODE_TOL * scale:
                failures.append(f"wronskian {lam}")
    # interlacing of every computed spectrum
    for name in MASSES:
        if not validate(spectra(name)).first_violation is None:
            failures.append(f"interlacing {name}")
    # R- and S-function inequalities, sign pattern
    sets = [reference_spectra("quadratic", 1.0, 200), reference_spectra("quartic", 1.0, 200),
            spectra("two_segment"), spectra("single_atom")]
    for S in sets:
        for re in (-50.0, 0.0, 10.0, 300.0):
            for im in (0.05, 1.0, 30.0):
                if compliance_product(S, complex(re, im)).value.imag <= 0:
                    failures.append("R-function")
        if any(compliance_product(S, -z).value < 0 for z in np.geomspace(1e-3, 1e4, 20)):
            failures.append("S-function")
        for j in range(min(S.N - 1, 10)):
            if compliance_product(S, 0.5 * (S.mu[j] + S.lam[j])).value >= 0:
                failures.append("sign on (mu_j, lam_j)")
            if compliance_product(S, 0.5 * (S.lam[j] + S.mu[j + 1])).value <= 0:
                failures.append("sign on (lam_j, mu_j+1)")
        pts = [0.5 * (S.mu[j] + S.lam[j]) for j in range(min(S.N, 5))]
        pts += [0.5 * (S.lam[j] + S.mu[j + 1]) for j in range(min(S.N - 1, 5))]
        chk = log_compliance_check(S, pts, eps=1e-4, tol=1e-2)
        if not chk.passed:
            failures.append(f"log-compliance dev {chk.max_deviation:.2e}")
    # spectral function against Stieltjes inversion off the nodes
    worst = 0.0
    for S in (sets[0], sets[2]):
        for k in (1, 2, 4, 7, 12):
            lam = 0.5 * (S.mu[k - 1] + S.mu[k])
            worst = max(worst, abs(stieltjes_inversion(S, lam) / spectral_function(S, lam) - 1))
    if worst > 1e-2:
        failures.append(f"stieltjes {worst:.2e}")
    ok = not failures
    return ok, (f"wronskian/interlacing/R,S-function/sign/log-compliance checks; tau vs "
                f"Stieltjes max rel {worst:.1e} (tol 1e-2); failures: {failures or 'none'}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("number", range(1, 11))
def test_acceptance_criterion(number, request):
    ok, detail = CRITERIA[number - 1]()
    report(number, ok, detail, request)
    assert ok, detail


if __name__ == "__main__":
    t0 = time.time()
    results = []
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        results.append(report(i, ok, detail))
    print(f"{sum(results)}/{len(results)} criteria passed in {time.time() - t0:.1f} s")
    sys.exit(0 if all(results) else 1)
