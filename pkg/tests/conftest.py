import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from kreinstring import (TwoSpectra, eigenvalues_s0, eigenvalues_s1, fit_tail, homogeneous,
                         single_atom, two_segment)

N_PAIRS = 200


def forward_two_spectra(M, n=N_PAIRS, kind="quadratic"):
    mu = eigenvalues_s1(M, n)
    lam = eigenvalues_s0(M, n)
    lv = lam.values[: len(mu.values)]
    S = TwoSpectra(M.length, mu.values, lv, precision=1e-12)
    if kind != "none":
        S = S.with_tail(fit_tail(S.mu, S.lam, kind))
    return S


def chain_eigenvalues(chain, n, left="neumann"):
    """Independent oracle: eigenvalues of a Stieltjes chain from its tridiagonal stiffness matrix."""
    x = np.array([a for a, _ in chain.atoms])
    m = np.array([b for _, b in chain.atoms])
    keep = x < chain.length
    x, m = x[keep], m[keep]
    k = 1.0 / np.diff(np.concatenate([[0.0], x, [chain.length]]))
    diag = k[1:].copy()
    diag += k[:-1] if left == "dirichlet" else np.concatenate([[0.0], k[1:-1]])
    s = 1.0 / np.sqrt(m)
    return eigh_tridiagonal(diag * s * s, -k[1:-1] * s[:-1] * s[1:],
                            select="i", select_range=(0, n - 1))[0]


@pytest.fixture(scope="session")
def hom_spectra():
    return forward_two_spectra(homogeneous())


@pytest.fixture(scope="session")
def two_spectra():
    return forward_two_spectra(two_segment())


@pytest.fixture(scope="session")
def dense4_spectra():
    return forward_two_spectra(homogeneous(density=4.0))


@pytest.fixture(scope="session")
def atom_spectra():
    return forward_two_spectra(single_atom(), n=5, kind="none")


def reference_mu(n, b=1.0, power=2):
    return (math.pi * (np.arange(1, n + 1) - 0.5) / b) ** power


def reference_lam(n, b=1.0, power=2):
    return (math.pi * np.arange(1, n + 1) / b) ** power
