"""Numerical toolkit for Krein strings: forward spectra of a mass distribution
and the quantities recoverable from the length and two spectra."""
from .asymptotics import (b_alpha, check_alpha_conditions, classify_density,
                          kasahara_from_compliance, kasahara_from_tau, krein_effective_length)
from .errors import (DomainError, InputError, KreinError, NumericalFailure, PoleProximityError,
                     SearchBoundError, TruncationWarning, UnboundedTailError)
from .extrapolation import AsymptoticReport
from .forward import (FundamentalPair, SpectrumResult, compliance_forward, density_at_origin_limit,
                      eigenvalue_count, eigenvalues_s0, eigenvalues_s1, propagate)
from .measure import (CantorComponent, DensitySegment, MassDistribution, cantor_chain, homogeneous,
                      single_atom, two_segment)
from .twospectra import (SpectralStep, TailModel, TwoSpectra, barcilon_product, compliance_product,
                         fit_tail, length_identity, log_compliance_check, reference_spectra,
                         residue_jump, residues, spectral_function, stieltjes_inversion, validate)

__version__ = "0.1.0"
