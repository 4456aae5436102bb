"""Canonical time observables for quantum systems with discrete energy spectra.

Spectra with exact frequency bookkeeping, almost-periodic densities and the
Besicovitch mean, canonical time densities, purity and entropy measures of
time resolution, covariant time POMs, and semiclassical approximations.
"""

from .apfun import APDensity, APFunction, besicovitch_mean, empirical_mean_estimate, reconstruct_density
from .canonical import StateVector, canonical_density, coherent_phase_state, random_state, time_representation
from .errors import APClockError
from .observables import (
    TimePOM,
    canonical_t0,
    channel_apply,
    galapon_diagnostic,
    kraus_decompose,
    normalisation_operator,
    pom_density,
    validate_t0,
)
from .resolution import EntropyEstimate, ResolutionReport, entropy, purity, resolution_report, verify_eur
from .scenarios import ScenarioResult, run_scenario, solve_omega
from .semiclassical import SemiclassicalProfile, expand_spectrum, gaussian_theta, semiclassical_theta
from .spectrum import FrequencyModule, Spectrum, generate, make_spectrum

__version__ = "0.1.0"

__all__ = [
    "APClockError",
    "APDensity",
    "APFunction",
    "EntropyEstimate",
    "FrequencyModule",
    "ResolutionReport",
    "ScenarioResult",
    "SemiclassicalProfile",
    "Spectrum",
    "StateVector",
    "TimePOM",
    "besicovitch_mean",
    "canonical_density",
    "canonical_t0",
    "channel_apply",
    "coherent_phase_state",
    "empirical_mean_estimate",
    "entropy",
    "expand_spectrum",
    "galapon_diagnostic",
    "gaussian_theta",
    "generate",
    "kraus_decompose",
    "make_spectrum",
    "normalisation_operator",
    "pom_density",
    "purity",
    "random_state",
    "reconstruct_density",
    "resolution_report",
    "run_scenario",
    "semiclassical_theta",
    "solve_omega",
    "time_representation",
    "validate_t0",
    "verify_eur",
]
