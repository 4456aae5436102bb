"""States over a discrete spectrum and their canonical time statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .apfun import APDensity, APFunction
from .errors import NotNormalized
from .spectrum import Spectrum, anisotropic2, harmonic, isotropic2

NORM_TOL = 1e-12
DELTA_TAIL = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state ``sum c_{j,d} |E_j, d>``; amplitudes are flattened level-major."""

    spectrum: Spectrum
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != self.spectrum.dim:
            raise ValueError(f"expected {self.spectrum.dim} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1) > NORM_TOL:
            raise NotNormalized(f"state norm^2 is {norm}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, spectrum: Spectrum, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        n = np.linalg.norm(amps)
        if n == 0:
            raise NotNormalized("zero vector")
        return cls(spectrum, amps / n)

    @classmethod
    def from_pairs(cls, spectrum: Spectrum, pairs: Mapping[tuple[int, int], complex],
                   normalize: bool = False) -> "StateVector":
        amps = np.zeros(spectrum.dim, dtype=complex)
        for (j, d), c in pairs.items():
            amps[spectrum.index(j, d)] = c
        return cls.normalized(spectrum, amps) if normalize else cls(spectrum, amps)

    def amplitude(self, level: int, d: int = 0) -> complex:
        return complex(self.amplitudes[self.spectrum.index(level, d)])

    @property
    def level_probabilities(self) -> np.ndarray:
        """Energy distribution ``p_j = sum_d |c_{j,d}|^2``."""
        return np.bincount(self.spectrum.level_of, weights=np.abs(self.amplitudes) ** 2,
                           minlength=self.spectrum.n_levels)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class TimeRepresentation:
    """``theta_d(t) = sum_j c_{j,d} exp(i E_j t / hbar)``, one function per degeneracy index."""

    thetas: tuple[APFunction, ...]

    def __call__(self, t) -> np.ndarray:
        return np.array([th(t) for th in self.thetas])


def eigenstate(s: Spectrum, level: int, d: int = 0) -> StateVector:
    amps = np.zeros(s.dim, dtype=complex)
    amps[s.index(level, d)] = 1.0
    return StateVector(s, amps)


def equal_superposition(s: Spectrum) -> StateVector:
    return StateVector.normalized(s, np.ones(s.dim))


def random_state(s: Spectrum, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state (normalised complex Gaussian vector)."""
    return StateVector.normalized(s, rng.normal(size=s.dim) + 1j * rng.normal(size=s.dim))


def relabel(psi: StateVector, perms: Mapping[int, Sequence[int]]) -> StateVector:
    """Permute degeneracy labels: the amplitude at ``(j, d)`` moves to ``(j, perms[j][d])``."""
    s = psi.spectrum
    amps = np.array(psi.amplitudes)
    out = amps.copy()
    for j, perm in perms.items():
        if sorted(perm) != list(range(s.degeneracies[j])):
            raise ValueError(f"not a permutation of the labels of level {j}")
        for d, nd in enumerate(perm):
            out[s.index(j, nd)] = amps[s.index(j, d)]
    return StateVector(s, out)


def coherent_levels(u: float, tail: float = DELTA_TAIL) -> int:
    """Number of levels kept so the discarded probability ``u^(2J)`` is below ``tail``."""
    if not 0 <= u < 1:
        raise ValueError("u must lie in [0, 1)")
    if u == 0:
        return 1
    return max(1, math.ceil(math.log(tail) / (2 * math.log(u))))


def coherent_phase_state(u: float, omega=1.0, tail: float = DELTA_TAIL) -> StateVector:
    """Truncated, renormalised ``(1-u^2)^(1/2) sum_j u^j |E_j>`` on a harmonic spectrum."""
    n = coherent_levels(u, tail)
    s = harmonic(omega, max(n - 1, 1))
    amps = np.zeros(s.dim)
    amps[:n] = u ** np.arange(n)
    return StateVector.normalized(s, amps)


def isotropic_coherent_state(u: float, omega=1.0, tail: float = DELTA_TAIL) -> StateVector:
    """``|u> (x) |u>`` on the isotropic oscillator, labels ``|E_n, d> = |d> (x) |n-d>``."""
    if not 0 <= u < 1:
        raise ValueError("u must lie in [0, 1)")
    n_max = 1
    if u > 0:
        # probability of level n is (n+1)(1-u^2)^2 u^(2n); stop once the tail is below `tail`
        u2 = u * u
        rest = 1.0
        n = 0
        while True:
            rest -= (n + 1) * (1 - u2) ** 2 * u2 ** n
            if rest < tail or n > 10**5:
                break
            n += 1
        n_max = max(n, 1)
    s = isotropic2(omega, n_max)
    amps = np.zeros(s.dim)
    for n in range(n_max + 1):
        for d in range(n + 1):
            amps[s.index(n, d)] = u ** n
    return StateVector.normalized(s, amps)


def product_coherent_state(u: float, v: float, omega1, omega2, tail: float = DELTA_TAIL) -> StateVector:
    """``|u> (x) |v>`` on the anisotropic oscillator (each mode truncated at ``tail``)."""
    nu, nv = coherent_levels(u, tail), coherent_levels(v, tail)
    s = anisotropic2(omega1, omega2, max(nu - 1, 1), max(nv - 1, 1))
    amps = np.zeros(s.dim)
    for j, key in enumerate(s.keys):
        m, n = key
        if m < nu and n < nv:
            amps[j] = u ** m * v ** n
    return StateVector.normalized(s, amps)


def correlated_state(u: float, omega=1.0, tail: float = DELTA_TAIL) -> StateVector:
    """``(1-u^2)^(1/2) sum_m u^m |m> (x) |m>`` restricted to its nondegenerate subspace.

    On the span of ``|m>|m>`` the Hamiltonian has the nondegenerate levels
    ``2 m hbar omega``, so the state is a coherent phase state at frequency ``2 omega``.
    """
    return coherent_phase_state(u, 2 * omega, tail)


def correlated_state_isotropic(u: float, omega=1.0, tail: float = DELTA_TAIL, shared_label: bool = False) -> StateVector:
    """The same correlated state embedded in the full isotropic oscillator.

    With the generator labelling ``|m>|m> = |E_{2m}, d=m>``. With
    ``shared_label`` the labels are permuted so every ``|m>|m>`` carries ``d = 0``.
    """
    n = coherent_levels(u, tail)
    s = isotropic2(omega, max(2 * (n - 1), 1))
    amps = np.zeros(s.dim)
    for m in range(n):
        amps[s.index(2 * m, 0 if shared_label else m)] = u ** m
    return StateVector.normalized(s, amps)


def evolve(psi: StateVector, tau: float) -> StateVector:
    """``c_j -> c_j exp(-i E_j tau / hbar)``."""
    phases = np.exp(-1j * psi.spectrum.basis_frequencies * tau)
    return StateVector(psi.spectrum, psi.amplitudes * phases)


def time_representation(psi: StateVector) -> TimeRepresentation:
    s = psi.spectrum
    thetas = []
    for d in range(int(s.degeneracies.max())):
        terms = {}
        for j in np.flatnonzero(s.degeneracies > d):
            c = psi.amplitudes[s.index(int(j), d)]
            if c != 0:
                terms[s.keys[j]] = c
        thetas.append(APFunction(terms, s.module))
    return TimeRepresentation(tuple(th for th in thetas if len(th)))


def canonical_density(psi: StateVector, check: bool = True) -> APDensity:
    """``p(t) = sum_d |theta_d(t)|^2`` (reduces to ``|theta(t)|^2`` without degeneracy).

    With ``check`` the coefficient form is sampled on a dense grid and
    :class:`~apclock.errors.PositivityCheckFailed` is raised if it dips below
    ``-eps_pos``, which can only happen if the frequency bookkeeping is broken.
    """
    p = APDensity(factors=time_representation(psi).thetas)
    if check:
        p.check_positive()
    return p


def autocorrelation(psi: StateVector) -> APFunction:
    """``A(tau) = <psi_tau|psi_0> = sum_j |c_j|^2 exp(i E_j tau / hbar)``."""
    s = psi.spectrum
    probs = psi.level_probabilities
    return APFunction({k: p for k, p in zip(s.keys, probs) if p > 0}, s.module)


def covariance_check(psi: StateVector, tau: float, grid) -> float:
    """``max_t |p(t | psi_tau) - p(t - tau | psi_0)|`` over ``grid``."""
    t = np.asarray(grid, dtype=float)
    p0 = canonical_density(psi, check=False)
    pt = canonical_density(evolve(psi, tau), check=False)
    return float(np.max(np.abs(pt(t) - p0(t - tau)))) if t.size else 0.0
