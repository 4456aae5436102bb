"""Semiclassical time representations for slowly varying coefficient profiles.

Around a mean quantum number ``n_bar`` the levels are expanded to second order,
``E(n_bar + n) ~ E(n_bar) + n E' + n^2 E''/2``, so that up to the global phase
``exp(i E(n_bar) t / hbar)``

    theta(t) ~ sum_n f(n) exp(i (n E' + n^2 E''/2) t / hbar),

with revival time ``tau_r = 4 pi hbar / E''``. For Gaussian profiles the sum is
re-expressed by Poisson summation as a sum of displaced Gaussians.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import RevivalUndefined

AMPLITUDE_TAIL = 1e-12
POISSON_TAIL = 1e-14
CURVATURE_EPS = 1e-9


class SpectralExpansion(NamedTuple):
    E1: float
    E2: float
    revival_time: float


def powerlaw_energy(k: float, scale: float = 1.0) -> Callable[[float], float]:
    """``E(n) = scale * n^(2k/(k+2))``, the level law of a ``|x|^k`` potential."""
    p = 2.0 * k / (k + 2.0)
    return lambda n: scale * np.asarray(n, dtype=float) ** p


def _energy_function(energy, k=None, scale=1.0):
    if callable(energy):
        return energy
    if energy == "powerlaw":
        if k is None:
            raise ValueError("powerlaw needs k")
        return powerlaw_energy(k, scale)
    raise ValueError(f"unknown energy law {energy!r}")


def expand_spectrum(energy, n_bar: float, hbar: float = 1.0, k: float | None = None,
                    scale: float = 1.0) -> SpectralExpansion:
    """``E'(n_bar)``, ``E''(n_bar)`` and ``tau_r`` from central differences.

    Differences with steps 1 and 2 are combined by Richardson extrapolation,
    which is exact for polynomials up to degree five. ``energy`` is a callable
    ``E(n)`` or ``"powerlaw"`` together with ``k`` (and ``scale``).
    """
    e = _energy_function(energy, k, scale)
    n = float(n_bar)
    ev = {h: float(e(n + h)) for h in (-2, -1, 0, 1, 2)}
    d1 = {h: (ev[h] - ev[-h]) / (2 * h) for h in (1, 2)}
    d2 = {h: (ev[h] - 2 * ev[0] + ev[-h]) / h ** 2 for h in (1, 2)}
    e1 = (4 * d1[1] - d1[2]) / 3
    e2 = (4 * d2[1] - d2[2]) / 3
    if abs(e2) <= CURVATURE_EPS * max(1.0, abs(e1)):
        raise RevivalUndefined(f"E'' = {e2:.3g} vanishes at n_bar = {n_bar}; no revival time")
    return SpectralExpansion(e1, e2, 4 * math.pi * hbar / e2)


@dataclass(frozen=True)
class SemiclassicalProfile:
    """Coefficient profile ``f(n - n_bar)`` with the local expansion of the spectrum."""

    n_bar: float
    E1: float
    E2: float
    kind: str = "gaussian"
    sigma: float | None = None
    M: int | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None
    hbar: float = 1.0

    def __post_init__(self):
        if self.kind == "gaussian":
            if not (self.sigma and self.sigma > 0):
                raise ValueError("gaussian profile needs sigma > 0")
            if self.sigma > self.n_bar / 10:
                warnings.warn(f"sigma = {self.sigma} is not small compared with n_bar = {self.n_bar}",
                              stacklevel=2)
        elif self.kind == "equal_weight":
            if self.M is None or self.M < 0:
                raise ValueError("equal_weight profile needs M >= 0")
            if self.M > self.n_bar / 10:
                warnings.warn(f"M = {self.M} is not small compared with n_bar = {self.n_bar}", stacklevel=2)
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom profile needs func")
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    @classmethod
    def gaussian(cls, sigma: float, energy, n_bar: float, hbar: float = 1.0, **law) -> "SemiclassicalProfile":
        ex = expand_spectrum(energy, n_bar, hbar, **law)
        return cls(n_bar, ex.E1, ex.E2, "gaussian", sigma=sigma, hbar=hbar)

    @classmethod
    def equal_weight(cls, M: int, energy, n_bar: float, hbar: float = 1.0, **law) -> "SemiclassicalProfile":
        ex = expand_spectrum(energy, n_bar, hbar, **law)
        return cls(n_bar, ex.E1, ex.E2, "equal_weight", M=int(M), hbar=hbar)

    @property
    def revival_time(self) -> float:
        if self.E2 == 0:
            raise RevivalUndefined("E'' = 0")
        return 4 * math.pi * self.hbar / self.E2

    def weights(self, n) -> np.ndarray:
        """``f(n)`` at offsets ``n`` from ``n_bar``."""
        n = np.asarray(n, dtype=float)
        if self.kind == "gaussian":
            s = self.sigma
            return (2 * math.pi * s * s) ** -0.25 * np.exp(-n * n / (4 * s * s))
        if self.kind == "equal_weight":
            return np.where(np.abs(n) <= self.M, (2 * self.M + 1) ** -0.5, 0.0)
        return np.asarray(self.func(n), dtype=float)

    def support(self, tail: float = AMPLITUDE_TAIL) -> np.ndarray:
        """Offsets outside which ``f(n)/f(0)`` is below ``tail``."""
        if self.kind == "gaussian":
            half = math.ceil(2 * self.sigma * math.sqrt(-math.log(tail)))
        elif self.kind == "equal_weight":
            half = self.M
        else:
            raise ValueError("give n_range explicitly for custom profiles")
        return np.arange(-half, half + 1)


def _quadratic_sum(weights: np.ndarray, n: np.ndarray, e1: float, e2: float, hbar: float, t) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    phase = np.multiply.outer(t_arr.ravel(), (n * e1 + 0.5 * n * n * e2) / hbar)
    out = np.exp(1j * phase) @ weights.astype(complex)
    return out.reshape(t_arr.shape)


def semiclassical_theta(p: SemiclassicalProfile, t, n_range: Sequence[int] | None = None):
    """Direct sum ``sum_n f(n) exp(i (n E' + n^2 E''/2) t / hbar)``; vectorised over ``t``."""
    n = p.support() if n_range is None else np.asarray(n_range)
    out = _quadratic_sum(p.weights(n), n, p.E1, p.E2, p.hbar, t)
    return complex(out) if out.ndim == 0 else out


def autocorrelation_semiclassical(p: SemiclassicalProfile, tau, n_range: Sequence[int] | None = None):
    """``A(tau) ~ sum_n f(n)^2 exp(i (n E' + n^2 E''/2) tau / hbar)``."""
    n = p.support() if n_range is None else np.asarray(n_range)
    out = _quadratic_sum(p.weights(n) ** 2, n, p.E1, p.E2, p.hbar, tau)
    return complex(out) if out.ndim == 0 else out


def gaussian_theta(sigma: float, E1: float, E2: float, t, hbar: float = 1.0, tail: float = POISSON_TAIL):
    """Poisson-summed Gaussian profile: a sum of displaced Gaussians in ``k``.

    ``theta(t) = (2 pi sigma^2)^(-1/4) sum_k (2 pi a)^(-1/2) exp(-(k - E' t / (2 pi hbar))^2 / (2 a))``
    with ``a(t) = [1/(2 sigma^2) - i E'' t / hbar] / (4 pi^2)`` and the principal
    square root. Terms are kept while their modulus is above ``tail`` times the
    largest one.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    t_arr = np.asarray(t, dtype=float)
    out = np.empty(t_arr.size, dtype=complex)
    norm = (2 * math.pi * sigma * sigma) ** -0.25
    for i, tv in enumerate(t_arr.ravel()):
        a = (1 / (2 * sigma * sigma) - 1j * E2 * tv / hbar) / (4 * math.pi ** 2)
        centre = E1 * tv / (2 * math.pi * hbar)
        decay = (1 / (2 * a)).real
        half = math.ceil(math.sqrt(-math.log(tail) / decay)) + 1
        k = np.arange(math.floor(centre) - half, math.ceil(centre) + half + 1)
        terms = np.exp(-((k - centre) ** 2) / (2 * a))
        out[i] = norm * np.sum(terms) / np.sqrt(2 * math.pi * a)
    out = out.reshape(t_arr.shape)
    return complex(out) if out.ndim == 0 else out


def exact_theta(p: SemiclassicalProfile, energy, t, n_range: Sequence[int] | None = None, **law):
    """``sum_n f(n) exp(i (E(n_bar + n) - E(n_bar)) t / hbar)`` with the true levels."""
    e = _energy_function(energy, **law)
    n = p.support() if n_range is None else np.asarray(n_range)
    levels = n + p.n_bar
    if np.any(levels < 0):
        raise ValueError("profile support reaches negative quantum numbers")
    de = (e(levels) - e(p.n_bar)) / p.hbar
    t_arr = np.asarray(t, dtype=float)
    out = np.exp(1j * np.multiply.outer(t_arr.ravel(), de)) @ p.weights(n).astype(complex)
    out = out.reshape(t_arr.shape)
    return complex(out) if out.ndim == 0 else out


def relative_error(approx, reference) -> float:
    """``max |approx - reference| / max |reference|`` over a grid."""
    approx = np.asarray(approx)
    reference = np.asarray(reference)
    return float(np.max(np.abs(approx - reference)) / np.max(np.abs(reference)))
