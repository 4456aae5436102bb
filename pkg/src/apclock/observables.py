"""Covariant time POMs on finite truncations.

A time observable is fixed by a positive seed operator ``T0`` with
``T_t = exp(-iHt/hbar) T0 exp(iHt/hbar)`` and density ``p(t|rho) = tr[rho T_t]``.
Operators are dense complex ``numpy`` arrays in the flattened ``(level, d)``
energy basis of a :class:`~apclock.spectrum.Spectrum`.

Time kets are ``|t> = sum_E exp(-iEt/hbar) |E>``, so the canonical seed (all
ones) gives back ``|theta(t)|^2`` with ``theta(t) = sum_j c_j exp(iE_j t/hbar)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .apfun import APFunction, ap_expectation
from .canonical import StateVector, canonical_density
from .errors import DiagonalViolation, NotPositive
from .spectrum import Spectrum

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
DIAG_TOL = 1e-10
EPS_NULL = 1e-10
KRAUS_CUTOFF = 1e-14


@dataclass(frozen=True, eq=False)
class TimePOM:
    """Validated covariant time observable ``(T0, gamma)`` over ``spectrum``."""

    spectrum: Spectrum
    t0: np.ndarray
    gamma: float = 1.0

    def seed_at(self, t: float) -> np.ndarray:
        """``T_t``; entries ``T0_jk exp(-i(E_j - E_k)t/hbar)``."""
        ph = np.exp(-1j * self.spectrum.basis_frequencies * t)
        return self.t0 * np.outer(ph, ph.conj())


def as_density_matrix(state, dim: int | None = None) -> np.ndarray:
    """Density matrix of a :class:`StateVector`, a state vector or a matrix."""
    if isinstance(state, StateVector):
        return state.density_matrix()
    a = np.asarray(state, dtype=complex)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a state vector or a square density matrix")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"state has dimension {a.shape[0]}, spectrum has {dim}")
    return a


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def _level_blocks(s: Spectrum):
    for j in range(s.n_levels):
        yield j, slice(int(s.offsets[j]), int(s.offsets[j + 1]))


def validate_t0(t0, s: Spectrum, gamma: float = 1.0) -> TimePOM:
    """Check ``T0 >= 0`` and the diagonal condition ``<E,d|T0|E,d'> = delta_dd' / gamma``."""
    t0 = np.array(t0, dtype=complex)
    if t0.shape != (s.dim, s.dim):
        raise ValueError(f"T0 must be {s.dim}x{s.dim}, got {t0.shape}")
    if not is_hermitian(t0):
        raise NotPositive("T0 is not Hermitian")
    lam = np.linalg.eigvalsh(t0)
    if lam[0] < -PSD_TOL:
        raise NotPositive(f"T0 has eigenvalue {lam[0]:.3g}")
    for j, sl in _level_blocks(s):
        block = t0[sl, sl]
        dev = np.abs(block - np.eye(block.shape[0]) / gamma)
        if dev.max() > DIAG_TOL:
            d, d2 = np.unravel_index(int(np.argmax(dev)), dev.shape)
            raise DiagonalViolation(
                f"<E_{j},{d}|T0|E_{j},{d2}> = {block[d, d2]:.6g}, expected {float(d == d2) / gamma:g}")
    t0.setflags(write=False)
    return TimePOM(s, t0, gamma)


def canonical_t0(s: Spectrum, gamma: float = 1.0) -> TimePOM:
    """Canonical seed: ``1/gamma`` between ``(E,d)`` and ``(E',d)`` for every shared label ``d``."""
    d = s.deg_index
    t0 = (d[:, None] == d[None, :]).astype(complex) / gamma
    t0.setflags(write=False)
    return TimePOM(s, t0, gamma)


def pom_density(pom: TimePOM, state, t):
    """``p(t) = tr[rho T_t]`` (``<psi|T_t|psi>`` for pure states); vectorised over ``t``."""
    rho = as_density_matrix(state, pom.spectrum.dim)
    t_arr = np.asarray(t, dtype=float)
    ph = np.exp(-1j * np.multiply.outer(t_arr.ravel(), pom.spectrum.basis_frequencies))
    kernel = pom.t0 * rho.T
    vals = np.einsum("tj,jk,tk->t", ph, kernel, ph.conj())
    out = vals.real.reshape(t_arr.shape)
    return float(out) if out.ndim == 0 else out


def pom_function(pom: TimePOM, state) -> APFunction:
    """``tr[rho T_t]`` as an almost-periodic function with exact frequency keys."""
    s = pom.spectrum
    rho = as_density_matrix(state, s.dim)
    lv = s.level_of
    ka = s.key_array
    weights = (pom.t0 * rho.T).ravel()
    j, k = np.divmod(np.arange(s.dim * s.dim), s.dim)
    # e^{-i(E_j - E_k)t}: the key of the term is key_k - key_j
    keys = ka[lv[k]] - ka[lv[j]]
    return APFunction.from_arrays(keys, weights, s.module)


def kraus_decompose(pom: TimePOM) -> list[np.ndarray]:
    """Diagonal Kraus operators ``A_m = gamma^(1/2) sum_E |E><E| <m|E>``.

    The vectors ``|m> = sqrt(lambda_m) |v_m>`` come from the eigendecomposition
    of ``T0``; eigenvalues below ``1e-14`` times the largest are dropped.
    """
    lam, vecs = np.linalg.eigh(np.asarray(pom.t0))
    if lam[0] < -PSD_TOL:
        raise NotPositive(f"T0 has eigenvalue {lam[0]:.3g}")
    keep = lam > KRAUS_CUTOFF * max(lam[-1], 1.0)
    ms = vecs[:, keep] * np.sqrt(lam[keep])
    g = math.sqrt(pom.gamma)
    return [np.diag(g * m.conj()) for m in ms.T[::-1]]


def kraus_completeness(kraus: Sequence[np.ndarray]) -> float:
    """``max |sum A_m^dag A_m - I|``."""
    total = sum(a.conj().T @ a for a in kraus)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def channel_apply(kraus: Sequence[np.ndarray], rho) -> np.ndarray:
    """``phi(rho) = sum_m A_m rho A_m^dag``."""
    rho = as_density_matrix(rho)
    return sum(a @ rho @ a.conj().T for a in kraus)


def random_t0(s: Spectrum, rng: np.random.Generator, rank: int | None = None) -> TimePOM:
    """Random valid seed: a Gram matrix of unit vectors, orthonormal within each level.

    ``rank`` (default ``dim``) is the dimension of the vectors and bounds the
    rank of ``T0``; it must be at least the largest degeneracy.
    """
    r = s.dim if rank is None else int(rank)
    if r < int(s.degeneracies.max()):
        raise ValueError("rank must be at least the largest degeneracy")
    vecs = np.empty((s.dim, r), dtype=complex)
    for j, sl in _level_blocks(s):
        g = rng.normal(size=(r, s.degeneracies[j])) + 1j * rng.normal(size=(r, s.degeneracies[j]))
        q, _ = np.linalg.qr(g)
        vecs[sl] = q.T
    t0 = vecs.conj() @ vecs.T
    t0 = 0.5 * (t0 + t0.conj().T)
    return validate_t0(t0, s)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-induced random mixed state."""
    r = dim if rank is None else int(rank)
    w = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    rho = w @ w.conj().T
    return rho / np.trace(rho).real


# -- finite-horizon construction -------------------------------------------------------

def horizon_average(w, X: float):
    """``(1/X) int_0^X exp(iwt) dt = exp(iwX/2) sinc(wX/2)``, equal to 1 at ``w = 0``."""
    w = np.asarray(w, dtype=float)
    return np.exp(0.5j * w * X) * np.sinc(w * X / (2 * math.pi))


@dataclass(frozen=True, eq=False)
class TruncatedTimePOM:
    """``N(X)``, ``P0`` and ``M_t(X) = X^-1 N^-1/2 |t><t| N^-1/2`` on a nondegenerate truncation."""

    spectrum: Spectrum
    X: float
    N: np.ndarray
    P0: np.ndarray
    inv_sqrt: np.ndarray = field(repr=False)
    eps_null: float = EPS_NULL

    def ket(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.spectrum.frequencies * t)

    def element(self, t: float) -> np.ndarray:
        v = self.inv_sqrt @ self.ket(t)
        return np.outer(v, v.conj()) / self.X

    def density(self, state, t):
        """``tr[rho M_t(X)]`` on ``[0, X]``; vectorised over ``t``."""
        rho = as_density_matrix(state, self.spectrum.dim)
        b = self.inv_sqrt @ rho @ self.inv_sqrt
        t_arr = np.asarray(t, dtype=float)
        kets = np.exp(1j * np.multiply.outer(t_arr.ravel(), self.spectrum.frequencies))
        vals = np.einsum("tj,jk,tk->t", kets, b, kets.conj()).real / self.X
        return vals.reshape(t_arr.shape)

    def expectation(self, state, f: APFunction | Mapping[float, complex]) -> complex:
        """``<f>_X = int_0^X f(t) tr[rho M_t] dt`` in closed form."""
        rho = as_density_matrix(state, self.spectrum.dim)
        b = self.inv_sqrt @ rho @ self.inv_sqrt
        e = self.spectrum.frequencies
        de = e[:, None] - e[None, :]
        total = 0j
        for w, c in _frequency_terms(f):
            total += c * np.sum(b * horizon_average(w + de, self.X))
        return complex(total)

    def completeness_residual(self, order: int = 16, panel: float | None = None) -> float:
        """``max |int_0^X M_t dt + P0 - I|`` with composite Gauss-Legendre quadrature."""
        e = self.spectrum.frequencies
        span = float(e.max() - e.min())
        if panel is None:
            panel = math.pi / span if span > 0 else self.X
        n_panels = max(1, math.ceil(self.X / panel))
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, self.X, n_panels + 1)
        half = 0.5 * np.diff(edges)
        nodes = ((edges[:-1] + half)[:, None] + half[:, None] * x).ravel()
        weights = (half[:, None] * w).ravel()
        kets = np.exp(-1j * np.multiply.outer(nodes, e))
        outer = np.einsum("t,tj,tk->jk", weights, kets, kets.conj()) / self.X
        integral = self.inv_sqrt @ outer @ self.inv_sqrt
        return float(np.max(np.abs(integral + self.P0 - np.eye(len(e)))))


def _frequency_terms(f):
    if isinstance(f, APFunction):
        return list(zip(f.frequencies, f.coefficients))
    return list(f.items())


def normalisation_operator(s: Spectrum, X: float, eps_null: float = EPS_NULL) -> TruncatedTimePOM:
    """``N(X)_jk = (1/X) int_0^X exp(i(E_k - E_j)t/hbar) dt`` with its null projector."""
    if X <= 0:
        raise ValueError("X must be positive")
    if s.is_degenerate:
        raise ValueError("the finite-horizon construction needs a nondegenerate spectrum")
    e = s.frequencies
    n_op = horizon_average(e[None, :] - e[:, None], X)
    n_op = 0.5 * (n_op + n_op.conj().T)
    lam, vecs = np.linalg.eigh(n_op)
    null = lam < eps_null
    p0 = vecs[:, null] @ vecs[:, null].conj().T
    inv = np.where(null, 0.0, 1 / np.sqrt(np.where(null, 1.0, lam)))
    inv_sqrt = (vecs * inv) @ vecs.conj().T
    return TruncatedTimePOM(s, float(X), n_op, p0, inv_sqrt, eps_null)


def asymptotic_expectation(psi: StateVector, f: APFunction | Mapping[float, complex]) -> complex:
    """``mu_ap[p f]`` for the canonical density of ``psi``."""
    p = canonical_density(psi, check=False).function
    if isinstance(f, APFunction):
        f = dict(zip(f.frequencies.tolist(), f.coefficients.tolist()))
    return ap_expectation(p, f)


# -- Galapon operator ------------------------------------------------------------------

def galapon_operator(s: Spectrum) -> np.ndarray:
    """``G = i hbar sum_{j != k} (E_j - E_k)^-1 |E_j><E_k|``."""
    if s.is_degenerate:
        raise ValueError("G is defined for nondegenerate spectra")
    e = s.energies
    de = e[:, None] - e[None, :]
    off = ~np.eye(len(e), dtype=bool)
    g = np.zeros_like(de, dtype=complex)
    g[off] = 1j * s.hbar / de[off]
    return g


@dataclass(frozen=True, eq=False)
class GalaponReport:
    G: np.ndarray
    hermiticity_error: float
    taus: np.ndarray
    expectations: np.ndarray
    covariance_deviation: float
    commutator_diagonal: np.ndarray
    eigenstate_action_error: float
    commutator_sign: int
    subspace_residual: float

    def to_dict(self) -> dict:
        return {
            "hermiticity_error": self.hermiticity_error,
            "covariance_deviation": self.covariance_deviation,
            "commutator_diagonal_max": float(np.max(np.abs(self.commutator_diagonal))),
            "eigenstate_action_error": self.eigenstate_action_error,
            "commutator_sign": self.commutator_sign,
            "subspace_residual": self.subspace_residual,
        }


def galapon_diagnostic(s: Spectrum, psi: StateVector, taus, rng: np.random.Generator | None = None,
                       n_subspace: int = 20) -> GalaponReport:
    """Test ``G`` for covariance and for ``[H, G] = +-i hbar`` where it is claimed.

    Reports ``max_tau |<G>_tau - <G>_0 - tau|`` with ``psi_tau = exp(-iH tau/hbar) psi``
    (matrix exponential), the diagonal of ``[H, G]``, the deviation of
    ``[H, G]|E_k>`` from ``i hbar sum_{j != k} |E_j>``, and the residual of
    ``[H, G] phi = sign i hbar phi`` on random states with ``sum c_j = 0``;
    the sign is whichever of the two fits.
    """
    if s.dim < 2:
        raise ValueError("need at least two levels")
    rng = np.random.default_rng(42) if rng is None else rng
    g = galapon_operator(s)
    h = np.diag(s.energies).astype(complex)
    hbar = s.hbar
    taus = np.asarray(taus, dtype=float)
    amps = psi.amplitudes
    vals = []
    for tau in taus:
        v = expm(-1j * h * tau / hbar) @ amps
        vals.append(np.vdot(v, g @ v).real)
    vals = np.array(vals)
    g0 = np.vdot(amps, g @ amps).real
    dev = float(np.max(np.abs(vals - g0 - taus))) if taus.size else 0.0

    comm = h @ g - g @ h
    n = s.dim
    expected_cols = 1j * hbar * (np.ones((n, n)) - np.eye(n))
    eig_err = float(np.max(np.abs(comm - expected_cols)))

    resid = {1: 0.0, -1: 0.0}
    for _ in range(n_subspace):
        c = rng.normal(size=n) + 1j * rng.normal(size=n)
        c -= c.mean()
        c /= np.linalg.norm(c)
        for sign in resid:
            resid[sign] = max(resid[sign], float(np.linalg.norm(comm @ c - sign * 1j * hbar * c)))
    sign = min(resid, key=resid.get)
    return GalaponReport(
        G=g,
        hermiticity_error=float(np.max(np.abs(g - g.conj().T))),
        taus=taus,
        expectations=vals,
        covariance_deviation=dev,
        commutator_diagonal=np.diag(comm).copy(),
        eigenstate_action_error=eig_err,
        commutator_sign=sign,
        subspace_residual=resid[sign],
    )
