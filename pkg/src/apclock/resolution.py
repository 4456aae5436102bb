"""Purity, entropy and the energy-time uncertainty relations for canonical time densities.

Entropies are in nats. ``S_ap`` has no closed form in general; three numerical
backends are provided:

``exact-periodic``
    rank-1 frequency lattice: the density is periodic, integrate one period with
    the trapezoid rule (spectrally accurate for smooth periodic integrands),
    doubling the grid until two successive values agree.
``torus``
    lattice rank r <= 3 over rationally independent basis frequencies: by Weyl
    equidistribution the time average equals the average of ``-P log P`` over
    the r-torus, computed on a fixed tensor grid.
``time-average``
    any rank: ``(1/X) int_0^X -p log p dt`` on a doubling ladder of horizons.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .apfun import APDensity, gl_integral
from .canonical import StateVector, canonical_density
from .errors import BackendInapplicable, NonConvergent, SharedResonances
from .spectrum import Spectrum

EPS_CLAMP = 1e-300
TORUS_ORDERS = {1: 2048, 2: 512, 3: 128}
PERIODIC_MIN_ORDER = 2048
PERIODIC_MAX_ORDER = 2**22
PERIODIC_TOL = 1e-10
LADDER_LEVELS = 12
LADDER_BASE_PERIODS = 64
LADDER_TOL = 1e-4
LADDER_MIN_LEVEL = 8
EUR_SLOP = 1e-9
BACKENDS = ("auto", "time-average", "torus", "exact-periodic")


class EntropyEstimate(NamedTuple):
    value: float
    error: float
    backend: str


@dataclass(frozen=True)
class ResolutionReport:
    purity: float
    entropy: float
    entropy_error: float
    entropy_backend: str
    information: float
    energy_entropy: float
    eur_slack: float
    exact_ur_residual: float | None = None

    @property
    def entropy_bits(self) -> float:
        return self.entropy / math.log(2)

    @property
    def information_bits(self) -> float:
        return self.information / math.log(2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["entropy_bits"] = self.entropy_bits
        d["information_bits"] = self.information_bits
        d["energy_entropy_bits"] = self.energy_entropy / math.log(2)
        return d


class EURCheck(NamedTuple):
    slack: float
    error: float
    holds: bool


def purity(p: APDensity) -> float:
    """``P_ap = mu_ap[p^2] = sum_w |a_w|^2`` (Parseval)."""
    return p.purity()


def shared_resonances(s: Spectrum) -> bool:
    """True if two distinct ordered level pairs have the same energy difference."""
    ka = s.key_array
    n = s.n_levels
    if n < 3:
        return False
    j, k = np.nonzero(~np.eye(n, dtype=bool))
    diffs = ka[j] - ka[k]
    return np.unique(diffs, axis=0).shape[0] < diffs.shape[0]


def _require_typical(psi: StateVector):
    s = psi.spectrum
    if s.is_degenerate:
        raise ValueError("the no-resonance purity formula is for nondegenerate spectra")
    if shared_resonances(s):
        raise SharedResonances("spectrum has shared resonances; P = 2 - sum |c|^4 does not apply")


def typical_purity_formula(psi: StateVector) -> float:
    """``2 - sum_j |c_j|^4``, valid when no two level pairs share a difference."""
    _require_typical(psi)
    return float(2 - np.sum(psi.level_probabilities ** 2))


def exact_ur_residual(psi: StateVector, p: APDensity | None = None) -> float:
    """``|P_ap + sum_j p_j^2 - 2|`` for a spectrum without shared resonances."""
    _require_typical(psi)
    p = canonical_density(psi, check=False) if p is None else p
    return abs(purity(p) + float(np.sum(psi.level_probabilities ** 2)) - 2)


def energy_entropy(psi: StateVector) -> float:
    """``S(H) = -sum_j p_j log p_j`` with degenerate amplitudes summed per level."""
    p = psi.level_probabilities
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _neg_plogp(p: np.ndarray) -> np.ndarray:
    p = np.maximum(p, 0.0)
    safe = np.maximum(p, EPS_CLAMP)
    return np.where(p > EPS_CLAMP, -p * np.log(safe), 0.0)


def _lattice_span(p: APDensity) -> tuple[str, object, np.ndarray]:
    kind, data = p.lattice_terms()
    if kind == "factors":
        allc = np.vstack([c for c, _ in data])
        span = allc.max(axis=0) - allc.min(axis=0)
    else:
        coords = data[0]
        span = 2 * np.abs(coords).max(axis=0) if coords.size else np.zeros(coords.shape[1], dtype=int)
    return kind, data, span


def _grid_values(kind: str, data, orders: Sequence[int]) -> np.ndarray:
    """Density on the uniform torus grid ``phi_i = 2 pi k / N_i`` via inverse FFT."""
    orders = tuple(int(n) for n in orders)
    size = int(np.prod(orders))
    if kind == "factors":
        total = np.zeros(orders)
        for coords, coeffs in data:
            arr = np.zeros(orders, dtype=complex)
            idx = tuple(coords[:, i] % orders[i] for i in range(len(orders)))
            np.add.at(arr, idx, coeffs)
            total += np.abs(np.fft.ifftn(arr) * size) ** 2
        return total
    coords, coeffs = data
    arr = np.zeros(orders, dtype=complex)
    idx = tuple(coords[:, i] % orders[i] for i in range(len(orders)))
    np.add.at(arr, idx, coeffs)
    return np.real(np.fft.ifftn(arr) * size)


def _grid_entropy(kind, data, orders) -> float:
    return float(np.mean(_neg_plogp(_grid_values(kind, data, orders))))


def _pow2_at_least(n: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(n, 1))))


def _periodic_start(span) -> int:
    return max(PERIODIC_MIN_ORDER, _pow2_at_least(4 * (int(span[0]) + 1)))


def _period_fits(p: APDensity) -> bool:
    """Whether one full period can be resolved by the doubling grid below the order cap."""
    return _periodic_start(_lattice_span(p)[2]) <= PERIODIC_MAX_ORDER // 2


def _entropy_periodic(p: APDensity) -> EntropyEstimate:
    kind, data, span = _lattice_span(p)
    n = _periodic_start(span)
    if n > PERIODIC_MAX_ORDER // 2:
        raise BackendInapplicable(f"one period needs a grid of {n} points (cap {PERIODIC_MAX_ORDER}); "
                                  "use the time-average backend")
    prev = _grid_entropy(kind, data, (n,))
    while True:
        n *= 2
        cur = _grid_entropy(kind, data, (n,))
        err = abs(cur - prev)
        if err <= PERIODIC_TOL * max(1.0, abs(cur)) or n >= PERIODIC_MAX_ORDER:
            return EntropyEstimate(cur, err, "exact-periodic")
        prev = cur


def _entropy_torus(p: APDensity, orders: Sequence[int] | None = None) -> EntropyEstimate:
    r = p.rank
    kind, data, span = _lattice_span(p)
    if orders is None:
        orders = [max(TORUS_ORDERS[r], _pow2_at_least(4 * (int(s) + 1))) for s in span]
    orders = list(orders)
    if any(o <= s for o, s in zip(orders, span)):
        raise ValueError(f"torus orders {orders} alias a lattice span of {list(span)}")
    val = _grid_entropy(kind, data, orders)
    half = [o // 2 for o in orders]
    if all(h > s for h, s in zip(half, span)):
        err = abs(val - _grid_entropy(kind, data, half))
    else:
        err = math.inf
    return EntropyEstimate(val, err, "torus")


def _entropy_time_average(p: APDensity, tol: float = LADDER_TOL, max_level: int = LADDER_LEVELS) -> EntropyEstimate:
    wmin, wmax = p.frequency_range
    x0 = LADDER_BASE_PERIODS * 2 * math.pi / wmin
    panel = math.pi / wmax

    def integrand(t):
        return _neg_plogp(p(t))

    acc = 0.0
    prev = 0.0
    values = []
    for k in range(max_level + 1):
        x = x0 * 2 ** k
        acc += gl_integral(integrand, prev, x, panel).real
        prev = x
        values.append(acc / x)
        # slow lattice beats can hold the running mean on a false plateau at short horizons
        if k >= LADDER_MIN_LEVEL:
            spread = max(values[-3:]) - min(values[-3:])
            if spread <= tol:
                return EntropyEstimate(values[-1], spread, "time-average")
    spread = max(values[-3:]) - min(values[-3:])
    raise NonConvergent(f"time-average ladder spread {spread:.3g} exceeds {tol:.3g} at X = {prev:.6g}")


def entropy(p: APDensity, backend: str = "auto", tol: float = LADDER_TOL) -> EntropyEstimate:
    """``S_ap = mu_ap[-p log p]`` in nats, with an error estimate and the backend used.

    ``tol`` is the convergence target of the time-average ladder.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    r = p.rank
    if r == 0:
        return EntropyEstimate(0.0, 0.0, "exact-periodic" if backend == "auto" else backend)
    if backend == "auto":
        if r == 1:
            backend = "exact-periodic" if _period_fits(p) else "time-average"
        else:
            backend = "torus" if r <= 3 else "time-average"
    if backend == "exact-periodic":
        if r != 1:
            raise BackendInapplicable(f"exact-periodic needs a rank-1 frequency lattice, got rank {r}")
        return _entropy_periodic(p)
    if backend == "torus":
        if r > 3:
            raise BackendInapplicable(f"torus quadrature supports rank <= 3, got rank {r}")
        return _entropy_torus(p)
    return _entropy_time_average(p, tol)


def factorized_entropy(parts: Sequence[APDensity], backend: str = "auto") -> EntropyEstimate:
    """Entropy of a product of densities over independent frequency sublattices: the sum of parts."""
    ests = [entropy(q, backend) for q in parts]
    return EntropyEstimate(sum(e.value for e in ests), sum(e.error for e in ests), "factorized")


def verify_eur(psi: StateVector, backend: str = "auto", estimate: EntropyEstimate | None = None,
               tol: float = LADDER_TOL) -> EURCheck:
    """``S(H) + S_ap >= 0``; holds if the slack is above ``-(error + 1e-9)``."""
    est = entropy(canonical_density(psi, check=False), backend, tol) if estimate is None else estimate
    slack = energy_entropy(psi) + est.value
    return EURCheck(slack, est.error, slack >= -(est.error + EUR_SLOP))


def resolution_report(psi: StateVector, backend: str = "auto", check: bool = True,
                      tol: float = LADDER_TOL) -> ResolutionReport:
    p = canonical_density(psi, check=check)
    est = entropy(p, backend, tol)
    sh = energy_entropy(psi)
    pur = purity(p)
    residual = None
    if not psi.spectrum.is_degenerate and not shared_resonances(psi.spectrum):
        residual = abs(pur + float(np.sum(psi.level_probabilities ** 2)) - 2)
    return ResolutionReport(
        purity=pur,
        entropy=est.value,
        entropy_error=est.error,
        entropy_backend=est.backend,
        information=-est.value,
        energy_entropy=sh,
        eur_slack=sh + est.value,
        exact_ur_residual=residual,
    )


def entropy_purity_bound(report: ResolutionReport) -> bool:
    """``S_ap >= -log P_ap`` up to the entropy error."""
    return report.entropy >= -math.log(report.purity) - report.entropy_error
