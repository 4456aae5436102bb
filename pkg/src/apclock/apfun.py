"""Almost-periodic trigonometric polynomials and the Besicovitch mean.

An :class:`APFunction` is a finite sum ``sum_k a_k exp(i w_k t)`` whose
frequencies are integer keys in a :class:`~apclock.spectrum.FrequencyModule`.
Sums of frequencies are resolved exactly on the keys, so the mean (the
zero-frequency coefficient) is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import signal

from .errors import ModuleMismatch, PositivityCheckFailed, TermBudgetExceeded
from .lattice import integer_basis, lattice_coordinates
from .spectrum import DEFAULT_EPS_FREQ, FrequencyModule, Key, float_module

EPS_COEFF = 1e-15
EPS_POS = 1e-9
TERM_CAP = 10**6
CERT_SAMPLES = 2**16
CERT_FFT_MAX = 2**22
_CHUNK = 2**14


class APFunction:
    """Immutable trigonometric polynomial over a frequency module."""

    __slots__ = ("_terms", "module", "__dict__")

    def __init__(self, terms: Mapping[Sequence[int], complex], module: FrequencyModule, prune: float = EPS_COEFF):
        clean = {}
        for k, v in terms.items():
            v = complex(v)
            if abs(v) > prune:
                key = tuple(int(x) for x in k)
                if len(key) != module.rank:
                    raise ValueError(f"key {key} has wrong rank for module of rank {module.rank}")
                clean[key] = v
        self._terms = MappingProxyType(clean)
        self.module = module

    @classmethod
    def from_arrays(cls, keys: np.ndarray, coeffs: np.ndarray, module: FrequencyModule,
                    prune: float = EPS_COEFF) -> "APFunction":
        """Build from key rows and coefficients, summing duplicate keys."""
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, module.rank)
        coeffs = np.asarray(coeffs, dtype=complex).ravel()
        if keys.shape[0] == 0:
            return cls({}, module)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        re = np.bincount(inv, weights=coeffs.real, minlength=len(uniq))
        im = np.bincount(inv, weights=coeffs.imag, minlength=len(uniq))
        summed = re + 1j * im
        keep = np.abs(summed) > prune
        obj = cls.__new__(cls)
        obj._terms = MappingProxyType({tuple(int(x) for x in k): complex(c)
                                       for k, c in zip(uniq[keep], summed[keep])})
        obj.module = module
        return obj

    @classmethod
    def from_frequencies(cls, terms: Mapping[float, complex], eps_freq: float = DEFAULT_EPS_FREQ) -> "APFunction":
        """Build from real frequencies; the module is constructed greedily (float mode)."""
        freqs = list(terms)
        module, keys = float_module(freqs, eps_freq)
        return cls.from_arrays(np.array(keys).reshape(len(keys), module.rank),
                               np.array([terms[f] for f in freqs], dtype=complex), module)

    @classmethod
    def constant(cls, value: complex, module: FrequencyModule) -> "APFunction":
        return cls({module.zero: value}, module)

    @property
    def terms(self) -> Mapping[Key, complex]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        items = ", ".join(f"{w:.6g}: {c:.6g}" for w, c in zip(self.frequencies, self.coefficients))
        return f"APFunction({{{items}}})"

    @cached_property
    def key_array(self) -> np.ndarray:
        return np.array(list(self._terms), dtype=np.int64).reshape(len(self), self.module.rank)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return np.array(list(self._terms.values()), dtype=complex)

    @cached_property
    def frequencies(self) -> np.ndarray:
        return self.module.values(self.key_array) if len(self) else np.zeros(0)

    def coefficient(self, key: Sequence[int]) -> complex:
        return self._terms.get(tuple(key), 0j)

    def coefficient_at(self, omega: float, tol: float | None = None) -> complex:
        """Coefficient at a real frequency, matched within ``eps_freq`` scaling."""
        tol = self.module.eps_freq if tol is None else tol
        hit = np.abs(self.frequencies - omega) <= tol * max(abs(omega), 1.0)
        return complex(self.coefficients[hit].sum())

    @cached_property
    def is_real(self) -> bool:
        """True iff ``a_{-w} == conj(a_w)`` for every term (realness flag)."""
        for k, v in self._terms.items():
            other = self._terms.get(tuple(-x for x in k))
            if other is None:
                return False
            if abs(other - v.conjugate()) > 1e-14 * max(1.0, abs(v)):
                return False
        return True

    def __call__(self, t):
        return evaluate(self, t)

    def _check(self, other: "APFunction"):
        if self.module != other.module:
            raise ModuleMismatch("functions live over different frequency modules")

    def __add__(self, other):
        if isinstance(other, APFunction):
            return add(self, other)
        return add(self, APFunction.constant(other, self.module))

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other):
        return self + (-other if isinstance(other, APFunction) else -other)

    def __mul__(self, other):
        if isinstance(other, APFunction):
            return multiply(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def conjugate(self) -> "APFunction":
        return conjugate(self)

    def shift(self, tau: float) -> "APFunction":
        """``t -> f(t - tau)``."""
        return APFunction.from_arrays(self.key_array, self.coefficients * np.exp(-1j * self.frequencies * tau),
                                      self.module)

    def mean(self) -> complex:
        return besicovitch_mean(self)

    def allclose(self, other: "APFunction", atol: float = 1e-12) -> bool:
        self._check(other)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol
                   for k in set(self._terms) | set(other._terms))

    def to_dict(self) -> dict:
        return {
            "module": self.module.to_dict(),
            "terms": [{"freq": {"key": list(k), "value": self.module.value(k)}, "re": v.real, "im": v.imag}
                      for k, v in self._terms.items()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "APFunction":
        module = FrequencyModule.from_dict(d["module"])
        terms = {}
        for t in d["terms"]:
            terms[tuple(t["freq"]["key"])] = complex(t["re"], t["im"])
        return cls(terms, module)


def evaluate(f: APFunction, t):
    """``sum_j a_j exp(i w_j t)`` at scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    flat = t_arr.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    if len(f):
        w, a = f.frequencies, f.coefficients
        for s in range(0, flat.size, _CHUNK):
            out[s:s + _CHUNK] = np.exp(1j * np.outer(flat[s:s + _CHUNK], w)) @ a
    out = out.reshape(t_arr.shape)
    return complex(out) if out.ndim == 0 else out


def add(f: APFunction, g: APFunction) -> APFunction:
    f._check(g)
    return APFunction.from_arrays(np.vstack([f.key_array, g.key_array]),
                                  np.concatenate([f.coefficients, g.coefficients]), f.module)


def scale(f: APFunction, c: complex) -> APFunction:
    return APFunction({k: c * v for k, v in f.terms.items()}, f.module)


def conjugate(f: APFunction) -> APFunction:
    return APFunction({tuple(-x for x in k): v.conjugate() for k, v in f.terms.items()}, f.module)


def multiply(f: APFunction, g: APFunction, cap: int = TERM_CAP) -> APFunction:
    """Frequency convolution: the coefficient at ``w`` is ``sum_{w1+w2=w} a_w1 b_w2``."""
    f._check(g)
    if not len(f) or not len(g):
        return APFunction({}, f.module)
    rank = f.module.rank
    lo_f, lo_g = f.key_array.min(axis=0), g.key_array.min(axis=0)
    box = (f.key_array.max(axis=0) - lo_f) + (g.key_array.max(axis=0) - lo_g) + 1
    box_size = int(np.prod(box.astype(object)))
    if len(f) * len(g) <= cap:
        keys = (f.key_array[:, None, :] + g.key_array[None, :, :]).reshape(-1, rank)
        coeffs = np.outer(f.coefficients, g.coefficients).ravel()
    elif box_size <= cap:
        # many pairs but few distinct sums: convolve on the dense key box
        dense_f = _dense(f, lo_f)
        dense_g = _dense(g, lo_g)
        grid = signal.convolve(dense_f, dense_g, method="direct" if rank == 1 else "auto")
        idx = np.argwhere(np.abs(grid) > 0)
        keys = idx + lo_f + lo_g
        coeffs = grid[tuple(idx.T)]
    else:
        raise TermBudgetExceeded(f"product needs up to {min(len(f) * len(g), box_size)} terms, cap is {cap}")
    out = APFunction.from_arrays(keys, coeffs, f.module)
    if len(out) > cap:
        raise TermBudgetExceeded(f"product has {len(out)} terms, cap is {cap}")
    return out


def _dense(f: APFunction, lo: np.ndarray) -> np.ndarray:
    rel = f.key_array - lo
    arr = np.zeros(tuple(rel.max(axis=0) + 1), dtype=complex)
    arr[tuple(rel.T)] = f.coefficients
    return arr


def besicovitch_mean(f: APFunction) -> complex:
    """Exact long-time mean of a trigonometric polynomial: its zero-frequency coefficient."""
    return f.coefficient(f.module.zero)


def parseval_norm(f: APFunction) -> float:
    return float(np.sum(np.abs(f.coefficients) ** 2))


def ap_expectation(p: APFunction, f: APFunction | Mapping[float, complex], tol: float | None = None) -> complex:
    """``mu_ap[p f]``.

    ``f`` may be an APFunction over the same module (exact) or a mapping from
    real frequency to coefficient, in which case frequencies are matched by
    value within ``eps_freq``.
    """
    if isinstance(f, APFunction):
        return besicovitch_mean(multiply(p, f))
    return complex(sum(c * p.coefficient_at(-w, tol) for w, c in f.items()))


@dataclass(frozen=True)
class MeanEstimate:
    value: complex
    error: float
    horizons: tuple[float, ...]
    values: tuple[complex, ...]


def gl_integral(func: Callable, a: float, b: float, panel: float, order: int = 16) -> complex:
    """Integral of ``func`` over ``[a, b]`` by composite Gauss-Legendre panels."""
    if b <= a:
        return 0j
    n_panels = max(1, math.ceil((b - a) / panel))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    total = 0j
    step = max(1, _CHUNK * 4 // order)
    for s in range(0, n_panels, step):
        stop = min(s + step, n_panels)
        lo = edges[s:stop]
        hi = edges[s + 1:stop + 1]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = np.asarray(func(nodes)).reshape(len(lo), order)
        total += np.sum((vals @ w) * half)
    return total


def empirical_mean_estimate(f, X: float | Sequence[float] | None = None, samples: Sequence[float] | None = None,
                            panel: float | None = None) -> MeanEstimate:
    """Estimate the Besicovitch mean of ``f`` from a finite horizon or from samples.

    With ``X`` the mean ``(1/X) int_0^X f dt`` is computed by composite
    Gauss-Legendre quadrature on a ladder of horizons (``X/4, X/2, X`` for a
    scalar, or the given ladder). The estimate is the last rung; the error is
    the largest spread between rungs. ``f`` may be an :class:`APFunction` (the
    panel width then follows its highest frequency) or a vectorised callable.

    With ``samples`` (one value of ``f`` per measurement), the estimate is the
    sample average and the ladder runs over prefixes ``N/4, N/2, N``.
    """
    if samples is not None:
        vals = np.asarray(samples, dtype=complex)
        n = vals.size
        if n < 1:
            raise ValueError("need at least one sample")
        rungs = sorted({max(1, n // 4), max(1, n // 2), n})
        means = tuple(complex(vals[:m].mean()) for m in rungs)
        spread = max(abs(a - b) for a in means for b in means)
        return MeanEstimate(means[-1], float(spread), tuple(float(m) for m in rungs), means)

    if X is None:
        raise ValueError("give a horizon X or samples")
    ladder = [X / 4, X / 2, X] if np.isscalar(X) else list(X)
    if any(x <= 0 for x in ladder):
        raise ValueError("horizons must be positive")
    ladder = sorted(ladder)
    if isinstance(f, APFunction):
        func = f.__call__
        wmax = float(np.max(np.abs(f.frequencies))) if len(f) else 0.0
        if panel is None:
            panel = math.pi / wmax if wmax > 0 else ladder[-1]
    else:
        func = f
        if panel is None:
            panel = 1.0
    # integrate incrementally so every rung reuses the previous one
    means = []
    acc = 0j
    prev = 0.0
    for x in ladder:
        acc += gl_integral(func, prev, x, panel)
        prev = x
        means.append(acc / x)
    spread = max(abs(a - b) for a in means for b in means) if len(means) > 1 else 0.0
    return MeanEstimate(complex(means[-1]), float(spread), tuple(ladder), tuple(complex(m) for m in means))


@dataclass(frozen=True)
class PositivityCertificate:
    min_value: float
    n_samples: int
    horizon: float
    passed: bool


class APDensity:
    """Almost-periodic probability density.

    Either given by its coefficients (``function``), or as ``sum_d |theta_d|^2``
    of amplitude functions (``factors``), in which case the coefficients are
    built lazily by convolution. The zero-frequency coefficient is pinned to 1.
    """

    def __init__(self, function: APFunction | None = None, factors: Sequence[APFunction] | None = None,
                 eps_pos: float = EPS_POS, n_samples: int = CERT_SAMPLES):
        if function is None and not factors:
            raise ValueError("need coefficients or amplitude factors")
        self._function = function
        self.factors = tuple(factors) if factors else None
        self.eps_pos = eps_pos
        self.n_samples = n_samples
        if function is not None:
            self.module = function.module
            if abs(besicovitch_mean(function) - 1) > 1e-9:
                raise ValueError(f"density mean is {besicovitch_mean(function)}, expected 1")
            if not function.is_real:
                raise ValueError("density coefficients are not conjugate-symmetric")
        else:
            self.module = self.factors[0].module
            norm = sum(parseval_norm(th) for th in self.factors)
            if abs(norm - 1) > 1e-10:
                raise ValueError(f"amplitude factors have total norm {norm}, expected 1")

    @cached_property
    def function(self) -> APFunction:
        if self._function is not None:
            return self._function
        out = None
        for th in self.factors:
            term = multiply(conjugate(th), th)
            out = term if out is None else add(out, term)
        terms = dict(out.terms)
        terms[self.module.zero] = 1.0
        # exact conjugate symmetry
        for k in list(terms):
            if k != self.module.zero:
                nk = tuple(-x for x in k)
                terms[k] = 0.5 * (terms[k] + terms.get(nk, 0j).conjugate())
        return APFunction(terms, self.module)

    def __call__(self, t):
        """Density values, via amplitude factors when available."""
        if self.factors is None:
            return np.real(evaluate(self.function, t))
        t_arr = np.asarray(t, dtype=float)
        total = np.zeros(t_arr.shape)
        ref = self._reference_frequency
        for th in self.factors:
            if len(th):
                w = th.frequencies - ref
                flat = t_arr.ravel()
                vals = np.empty(flat.shape, dtype=complex)
                for s in range(0, flat.size, _CHUNK):
                    vals[s:s + _CHUNK] = np.exp(1j * np.outer(flat[s:s + _CHUNK], w)) @ th.coefficients
                total += (np.abs(vals) ** 2).reshape(t_arr.shape)
        return float(total) if total.ndim == 0 else total

    @cached_property
    def _reference_frequency(self) -> float:
        for th in self.factors or ():
            if len(th):
                return float(th.frequencies[0])
        return 0.0

    @cached_property
    def lattice(self) -> tuple[np.ndarray, np.ndarray]:
        """Echelon Z-basis of the frequency lattice and the real frequency of each basis row."""
        if self.factors is not None:
            ks = [th.key_array for th in self.factors if len(th)]
            allk = np.vstack(ks)
            diffs = allk - allk[0]
        else:
            diffs = self.function.key_array
        basis = integer_basis(np.unique(diffs, axis=0).tolist(), dim=self.module.rank)
        return basis, self.module.values(basis) if basis.shape[0] else np.zeros(0)

    @property
    def rank(self) -> int:
        return self.lattice[0].shape[0]

    def lattice_terms(self):
        """Amplitude factors (or coefficients) in lattice coordinates.

        Returns ``("factors", [(coords, coeffs), ...])`` or ``("coefficients", (coords, coeffs))``.
        """
        basis, _ = self.lattice
        if self.factors is not None:
            ks = [th.key_array for th in self.factors if len(th)]
            ref = np.vstack(ks)[0]
            out = []
            for th in self.factors:
                if len(th):
                    out.append((lattice_coordinates(basis, th.key_array - ref), th.coefficients))
            return "factors", out
        f = self.function
        return "coefficients", (lattice_coordinates(basis, f.key_array), f.coefficients)

    @cached_property
    def frequency_range(self) -> tuple[float, float]:
        """Smallest and largest nonzero |frequency| appearing in the density."""
        if self.factors is not None:
            w = np.concatenate([th.frequencies for th in self.factors if len(th)])
            d = np.abs(w[:, None] - w[None, :]).ravel()
        else:
            d = np.abs(self.function.frequencies)
        d = d[d > 0]
        if d.size == 0:
            return 0.0, 0.0
        return float(d.min()), float(d.max())

    @cached_property
    def certificate(self) -> PositivityCertificate:
        """Dense grid check of nonnegativity using the coefficient form."""
        wmin, _ = self.frequency_range
        horizon = 2 * math.pi / wmin if wmin > 0 else 1.0
        if self.rank == 1:
            # periodic: a full-period FFT grid at least as fine as the sampled one
            basis, freqs = self.lattice
            f = self.function
            coords = lattice_coordinates(basis, f.key_array)[:, 0]
            mult = max(1, round(wmin / abs(float(freqs[0]))))
            n = 1 << max(0, math.ceil(math.log2(max(self.n_samples * mult, 2 * int(np.abs(coords).max()) + 1))))
        if self.rank == 1 and n <= CERT_FFT_MAX:
            arr = np.zeros(n, dtype=complex)
            np.add.at(arr, coords % n, f.coefficients)
            vals = np.real(np.fft.ifft(arr) * n)
            m = float(vals.min())
            return PositivityCertificate(m, n, 2 * math.pi / abs(float(freqs[0])), m >= -self.eps_pos)
        t = np.linspace(0.0, horizon, self.n_samples, endpoint=False)
        vals = np.real(evaluate(self.function, t))
        m = float(vals.min())
        return PositivityCertificate(m, self.n_samples, horizon, m >= -self.eps_pos)

    def check_positive(self) -> PositivityCertificate:
        cert = self.certificate
        if not cert.passed:
            raise PositivityCheckFailed(f"density dips to {cert.min_value} < -{self.eps_pos}")
        return cert

    def purity(self) -> float:
        return parseval_norm(self.function)


def empirical_coefficients(samples: Sequence[float], frequencies: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Sample means of ``exp(-i w a_n)`` and their standard errors (modulus of complex SE)."""
    a = np.asarray(samples, dtype=float)
    w = np.asarray(frequencies, dtype=float)
    n = a.size
    coeffs = np.empty(w.size, dtype=complex)
    stderr = np.empty(w.size)
    for i, om in enumerate(w):
        z = np.exp(-1j * om * a)
        coeffs[i] = z.mean()
        if n > 1:
            stderr[i] = math.sqrt((z.real.var(ddof=1) + z.imag.var(ddof=1)) / n)
        else:
            stderr[i] = math.inf
    return coeffs, stderr


def reconstruct_density(samples: Sequence[float], frequencies: Sequence[float],
                        eps_freq: float = DEFAULT_EPS_FREQ) -> APDensity:
    """Almost-periodic density ``p(a) ~ sum_j N^-1 sum_n exp(i w_j (a - a_n))`` from outcomes.

    The frequency list must contain 0 and be closed under negation. The
    zero-frequency coefficient is set to 1; a failed positivity check is
    recorded on ``density.certificate`` but is not raised.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 1:
        raise ValueError("need at least one sample")
    freqs = [float(w) for w in frequencies]
    if not any(abs(w) <= eps_freq for w in freqs):
        freqs.append(0.0)
    for w in freqs:
        if not any(abs(w + v) <= eps_freq * max(abs(w), 1.0) for v in freqs):
            raise ValueError(f"frequency list is not closed under negation (missing {-w})")
    freqs = sorted(set(freqs))
    coeffs, _ = empirical_coefficients(samples, freqs)
    module, keys = float_module(freqs, eps_freq)
    terms = {}
    for k, c in zip(keys, coeffs):
        terms[tuple(k)] = c
    terms[module.zero] = 1.0
    return APDensity(function=APFunction(terms, module))
