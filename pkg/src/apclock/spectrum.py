"""Discrete energy spectra and the exact arithmetic of their level differences.

Every level carries an integer *key*: its energy written as an integer
combination of a small basis of rationally independent frequencies, divided by
a common denominator. Two frequencies are equal iff their keys are equal, so
resonances between level differences are decided without floating point
comparisons. ``hbar`` defaults to 1, so energies and angular frequencies
coincide unless a file says otherwise.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Sequence

import numpy as np

from .errors import CommensurateFrequencies, DuplicateLevel, EmptySpectrum
from .lattice import integer_basis, lcm_all

DEFAULT_EPS_FREQ = 1e-9
MAX_COEFF = 64
MAX_SEARCH_RANK = 3

Key = tuple[int, ...]


@dataclass(frozen=True)
class FrequencyModule:
    """Frequencies ``sum(key * basis) / (denominator * hbar)``.

    In exact mode the basis elements are declared rationally independent by
    whoever built the module; in float mode independence is only established
    up to a bounded rational search (see :func:`make_spectrum`).
    """

    basis: tuple[float, ...]
    denominator: int = 1
    hbar: float = 1.0
    mode: str = "exact"
    eps_freq: float = DEFAULT_EPS_FREQ

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if any(b == 0 for b in self.basis):
            raise ValueError("basis elements must be nonzero")
        if self.denominator < 1:
            raise ValueError("denominator must be a positive integer")

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def zero(self) -> Key:
        return (0,) * self.rank

    def value(self, key: Sequence[int]) -> float:
        return float(np.dot(np.asarray(key, dtype=float), self.basis)) / (self.denominator * self.hbar)

    def values(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=float).reshape(-1, self.rank)
        return keys @ np.asarray(self.basis, dtype=float) / (self.denominator * self.hbar)

    def to_dict(self) -> dict:
        return {
            "basis": list(self.basis),
            "denominator": self.denominator,
            "hbar": self.hbar,
            "mode": self.mode,
            "eps_freq": self.eps_freq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyModule":
        return cls(
            basis=tuple(float(b) for b in d["basis"]),
            denominator=int(d.get("denominator", 1)),
            hbar=float(d.get("hbar", 1.0)),
            mode=d.get("mode", "exact"),
            eps_freq=float(d.get("eps_freq", DEFAULT_EPS_FREQ)),
        )


@dataclass(frozen=True)
class EnergyLevel:
    energy: float
    degeneracy: int = 1

    def __post_init__(self):
        if int(self.degeneracy) != self.degeneracy or self.degeneracy < 1:
            raise ValueError(f"degeneracy must be a positive integer, got {self.degeneracy}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ordered discrete spectrum with exact level keys.

    Basis states are flattened level-major: ``(j, d)`` for ``d < degeneracy_j``.
    """

    levels: tuple[EnergyLevel, ...]
    keys: tuple[Key, ...]
    module: FrequencyModule
    label: str = ""

    def __post_init__(self):
        if not self.levels:
            raise EmptySpectrum("spectrum has no levels")
        if len(self.keys) != len(self.levels):
            raise ValueError("one key per level required")
        e = self.energies
        if np.any(np.diff(e) <= 0):
            raise ValueError("energies must be strictly increasing")

    @property
    def hbar(self) -> float:
        return self.module.hbar

    @cached_property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels], dtype=float)

    @cached_property
    def degeneracies(self) -> np.ndarray:
        return np.array([lv.degeneracy for lv in self.levels], dtype=int)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def dim(self) -> int:
        return int(self.degeneracies.sum())

    @property
    def is_degenerate(self) -> bool:
        return bool(np.any(self.degeneracies > 1))

    @cached_property
    def key_array(self) -> np.ndarray:
        return np.array(self.keys, dtype=np.int64).reshape(self.n_levels, self.module.rank)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies ``E_j / hbar`` recomputed from the exact keys."""
        return self.module.values(self.key_array)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.degeneracies)])

    @cached_property
    def level_of(self) -> np.ndarray:
        """Level index for every flattened basis state."""
        return np.repeat(np.arange(self.n_levels), self.degeneracies)

    @cached_property
    def deg_index(self) -> np.ndarray:
        return np.concatenate([np.arange(d) for d in self.degeneracies])

    @cached_property
    def basis_frequencies(self) -> np.ndarray:
        """``E/hbar`` for every flattened basis state."""
        return self.frequencies[self.level_of]

    def index(self, level: int, d: int = 0) -> int:
        if not 0 <= d < self.degeneracies[level]:
            raise IndexError(f"level {level} has degeneracy {self.degeneracies[level]}")
        return int(self.offsets[level] + d)

    def difference_key(self, j: int, k: int) -> Key:
        return tuple(a - b for a, b in zip(self.keys[j], self.keys[k]))


@dataclass(frozen=True)
class ResonanceReport:
    classes: tuple[tuple[tuple[int, int], ...], ...]
    has_shared_resonances: bool
    common_period: float | None = None
    heuristic: bool = False  # float-mode module: equality decided by eps_freq


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (Rational, int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    raise TypeError(f"cannot read {x!r} as an exact rational")


def _represent(x: float, basis: list[float], eps: float) -> tuple[Fraction, ...] | None:
    """Rational coefficients of ``x`` over ``basis`` within tolerance, or None."""
    tol = eps * max(abs(x), 1.0)
    r = len(basis)
    if r == 0:
        return None
    if r == 1:
        q = Fraction(x / basis[0]).limit_denominator(MAX_COEFF)
        if abs(x - float(q) * basis[0]) <= tol:
            return (q,)
        return None
    if r > MAX_SEARCH_RANK:
        return None
    b = np.asarray(basis)
    rng = np.arange(-MAX_COEFF, MAX_COEFF + 1)
    grid = np.array(list(itertools.product(rng, repeat=r - 1)), dtype=float)
    partial = grid @ b[:-1]
    for q in range(1, MAX_COEFF + 1):
        rest = q * x - partial
        last = np.round(rest / b[-1])
        err = np.abs(rest - last * b[-1]) / q
        hits = np.flatnonzero(err <= tol)
        if hits.size:
            i = hits[np.argmin(np.abs(grid[hits]).sum(axis=1))]
            ints = [int(v) for v in grid[i]] + [int(last[i])]
            return tuple(Fraction(n, q) for n in ints)
    return None


def float_module(values: Sequence[float], eps_freq: float = DEFAULT_EPS_FREQ,
                 hbar: float = 1.0) -> tuple[FrequencyModule, list[Key]]:
    """Greedy float-mode module for a list of frequencies (zero maps to the zero key)."""
    basis_list: list[float] = []
    rep: dict[int, tuple[Fraction, ...]] = {}
    order = sorted(range(len(values)), key=lambda i: abs(values[i]))
    for i in order:
        x = float(values[i])
        if abs(x) <= eps_freq:
            rep[i] = ()
            continue
        c = _represent(x, basis_list, eps_freq)
        if c is None:
            basis_list.append(x)
            c = (Fraction(0),) * (len(basis_list) - 1) + (Fraction(1),)
        rep[i] = c
    if not basis_list:
        basis_list = [1.0]
    rank = len(basis_list)
    coords = [tuple(rep[i]) + (Fraction(0),) * (rank - len(rep[i])) for i in range(len(values))]
    denom = lcm_all(c.denominator for cs in coords for c in cs)
    keys = [tuple(int(c * denom) for c in cs) for cs in coords]
    # basis in energy units: frequency = key . basis / (denom * hbar)
    module = FrequencyModule(basis=tuple(b * hbar for b in basis_list), denominator=denom, hbar=hbar,
                             mode="float", eps_freq=eps_freq)
    return module, keys


def make_spectrum(
    energies: Sequence,
    degeneracies: Sequence[int] | None = None,
    mode: str = "float",
    eps_freq: float = DEFAULT_EPS_FREQ,
    basis: Sequence[float] | None = None,
    label: str = "",
    hbar: float = 1.0,
) -> Spectrum:
    """Build a :class:`Spectrum` and its frequency module.

    In ``exact`` mode each energy is a rational (int, Fraction or ``"p/q"``)
    times the single basis element (default 1), or a sequence of rationals
    giving coordinates over a multi-element ``basis`` whose elements the caller
    declares rationally independent.

    In ``float`` mode the basis is built greedily: offsets from the lowest level
    are scanned in increasing magnitude and each one becomes a new basis element
    unless it is a rational combination of the current basis (denominator and
    leading coefficients bounded by 64, search only up to rank 3) within
    ``eps_freq * max(|x|, 1)``. The ground energy is added as an extra anchor
    element when it is nonzero and not representable.
    """
    energies = list(energies)
    if not energies:
        raise EmptySpectrum("no energies given")
    if degeneracies is None:
        degeneracies = [1] * len(energies)
    degeneracies = [int(d) for d in degeneracies]
    if len(degeneracies) != len(energies):
        raise ValueError("energies and degeneracies must have the same length")
    if hbar <= 0:
        raise ValueError("hbar must be positive")

    if mode == "exact":
        if basis is None:
            basis = (1.0,)
        basis = tuple(float(b) for b in basis)
        coords = []
        for e in energies:
            if isinstance(e, (list, tuple)):
                c = tuple(_as_fraction(v) for v in e)
            else:
                c = (_as_fraction(e),)
            if len(c) != len(basis):
                raise ValueError("energy coordinates do not match the basis rank")
            coords.append(c)
        values = [sum(float(ci) * bi for ci, bi in zip(c, basis)) for c in coords]
        order = sorted(range(len(values)), key=lambda i: values[i])
        for a, b in zip(order, order[1:]):
            if coords[a] == coords[b]:
                raise DuplicateLevel(f"energy {values[a]} appears twice")
            if values[a] == values[b]:
                raise DuplicateLevel(f"distinct keys with equal value {values[a]}: basis is not independent")
        coords = [coords[i] for i in order]
        values = [values[i] for i in order]
        degeneracies = [degeneracies[i] for i in order]
        eps = eps_freq
    elif mode == "float":
        if eps_freq <= 0:
            raise ValueError("eps_freq must be positive in float mode")
        values = sorted(float(e) for e in energies)
        order = sorted(range(len(energies)), key=lambda i: float(energies[i]))
        degeneracies = [degeneracies[i] for i in order]
        for a, b in zip(values, values[1:]):
            if abs(b - a) <= eps_freq * max(abs(a), abs(b), 1.0):
                raise DuplicateLevel(f"energies {a} and {b} coincide within eps_freq")
        basis_list: list[float] = []
        rep: dict[int, tuple[Fraction, ...]] = {}
        e0 = values[0]
        offsets = sorted(range(1, len(values)), key=lambda i: abs(values[i] - e0))
        for i in offsets:
            x = values[i] - e0
            c = _represent(x, basis_list, eps_freq)
            if c is None:
                basis_list.append(x)
                c = (Fraction(0),) * (len(basis_list) - 1) + (Fraction(1),)
            rep[i] = c
        if abs(e0) <= eps_freq:
            c0 = ()
        else:
            c0 = _represent(e0, basis_list, eps_freq)
            if c0 is None:
                basis_list.append(e0)
                c0 = (Fraction(0),) * (len(basis_list) - 1) + (Fraction(1),)
        rank = len(basis_list)

        def pad(c):
            return tuple(c) + (Fraction(0),) * (rank - len(c))

        c0 = pad(c0)
        coords = [c0] + [tuple(a + b for a, b in zip(c0, pad(rep[i]))) for i in range(1, len(values))]
        if rank == 0:
            # single level at zero energy
            basis_list = [1.0]
            coords = [(Fraction(0),)]
        basis = tuple(basis_list)
        eps = eps_freq
    else:
        raise ValueError(f"unknown mode {mode!r}")

    denom = lcm_all(c.denominator for cs in coords for c in cs)
    keys = tuple(tuple(int(c * denom) for c in cs) for cs in coords)
    module = FrequencyModule(basis=basis, denominator=denom, hbar=hbar, mode=mode, eps_freq=eps)
    levels = tuple(EnergyLevel(v, d) for v, d in zip(values, degeneracies))
    return Spectrum(levels=levels, keys=keys, module=module, label=label)


def harmonic(omega=1.0, n_max: int = 1, hbar: float = 1.0) -> Spectrum:
    """Levels ``E_n = n hbar omega`` for ``n = 0..n_max``."""
    _check_positive(omega=omega)
    _check_nmax(n_max)
    return make_spectrum(list(range(n_max + 1)), mode="exact", basis=(float(omega) * hbar,),
                         label=f"harmonic(omega={omega}, n_max={n_max})", hbar=hbar)


def isotropic2(omega=1.0, n_max: int = 1, hbar: float = 1.0) -> Spectrum:
    """Two-mode isotropic oscillator: ``E_n = n hbar omega`` with degeneracy ``n + 1``.

    Degeneracy index ``d`` labels ``|d> (x) |n - d>``.
    """
    _check_positive(omega=omega)
    _check_nmax(n_max)
    return make_spectrum(list(range(n_max + 1)), [n + 1 for n in range(n_max + 1)], mode="exact",
                         basis=(float(omega) * hbar,), label=f"isotropic2(omega={omega}, n_max={n_max})",
                         hbar=hbar)


def anisotropic2(omega1, omega2, n_max: int = 1, n_max2: int | None = None, hbar: float = 1.0) -> Spectrum:
    """Two-mode oscillator ``E_mn = m hbar omega1 + n hbar omega2``, ``m <= n_max``, ``n <= n_max2``.

    The caller declares ``omega1/omega2`` irrational. Exact rationals, or floats
    whose ratio is exactly a fraction with denominator at most 64, are rejected.
    """
    _check_positive(omega1=omega1, omega2=omega2)
    _check_nmax(n_max)
    n_max2 = n_max if n_max2 is None else n_max2
    _check_nmax(n_max2)
    if isinstance(omega1, Rational) and isinstance(omega2, Rational):
        raise CommensurateFrequencies(f"omega1/omega2 = {Fraction(omega1) / Fraction(omega2)} is rational")
    ratio = float(omega1) / float(omega2)
    approx = Fraction(ratio).limit_denominator(MAX_COEFF)
    if float(approx) == ratio:
        raise CommensurateFrequencies(f"omega1/omega2 = {approx} is rational")
    coords = [(m, n) for m in range(n_max + 1) for n in range(n_max2 + 1)]
    return make_spectrum(coords, mode="exact", basis=(float(omega1) * hbar, float(omega2) * hbar),
                         label=f"anisotropic2(omega1={omega1}, omega2={omega2}, n_max={n_max}, n_max2={n_max2})",
                         hbar=hbar)


def hydrogen(R=1.0, n_max: int = 1, hbar: float = 1.0) -> Spectrum:
    """Bound hydrogen-like levels ``E_n = -R / n^2`` for ``n = 1..n_max`` (exact rationals)."""
    _check_positive(R=R)
    _check_nmax(n_max)
    return make_spectrum([Fraction(-1, n * n) for n in range(1, n_max + 1)], mode="exact",
                         basis=(float(R),), label=f"hydrogen(R={R}, n_max={n_max})", hbar=hbar)


def powerlaw(k: float, n_max: int, scale: float = 1.0, eps_freq: float = DEFAULT_EPS_FREQ,
             hbar: float = 1.0) -> Spectrum:
    """Levels ``E_n = scale * n^(2k/(k+2))``, ``n = 0..n_max``, for a ``|x|^k`` potential."""
    _check_positive(k=k, scale=scale)
    _check_nmax(n_max)
    p = 2.0 * k / (k + 2.0)
    return make_spectrum([scale * n ** p for n in range(n_max + 1)], mode="float", eps_freq=eps_freq,
                         label=f"powerlaw(k={k}, n_max={n_max})", hbar=hbar)


FAMILIES = {
    "harmonic": harmonic,
    "isotropic2": isotropic2,
    "anisotropic2": anisotropic2,
    "hydrogen": hydrogen,
    "powerlaw": powerlaw,
}


def generate(family: str, **params) -> Spectrum:
    try:
        fn = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    return fn(**params)


def _check_positive(**kw):
    for name, v in kw.items():
        if not float(v) > 0:
            raise ValueError(f"{name} must be positive, got {v}")


def _check_nmax(n_max):
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max}")


def difference_lattice(s: Spectrum) -> np.ndarray:
    """Echelon Z-basis of the lattice spanned by all level-difference keys."""
    ka = s.key_array
    return integer_basis((ka[1:] - ka[0]).tolist(), dim=s.module.rank)


def common_period(s: Spectrum) -> float | None:
    """Smallest ``tau`` with ``(E_j - E_0) tau / (2 pi hbar)`` integer for all j, or None."""
    lat = difference_lattice(s)
    if lat.shape[0] != 1:
        return None
    w = abs(s.module.value(lat[0]))
    return 2 * math.pi / w


def resonance_report(s: Spectrum) -> ResonanceReport:
    groups: dict[Key, list[tuple[int, int]]] = defaultdict(list)
    n = s.n_levels
    for j in range(n):
        for k in range(n):
            if j != k:
                groups[s.difference_key(j, k)].append((j, k))
    classes = tuple(tuple(v) for v in groups.values())
    shared = any(len(c) >= 2 for c in classes)
    return ResonanceReport(classes=classes, has_shared_resonances=shared, common_period=common_period(s),
                           heuristic=s.module.mode == "float")


def spectrum_to_dict(s: Spectrum) -> dict:
    mod = s.module
    levels = []
    for lv, key in zip(s.levels, s.keys):
        if mod.mode == "exact":
            coords = [str(Fraction(k, mod.denominator)) for k in key]
            energy = coords[0] if len(coords) == 1 else coords
        else:
            energy = lv.energy
        levels.append({"energy": energy, "degeneracy": lv.degeneracy})
    return {"hbar": mod.hbar, "mode": mod.mode, "levels": levels, "basis": list(mod.basis),
            "eps_freq": mod.eps_freq, "label": s.label}


def spectrum_from_dict(d: dict) -> Spectrum:
    mode = d.get("mode", "float")
    levels = d["levels"]
    energies = [lv["energy"] for lv in levels]
    degs = [int(lv.get("degeneracy", 1)) for lv in levels]
    basis = d.get("basis")
    if mode == "float":
        energies = [float(e) for e in energies]
        basis = None
    return make_spectrum(energies, degs, mode=mode, eps_freq=float(d.get("eps_freq", DEFAULT_EPS_FREQ)),
                         basis=basis, label=d.get("label", ""), hbar=float(d.get("hbar", 1.0)))
