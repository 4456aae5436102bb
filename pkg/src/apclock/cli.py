"""Command-line front end.

    apclock spectrum       build a spectrum from a generator family or explicit energies
    apclock state          build a state over a spectrum
    apclock density        canonical time density (CSV trace or JSON coefficients)
    apclock resolution     purity, entropy and uncertainty-relation report
    apclock pom            canonical seed, Kraus operators, finite-horizon POM, Galapon diagnostic
    apclock semiclassical  semiclassical theta(t) and autocorrelation traces
    apclock scenario       run a named scenario; exit code 0 iff every metric passes

Randomness comes from one NumPy ``default_rng`` (PCG64) seeded by ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import formats
from .canonical import (
    StateVector,
    canonical_density,
    coherent_phase_state,
    correlated_state,
    eigenstate,
    equal_superposition,
    isotropic_coherent_state,
    random_state,
)
from .errors import APClockError
from .observables import (
    canonical_t0,
    galapon_diagnostic,
    kraus_completeness,
    kraus_decompose,
    normalisation_operator,
    validate_t0,
)
from .resolution import BACKENDS, LADDER_TOL, resolution_report
from .scenarios import DEFAULT_SEED, SCENARIOS, run_scenario
from .semiclassical import (
    SemiclassicalProfile,
    autocorrelation_semiclassical,
    exact_theta,
    gaussian_theta,
    semiclassical_theta,
)
from .spectrum import FAMILIES, generate, make_spectrum


class CLIError(Exception):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise CLIError(f"--param expects key=value, got {item!r}")
        out[key.replace("-", "_")] = _parse_value(value)
    return out


def _common(p: argparse.ArgumentParser, formats_allowed=("json",)):
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=formats_allowed, default=formats_allowed[0])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="PRNG seed (default 42)")
    p.add_argument("--backend", choices=BACKENDS, default="auto", help="entropy backend")
    p.add_argument("--tolerance", type=float, default=LADDER_TOL, help="time-average ladder tolerance")


def _spectrum_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("spectrum source")
    g.add_argument("--spectrum", help="spectrum JSON file")
    g.add_argument("--family", choices=sorted(FAMILIES))
    g.add_argument("--energies", help="comma-separated energies (exact mode accepts p/q)")
    g.add_argument("--degeneracies", help="comma-separated degeneracies")
    g.add_argument("--mode", choices=("float", "exact"), default="float")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator or state parameter")


def _load_spectrum(args):
    if args.spectrum:
        return formats.spectrum_from_document(formats.read_json(args.spectrum))
    params = _params(args.param)
    if args.family:
        keep = {k: v for k, v in params.items() if k not in _STATE_PARAMS}
        return generate(args.family, **keep)
    if args.energies:
        energies = [e.strip() for e in args.energies.split(",")]
        if args.mode == "float":
            energies = [float(e) for e in energies]
        degs = [int(d) for d in args.degeneracies.split(",")] if args.degeneracies else None
        return make_spectrum(energies, degs, mode=args.mode)
    raise CLIError("give --spectrum, --family or --energies")


_STATE_PARAMS = {"u", "level", "d", "tail", "amplitudes"}


def _build_state(args, rng) -> StateVector:
    if getattr(args, "state", None):
        return formats.state_from_document(formats.read_json(args.state))
    params = _params(args.param)
    kind = args.kind
    if kind == "coherent-phase":
        return coherent_phase_state(float(params["u"]), params.get("omega", 1.0), params.get("tail", 1e-12))
    if kind == "isotropic-coherent":
        return isotropic_coherent_state(float(params["u"]), params.get("omega", 1.0), params.get("tail", 1e-12))
    if kind == "correlated":
        return correlated_state(float(params["u"]), params.get("omega", 1.0), params.get("tail", 1e-12))
    s = _load_spectrum(args)
    if kind == "random":
        return random_state(s, rng)
    if kind == "equal":
        return equal_superposition(s)
    if kind == "eigenstate":
        return eigenstate(s, int(params.get("level", 0)), int(params.get("d", 0)))
    if kind == "amplitudes":
        amps = params.get("amplitudes")
        if not isinstance(amps, list):
            raise CLIError("--param amplitudes=[...] expects a JSON list of numbers or [re, im] pairs")
        vals = [complex(*a) if isinstance(a, list) else complex(a) for a in amps]
        return StateVector.normalized(s, vals)
    raise CLIError(f"unknown state kind {kind!r}")


def _state_args(p: argparse.ArgumentParser):
    p.add_argument("--state", help="state JSON file")
    p.add_argument("--kind", default="random",
                   choices=("random", "equal", "eigenstate", "amplitudes", "coherent-phase",
                            "isotropic-coherent", "correlated"))


def _emit(args, doc=None, csv_columns=None):
    """Write a JSON document or CSV columns to ``--output`` (or stdout)."""
    out = getattr(args, "output", None)
    if args.format == "csv":
        header, cols = csv_columns
        if out:
            formats.write_csv(out, header, cols)
        else:
            import csv
            w = csv.writer(sys.stdout)
            w.writerow(header)
            for row in zip(*[np.asarray(c, dtype=float) for c in cols]):
                w.writerow([repr(float(v)) for v in row])
        return
    if out:
        formats.write_json(doc, out)
    else:
        json.dump(doc, sys.stdout, indent=2, allow_nan=False)
        sys.stdout.write("\n")


# -- subcommands -------------------------------------------------------------------------

def cmd_spectrum(args, rng):
    _emit(args, formats.spectrum_document(_load_spectrum(args)))
    return 0


def cmd_state(args, rng):
    _emit(args, formats.state_document(_build_state(args, rng)))
    return 0


def cmd_density(args, rng):
    psi = _build_state(args, rng)
    p = canonical_density(psi)
    if args.format == "csv":
        t = np.linspace(args.t_min, args.t_max, args.points)
        _emit(args, csv_columns=(["t", "p"], [t, p(t)]))
    else:
        _emit(args, formats.apfunction_document(p.function))
    return 0


def cmd_resolution(args, rng):
    psi = _build_state(args, rng)
    rep = resolution_report(psi, args.backend, tol=args.tolerance)
    _emit(args, formats.report_document(rep))
    return 0


def cmd_pom(args, rng):
    s = _load_spectrum(args)
    if args.action == "canonical":
        _emit(args, formats.operator_document(canonical_t0(s).t0))
    elif args.action == "kraus":
        if args.t0:
            pom = validate_t0(formats.operator_from_document(formats.read_json(args.t0)), s)
        else:
            pom = canonical_t0(s)
        kraus = kraus_decompose(pom)
        doc = formats.envelope("kraus", {
            "completeness_residual": kraus_completeness(kraus),
            "operators": [formats.operator_document(a) for a in kraus],
        })
        _emit(args, doc)
    elif args.action == "validate":
        if not args.t0:
            raise CLIError("pom validate needs --t0")
        validate_t0(formats.operator_from_document(formats.read_json(args.t0)), s)
        _emit(args, formats.envelope("validation", {"valid": True, "dim": s.dim}))
    elif args.action == "limit":
        gap = float(np.min(np.diff(s.frequencies))) if s.n_levels > 1 else 1.0
        X = args.horizon if args.horizon else 1e3 / gap
        op = normalisation_operator(s, X)
        doc = formats.envelope("pom-limit", {
            "X": X,
            "N_deviation": float(np.max(np.abs(op.N - np.eye(s.dim)))),
            "bound": 2 / (X * gap),
            "null_rank": int(round(np.trace(op.P0).real)),
            "N": formats.operator_document(op.N),
        })
        _emit(args, doc)
    elif args.action == "galapon":
        taus = np.linspace(0, args.tau_max, args.points)
        psi = _build_state(args, rng) if (args.state or args.kind != "random") else equal_superposition(s)
        rep = galapon_diagnostic(s, psi, taus, rng)
        _emit(args, formats.envelope("galapon", rep.to_dict()))
    return 0


def cmd_semiclassical(args, rng):
    law = {"k": args.k, "scale": args.scale}
    if args.profile == "gaussian":
        prof = SemiclassicalProfile.gaussian(args.sigma, "powerlaw", args.n_bar, **law)
    else:
        prof = SemiclassicalProfile.equal_weight(args.M, "powerlaw", args.n_bar, **law)
    t_max = args.t_max if args.t_max is not None else prof.revival_time
    t = np.linspace(0.0, t_max, args.points)
    direct = semiclassical_theta(prof, t)
    auto = autocorrelation_semiclassical(prof, t)
    exact = exact_theta(prof, "powerlaw", t, **law)
    header = ["t", "theta_abs2", "exact_abs2", "autocorr_abs"]
    cols = [t, np.abs(direct) ** 2, np.abs(exact) ** 2, np.abs(auto)]
    if args.profile == "gaussian":
        header.insert(2, "poisson_abs2")
        cols.insert(2, np.abs(gaussian_theta(args.sigma, prof.E1, prof.E2, t)) ** 2)
    if args.format == "csv":
        _emit(args, csv_columns=(header, cols))
    else:
        doc = formats.envelope("semiclassical", {
            "n_bar": prof.n_bar, "E1": prof.E1, "E2": prof.E2, "revival_time": prof.revival_time,
            "trace": {h: np.asarray(c, dtype=float).tolist() for h, c in zip(header, cols)},
        })
        _emit(args, doc)
    return 0


def cmd_scenario(args, rng):
    params = _params(args.param)
    params.setdefault("seed", args.seed)
    params.setdefault("backend", args.backend)
    params.setdefault("tol", args.tolerance)
    result = run_scenario(args.name, **params)
    if args.output:
        result.artifacts.append(str(Path(args.output)))
    _emit(args, result.to_dict())
    if not args.quiet:
        for name, m in result.metrics.items():
            status = "PASS" if m.passed else "FAIL"
            print(f"{status} {args.name}.{name}: {m.value:.6g} ({m.comparison}, tolerance {m.tolerance:.3g})",
                  file=sys.stderr)
    return 0 if result.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apclock", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="build a spectrum")
    _spectrum_args(p)
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("state", help="build a state")
    _spectrum_args(p)
    _state_args(p)
    _common(p)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("density", help="canonical time density")
    _spectrum_args(p)
    _state_args(p)
    _common(p, ("csv", "json"))
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=2 * math.pi)
    p.add_argument("--points", type=int, default=1000)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("resolution", help="purity, entropy and uncertainty relations")
    _spectrum_args(p)
    _state_args(p)
    _common(p)
    p.set_defaults(func=cmd_resolution)

    p = sub.add_parser("pom", help="time POM constructions")
    p.add_argument("action", choices=("canonical", "validate", "kraus", "limit", "galapon"))
    _spectrum_args(p)
    _state_args(p)
    _common(p)
    p.add_argument("--t0", help="operator JSON file holding a seed T0")
    p.add_argument("--horizon", type=float, help="finite horizon X (default 1000 / min gap)")
    p.add_argument("--tau-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_pom)

    p = sub.add_parser("semiclassical", help="semiclassical theta(t) traces for power-law spectra")
    _common(p, ("csv", "json"))
    p.add_argument("--profile", choices=("gaussian", "equal_weight"), default="gaussian")
    p.add_argument("--sigma", type=float, default=5.0)
    p.add_argument("--M", type=int, default=5)
    p.add_argument("--n-bar", type=float, default=200.0)
    p.add_argument("--k", type=float, default=4.0, help="potential exponent, E_n ~ n^(2k/(k+2))")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--t-max", type=float, help="end of the trace (default: revival time)")
    p.add_argument("--points", type=int, default=512)
    p.set_defaults(func=cmd_semiclassical)

    p = sub.add_parser("scenario", help="run a named scenario")
    p.add_argument("name", choices=sorted(SCENARIOS))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--quiet", action="store_true", help="no per-metric lines on stderr")
    _common(p)
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    try:
        return args.func(args, rng)
    except OSError as exc:
        name = exc.filename if exc.filename else ""
        print(f"apclock: I/O error: {exc.strerror or exc} {name}".rstrip(), file=sys.stderr)
        return 2
    except (APClockError, CLIError, ValueError, KeyError, TypeError) as exc:
        print(f"apclock: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
