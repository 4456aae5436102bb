import json
import math

import jsonschema
import pytest

from apclock.formats import SCHEMAS
from apclock.scenarios import (
    SCENARIOS,
    product_entropies,
    run_scenario,
    small_split,
    thermal_amplitudes,
)

FAST = {
    "coherent-phase": {"u": 0.7},
    "anisotropic": {"energy": 1.0},
    "isotropic": {"u": 0.5},
    "correlated": {"u": 0.6},
    "single-mode": {"energy": 20.0},
    "hydrogen": {"n_states": 5},
    "pom-limit": {},
    "galapon": {},
}


def test_every_scenario_is_covered():
    assert set(FAST) == set(SCENARIOS)


@pytest.mark.parametrize("name", sorted(FAST))
def test_scenario_passes_and_validates(name):
    res = run_scenario(name, **FAST[name])
    doc = res.to_dict()
    jsonschema.validate(json.loads(json.dumps(doc)), SCHEMAS["scenario"])
    failed = [k for k, m in res.metrics.items() if not m.passed]
    assert res.passed, failed
    for m in res.metrics.values():
        assert m.provenance in {"PAPER", "DERIVED"}


def test_scenarios_are_reproducible():
    a = run_scenario("hydrogen", n_states=3, seed=5).to_dict()
    b = run_scenario("hydrogen", n_states=3, seed=5).to_dict()
    assert a == b


def test_unknown_scenario_and_bad_params():
    with pytest.raises(ValueError):
        run_scenario("nope")
    with pytest.raises(ValueError):
        run_scenario("coherent-phase", u=1.0)


def test_small_split_limit_is_twice_isotropic():
    u = 0.6
    energy = 2 * u * u / (1 - u * u)
    w1, w2 = small_split(1.0, 1e-3)
    a, b = thermal_amplitudes(energy, w1, w2)
    _, s, _ = product_entropies(a, b, w1, w2)
    assert s == pytest.approx(2 * math.log(1 - u * u), rel=1e-3)


def test_thermal_amplitudes_match_energy():
    a, b = thermal_amplitudes(4.0, 1.0, math.sqrt(2))
    U, V = a * a, b * b
    assert U / (1 - U) + math.sqrt(2) * V / (1 - V) == pytest.approx(4.0, rel=1e-12)
