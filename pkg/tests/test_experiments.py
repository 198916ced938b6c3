import json

import pytest

from cusplab.errors import InputError
from cusplab.experiments import ACCEPTANCE, REGISTRY, _plain, default_jobs, pmap, run_experiment


def _square(x):
    return x * x


def test_registry_covers_every_group():
    assert {e.group for e in REGISTRY.values()} == {"metrics", "geodesic", "strata", "cat0", "limits", "asymptotics"}
    assert all(e.citation.strip() for e in REGISTRY.values())
    assert all(k in REGISTRY for keys in ACCEPTANCE.values() for k in keys)
    assert sorted(ACCEPTANCE, key=lambda s: int(s[2:])) == [f"AC{i}" for i in range(1, 13)]


def test_unknown_experiment_and_parameter():
    with pytest.raises(InputError):
        run_experiment("metrics/nothing")
    with pytest.raises(InputError):
        run_experiment("metrics/series", {"bogus": 1})


def test_overrides_are_echoed():
    params, outcome = run_experiment("metrics/series", {"count": 5})
    assert params["count"] == 5 and params["hi"] == 0.3
    assert outcome.passed


@pytest.mark.parametrize("key", ["asymptotics/normal-form", "strata/refraction", "cat0/angles"])
def test_same_seed_same_records(key):
    a = json.dumps(_plain(run_experiment(key, seed=3)[1].results), sort_keys=True)
    b = json.dumps(_plain(run_experiment(key, seed=3)[1].results), sort_keys=True)
    assert a == b


def test_parallel_matches_serial():
    over = {"count": 4, "model": "euclidean"}
    serial = run_experiment("cat0/triangles", over, seed=1, jobs=1)[1]
    parallel = run_experiment("cat0/triangles", over, seed=1, jobs=2)[1]
    assert serial.tables == parallel.tables
    assert pmap(_square, range(6), jobs=2) == [0, 1, 4, 9, 16, 25]


def test_default_jobs(monkeypatch):
    monkeypatch.setenv("CUSPLAB_JOBS", "3")
    assert default_jobs() == 3
    monkeypatch.setenv("CUSPLAB_JOBS", "many")
    assert default_jobs() == 1


def test_plain_is_json_safe():
    import numpy as np

    doc = _plain({"a": np.float64(1.5), "b": (np.int64(2), np.array([1.0, 2.0])), "c": np.bool_(True)})
    assert json.loads(json.dumps(doc)) == {"a": 1.5, "b": [2, [1.0, 2.0]], "c": True}


def test_unknown_triangle_model():
    with pytest.raises(InputError):
        run_experiment("cat0/triangles", {"model": "torus", "count": 1})
