"""Tests for surrogate evaluation and persistence."""

import json
import math

import numpy as np
import pytest

from core.config import GreedyConfig
from core.eigcore import smallest_eigpairs
from core.errors import ConfigurationError, DomainError
from greedy.builder import run
from greedy.surrogate import MANIFEST, Surrogate, evaluate_surrogate


@pytest.fixture(scope="module")
def built(synthetic_small):
    config = GreedyConfig(init_grid=(2, 2), train_grid=(4, 4), tol=1e-4, n_max=10)
    return run(synthetic_small.pencil, config, run_id="surrogate-test")


class TestEvaluate:
    def test_sample_point_is_certified(self, built, synthetic_small):
        omega = built.samples[0].omega
        value = built.surrogate.evaluate(omega)
        A, B = synthetic_small.pencil.assemble(omega)
        exact = smallest_eigpairs(A, B, 1).values[0]
        assert value.bound <= 1e-8
        assert abs(value.lambda1 - exact) <= 1e-10 * (1 + abs(exact))
        assert value.method == "bauer-fike"
        assert math.isnan(value.gap) or value.gap > 0

    def test_upper_bound_property(self, built, synthetic_small, rng):
        for omega in rng.uniform(-1.0, 1.0, (10, 2)):
            A, B = synthetic_small.pencil.assemble(omega)
            exact = smallest_eigpairs(A, B, 1).values[0]
            assert built.surrogate.evaluate(omega).lambda1 >= exact - 1e-12

    def test_evaluate_points_table(self, built):
        table = built.surrogate.evaluate_points([(0.0, 0.0), (0.5, -0.5), (1.0, 1.0)])
        assert list(table.columns) == ["w1", "w2", "lambda", "bound", "gap"]
        assert len(table) == 3
        assert table["bound"].ge(0).all()

    def test_outside_domain(self, built):
        with pytest.raises(DomainError):
            built.surrogate.evaluate((2.0, 0.0))

    def test_module_helper(self, built):
        assert evaluate_surrogate(built.surrogate, (0.1, 0.1)).lambda1 == built.surrogate.evaluate((0.1, 0.1)).lambda1


class TestPersistence:
    def test_round_trip_is_bitwise(self, built, tmp_path):
        built.surrogate.save(tmp_path)
        loaded = Surrogate.load(tmp_path)
        original = built.surrogate.model
        assert np.array_equal(loaded.model.basis, original.basis)
        for a, b in zip(loaded.model.reduced_a + loaded.model.reduced_b, original.reduced_a + original.reduced_b):
            assert np.array_equal(a, b)
        assert loaded.m == built.surrogate.m
        assert loaded.tol == built.surrogate.tol
        assert loaded.context == built.surrogate.context
        assert loaded.source == {"fixture": "synthetic", "params": {"n": 40, "m0": 3, "m1": 2, "seed": 7}}
        assert [p.label for p in loaded.model.subspace.provenance] == \
            [p.label for p in original.subspace.provenance]
        omega = (0.3, -0.6)
        assert loaded.evaluate(omega).lambda1 == built.surrogate.evaluate(omega).lambda1

    def test_infinite_tol_is_stored(self, built, tmp_path):
        surrogate = Surrogate(built.surrogate.model, built.surrogate.context, tol=math.inf)
        surrogate.save(tmp_path)
        with open(tmp_path / MANIFEST) as f:
            assert json.load(f)["tol"] == "inf"
        assert Surrogate.load(tmp_path).tol == math.inf

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            Surrogate.load(tmp_path)

    def test_corrupted_manifest(self, built, tmp_path):
        built.surrogate.save(tmp_path)
        (tmp_path / MANIFEST).write_text("{ not json")
        with pytest.raises(ConfigurationError, match="Corrupted"):
            Surrogate.load(tmp_path)

    def test_unknown_version(self, built, tmp_path):
        built.surrogate.save(tmp_path)
        manifest = json.loads((tmp_path / MANIFEST).read_text())
        manifest["formatVersion"] = 99
        (tmp_path / MANIFEST).write_text(json.dumps(manifest))
        with pytest.raises(ConfigurationError, match="version"):
            Surrogate.load(tmp_path)

    def test_missing_matrix(self, built, tmp_path):
        built.surrogate.save(tmp_path)
        (tmp_path / "tall_b_1.mtx").unlink()
        with pytest.raises(ConfigurationError, match="tall_b_1.mtx"):
            Surrogate.load(tmp_path)
