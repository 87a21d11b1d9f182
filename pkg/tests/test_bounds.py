"""Tests for the Bauer-Fike and Kato-Temple error bounds."""

import math

import numpy as np
import pytest

from core.bounds import (
    BAUER_FIKE,
    KATO_TEMPLE,
    BoundContext,
    bauer_fike,
    kato_temple,
    reference_bmin,
    select_bound,
)
from core.config import BoundConfig
from core.eigcore import smallest_eigpairs
from core.errors import ConfigurationError
from core.reduction import Provenance, Subspace, project
from problems import beam_like, example1


def context(bmin=4.0, policy="auto", **kwargs):
    return BoundContext(bmin_ref=bmin, omega_ref=(0.0, 0.0), policy=policy, **kwargs)


class TestFormulas:
    def test_bauer_fike(self):
        assert bauer_fike(1e-3, context()) == pytest.approx(5e-4)

    def test_kato_temple(self):
        assert kato_temple(1e-3, 0.5, context()) == pytest.approx(1e-6 / 2.0)

    def test_raw_estimators_return_floats(self):
        assert isinstance(bauer_fike(1e-3, context()), float)
        assert isinstance(kato_temple(1e-3, 0.5, context()), float)

    @pytest.mark.parametrize("delta", [0.0, -1.0, None, float("nan"), float("inf")])
    def test_kato_temple_rejects_invalid_gap(self, delta):
        with pytest.raises(ConfigurationError):
            kato_temple(1e-3, delta, context())

    def test_zero_residual(self):
        assert bauer_fike(0.0, context()) == 0.0
        assert kato_temple(0.0, 1.0, context()) == 0.0

    def test_safety_factor(self):
        ctx = context(safety_factor=0.25)
        assert ctx.bmin == pytest.approx(1.0)
        assert bauer_fike(1.0, ctx) == pytest.approx(1.0)

    def test_invalid_context(self):
        with pytest.raises(ConfigurationError):
            context(bmin=0.0)
        with pytest.raises(ConfigurationError):
            context(safety_factor=1.5)


class TestSelection:
    def test_auto_policy(self):
        assert select_bound(1, 1e-3, 0.5, context()).method == BAUER_FIKE
        assert select_bound(2, 1e-3, 0.5, context()).method == KATO_TEMPLE
        assert select_bound(2, 1e-3, None, context()).fallback

    @pytest.mark.parametrize("delta", [0.0, 1e-13, -1.0, None, float("nan")])
    def test_kato_temple_fallback(self, delta):
        estimate = select_bound(2, 1e-3, delta, context())
        assert estimate.method == BAUER_FIKE
        assert estimate.fallback
        assert estimate.value == pytest.approx(5e-4)

    def test_kato_temple_estimate(self):
        estimate = select_bound(2, 1e-3, 0.5, context())
        assert estimate.value == pytest.approx(kato_temple(1e-3, 0.5, context()))
        assert not estimate.fallback

    def test_forced_policies(self):
        assert select_bound(2, 1e-3, 0.5, context(policy=BAUER_FIKE)).method == BAUER_FIKE
        assert select_bound(1, 1e-3, 0.5, context(policy=KATO_TEMPLE)).method == KATO_TEMPLE

    def test_invalid_m(self):
        with pytest.raises(ConfigurationError):
            select_bound(0, 1e-3, 0.5, context())

    def test_context_round_trip(self):
        ctx = context(policy=KATO_TEMPLE, safety_factor=0.5)
        assert BoundContext.from_dict(ctx.to_dict()) == ctx


class TestReference:
    def test_identity_mass(self):
        pencil = example1(6).pencil
        assert reference_bmin(pencil) == pytest.approx(1.0)

    def test_beam_mass_at_center(self):
        pencil = beam_like(30).pencil
        ctx = BoundContext.for_pencil(pencil, BoundConfig())
        _, B = pencil.assemble(pencil.center)
        assert ctx.bmin_ref == pytest.approx(np.linalg.eigvalsh(B.toarray())[0], rel=1e-10)
        assert ctx.omega_ref == tuple(pencil.center)

    def test_custom_reference_point(self):
        pencil = beam_like(30).pencil
        ctx = BoundContext.for_pencil(pencil, BoundConfig(omega_ref=(0.1, 100.0), safety_factor=0.9))
        assert ctx.omega_ref == (0.1, 100.0)
        assert ctx.bmin == pytest.approx(0.9 * ctx.bmin_ref)


class TestValidity:
    def test_bauer_fike_bounds_distance_to_spectrum(self, example1_n50):
        pencil = example1_n50.pencil
        A, B = pencil.assemble((0.4, -0.1))
        x = smallest_eigpairs(A, B, 1).vectors[:, 0]
        subspace = Subspace.empty(pencil.n).extend([x], [Provenance((0.4, -0.1), "eigvec", 1)])
        model = project(pencil, subspace)
        ctx = BoundContext.for_pencil(pencil)
        for omega in np.random.default_rng(2).uniform(-0.5, 0.5, (30, 2)):
            values, Y, _ = model.reduced_min_eigpairs(omega, 1, lift=False)
            res = model.fast_residual_norm(omega, values[0], Y[:, 0])
            spectrum = [example1_n50.lambda1(omega), example1_n50.lambda2(omega)] + list(range(3, pencil.n + 1))
            distance = min(abs(values[0] - lam) for lam in spectrum)
            assert math.isfinite(res)
            assert bauer_fike(res, ctx) + 1e-12 >= distance
