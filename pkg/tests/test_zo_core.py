import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pairzero import zo_core
from pairzero.errors import InvalidArgumentError, NumericalDomainError
from pairzero.zo_core import PerturbationSpec


def half_sq(w, batch=None):
    return 0.5 * float(w @ w)


class TestPerturbation:
    def test_same_seed_same_vector(self):
        spec = PerturbationSpec(7, 0)
        np.testing.assert_array_equal(zo_core.generate_perturbation(spec, 4),
                                      zo_core.generate_perturbation(spec, 4))

    def test_iterations_differ(self):
        a = zo_core.generate_perturbation(PerturbationSpec(7, 0), 4)
        b = zo_core.generate_perturbation(PerturbationSpec(7, 1), 4)
        assert np.any(a != b)

    def test_moments(self):
        z = zo_core.generate_perturbation(PerturbationSpec(7, 0), 10**5)
        assert -0.02 < z.mean() < 0.02
        assert 0.98 < z.var() < 1.02

    @pytest.mark.parametrize("kwargs", [dict(mu=0.0), dict(mu=-1.0), dict(iteration=-1)])
    def test_invalid_spec(self, kwargs):
        args = dict(global_seed=1, iteration=0) | kwargs
        with pytest.raises(InvalidArgumentError):
            PerturbationSpec(**args)

    def test_bad_dim(self):
        with pytest.raises(InvalidArgumentError):
            zo_core.generate_perturbation(PerturbationSpec(1, 1), 0)


class TestSpsa:
    def test_quadratic_is_exact(self):
        w, z = np.array([1.0, 2.0]), np.array([1.0, -1.0])
        assert zo_core.spsa_projection(half_sq, w, z, 0.5) == -1.0
        for mu in (1e-4, 1e-3, 0.1, 3.0):
            assert zo_core.spsa_projection(half_sq, w, z, mu) == pytest.approx(-1.0, rel=1e-11)

    def test_zero_direction(self):
        assert zo_core.spsa_projection(half_sq, np.array([1.0, 2.0]), np.zeros(2), 1e-3) == 0.0

    def test_quartic_error_is_second_order(self):
        # (F(1+mu) - F(1-mu)) / 2mu = 4 + 4 mu^2 for F = w^4
        p = zo_core.spsa_projection(lambda w, b: float(np.sum(w ** 4)), np.array([1.0]),
                                    np.array([1.0]), 0.1)
        assert abs(p - 4.0) <= 4 * 0.1 ** 2 + 1e-12

    def test_same_batch_used_twice(self):
        seen = []
        zo_core.spsa_projection(lambda w, b: seen.append(b) or 0.0, np.zeros(2), np.ones(2),
                                1e-3, batch="B")
        assert seen == ["B", "B"]

    def test_nonfinite_loss_names_side(self):
        def loss(w, b):
            return math.inf if w[0] > 0 else 0.0
        with pytest.raises(NumericalDomainError) as info:
            zo_core.spsa_projection(loss, np.zeros(1), np.ones(1), 1e-3)
        assert info.value.where == "w+mu*z"
        with pytest.raises(NumericalDomainError) as info:
            zo_core.spsa_projection(lambda w, b: math.nan if w[0] < 0 else 0.0,
                                    np.zeros(1), np.ones(1), 1e-3)
        assert info.value.where == "w-mu*z"

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            zo_core.spsa_projection(half_sq, np.zeros(2), np.zeros(3), 1e-3)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32), st.sampled_from([1e-4, 1e-3, 1e-2]))
    def test_exact_on_random_quadratics(self, d, seed, mu):
        g = np.random.default_rng(seed)
        a = g.standard_normal((d, d))
        q, b = a @ a.T / d, g.standard_normal(d)
        w, z = g.standard_normal(d), g.standard_normal(d)
        exact = float(z @ (q @ w + b))
        p = zo_core.spsa_projection(lambda v, _: 0.5 * float(v @ q @ v) + float(b @ v), w, z, mu)
        assert abs(p - exact) <= 1e-10 * (1 + abs(exact))


class TestClip:
    @pytest.mark.parametrize("p,value,clipped", [(150, 100, True), (-3, -3, False),
                                                 (-100, -100, False), (-250, -100, True)])
    def test_examples(self, p, value, clipped):
        out = zo_core.clip_projection(p, 100.0)
        assert (out.value, out.was_clipped) == (value, clipped)

    @given(st.floats(-1e12, 1e12), st.floats(1e-6, 1e6))
    def test_bounded_and_idempotent(self, p, gamma):
        once = zo_core.clip_projection(p, gamma)
        assert abs(once.value) <= gamma
        twice = zo_core.clip_projection(once.value, gamma)
        assert twice.value == once.value and not twice.was_clipped

    def test_bad_gamma(self):
        with pytest.raises(InvalidArgumentError):
            zo_core.clip_projection(1.0, 0.0)


class TestUpdate:
    def test_examples(self):
        np.testing.assert_allclose(
            zo_core.apply_update([1.0, 2.0], 0.1, 2.0, [1.0, -1.0]), [0.8, 2.2])
        np.testing.assert_array_equal(zo_core.apply_update([0.0], 1.0, 1.0, [1.0]), [-1.0])

    def test_zero_step_leaves_w(self):
        w = np.array([3.0, -1.0])
        np.testing.assert_array_equal(zo_core.apply_update(w, 0.5, 0.0, [9.0, 9.0]), w)

    def test_does_not_mutate(self):
        w = np.array([1.0])
        zo_core.apply_update(w, 1.0, 1.0, np.array([1.0]))
        assert w[0] == 1.0

    @given(arrays(np.float64, 5, elements=st.floats(-1e3, 1e3)),
           st.floats(1e-4, 1.0), st.floats(-1e3, 1e3))
    def test_step_along_z(self, z, eta, p):
        w = np.ones(5)
        new = zo_core.apply_update(w, eta, p, z)
        np.testing.assert_allclose(w - new, eta * p * z, rtol=1e-12, atol=1e-9)

    def test_rejects_bad_eta(self):
        with pytest.raises(InvalidArgumentError):
            zo_core.apply_update([0.0], 0.0, 1.0, [1.0])

    def test_model_vector_validation(self):
        with pytest.raises(NumericalDomainError):
            zo_core.as_model_vector([1.0, math.nan])
        with pytest.raises(InvalidArgumentError):
            zo_core.as_model_vector([[1.0]])
