import math

import numpy as np
import pytest

from pairzero import tasks
from pairzero.errors import InvalidArgumentError
from pairzero.rng import derive_key


@pytest.fixture(scope="module")
def quad():
    return tasks.QuadraticTask(20, 5, kappa=10.0, seed=3)


@pytest.fixture(scope="module")
def logi():
    return tasks.LogisticTask(10, 4, n_samples=400, seed=2)


def test_quadratic_optimum(quad):
    assert quad.loss(quad.w_star) == quad.f_star == 0.0
    assert np.linalg.eigvalsh(quad.Q).min() == pytest.approx(1.0)
    assert np.linalg.eigvalsh(quad.Q).max() == pytest.approx(10.0)


def test_client_losses_average_to_global(quad):
    w = np.linspace(-1, 1, 20)
    assert np.mean([quad.client_loss(k, w) for k in range(5)]) == pytest.approx(quad.loss(w))
    np.testing.assert_allclose(np.mean([quad.client_grad(k, w) for k in range(5)], axis=0),
                               quad.grad(w), atol=1e-12)


@pytest.mark.parametrize("task_name", ["quad", "logi"])
def test_gradient_matches_finite_differences(task_name, request):
    task = request.getfixturevalue(task_name)
    g = np.random.default_rng(0)
    for _ in range(5):
        w = g.standard_normal(task.dim)
        fd = np.array([(task.loss(w + 1e-6 * e) - task.loss(w - 1e-6 * e)) / 2e-6
                       for e in np.eye(task.dim)])
        assert np.linalg.norm(fd - task.grad(w)) <= 1e-6 * max(1.0, np.linalg.norm(fd))


def test_logistic_symmetric_start(logi):
    assert logi.loss(np.zeros(10)) == pytest.approx(math.log(2), rel=1e-14)
    np.testing.assert_allclose(logi.sample_losses(0, np.zeros(10)), math.log(2))


def test_logistic_partition(logi):
    idx = np.concatenate(logi.shards)
    assert sorted(idx.tolist()) == list(range(400))


def test_logistic_optimum(logi):
    assert np.linalg.norm(logi.grad(logi.w_star)) < 1e-6
    assert logi.loss(logi.w_star) == pytest.approx(logi.f_star)
    assert logi.f_star < math.log(2)


def test_batches(logi, quad):
    b = tasks.sample_batch(logi, 1, derive_key(1))
    assert b.size == 64 and b.min() >= 0 and b.max() < logi.shard_size(1)
    np.testing.assert_array_equal(b, tasks.sample_batch(logi, 1, derive_key(1)))
    assert tasks.sample_batch(quad, 0, derive_key(1)) is None


def test_validation():
    with pytest.raises(InvalidArgumentError):
        tasks.QuadraticTask(3, 2, kappa=0.5)
    with pytest.raises(InvalidArgumentError):
        tasks.LogisticTask(3, 10, n_samples=5)
