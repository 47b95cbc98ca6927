"""Desk-scale federated tasks with known (or precomputed) optima.

A task exposes per-client losses ``client_loss(k, w, batch)`` where ``batch``
is an index array into client ``k``'s shard (``None`` = whole shard), the
global loss ``loss(w) = mean_k client_loss(k, w)``, its gradient, and ``f_star``.
"""


import numpy as np
from scipy import optimize

from .errors import InvalidArgumentError
from .rng import derive_key, normal_stream, uniform_stream


def _rng_normals(seed, tag, shape):
    n = int(np.prod(shape))
    return normal_stream(derive_key(seed, tag), n).reshape(shape)


def _orthogonal(seed, tag, d):
    q, r = np.linalg.qr(_rng_normals(seed, tag, (d, d)))
    return q * np.sign(np.diag(r))


class QuadraticTask:
    """``F_k(w) = 1/2 (w - w*)' Q_k (w - w*) + c_k`` with ``sum_k c_k = 0``.

    The average of the ``Q_k`` has eigenvalues spread evenly over ``[1, kappa]``,
    so the PL constant is 1, the smoothness constant is ``kappa`` and
    ``F* = 0`` at ``w*``.  Losses carry no data, so every batch is the full set.
    """

    name = "quadratic"
    batch_size = None

    def __init__(self, d, K, kappa=10.0, seed=0, heterogeneity=0.5):
        if d < 1 or K < 1:
            raise InvalidArgumentError("need d >= 1 and K >= 1")
        if not kappa >= 1:
            raise InvalidArgumentError(f"condition number must be >= 1, got {kappa}")
        self.dim, self.K, self.kappa = d, K, float(kappa)
        eig = np.linspace(1.0, kappa, d) if d > 1 else np.array([1.0])
        u = _orthogonal(seed, 1, d)
        self.Q = (u * eig) @ u.T
        self.Q = 0.5 * (self.Q + self.Q.T)

        # zero-sum symmetric perturbations keep the average at Q
        raw = _rng_normals(seed, 2, (K, d, d))
        raw = 0.5 * (raw + raw.transpose(0, 2, 1))
        raw -= raw.mean(axis=0)
        norms = np.array([np.linalg.norm(m, 2) for m in raw])
        scale = heterogeneity / max(float(norms.max()), 1e-300) if K > 1 else 0.0
        self.Q_k = self.Q[None] + scale * raw

        offsets = _rng_normals(seed, 3, (K,))
        self.c_k = offsets - offsets.mean()
        self.w_star = _rng_normals(seed, 4, (d,))
        self.w0 = np.zeros(d)
        self.f_star = 0.0
        self.M = float(eig.min())
        self.L = float(eig.max())

    def shard_size(self, k):
        return 0

    def client_loss(self, k, w, batch=None):
        r = w - self.w_star
        return 0.5 * float(r @ self.Q_k[k] @ r) + float(self.c_k[k])

    def loss(self, w):
        r = w - self.w_star
        return 0.5 * float(r @ self.Q @ r)

    def grad(self, w):
        return self.Q @ (w - self.w_star)

    def client_grad(self, k, w):
        return self.Q_k[k] @ (w - self.w_star)

    def sample_losses(self, k, w):
        return None


class LogisticTask:
    """Binary logistic regression on two Gaussian clusters, i.i.d.-partitioned.

    Labels are +-1 with class means ``+-separation * u`` for a random unit
    ``u``; an L2 term ``ridge/2 |w|^2`` makes the optimum unique.  ``F*`` is
    found once by L-BFGS on the full objective and cached.
    """

    name = "logistic"

    def __init__(self, d, K, n_samples=1000, seed=0, separation=2.0, ridge=1e-3,
                 batch_size=64):
        if d < 1 or K < 1:
            raise InvalidArgumentError("need d >= 1 and K >= 1")
        if n_samples < K:
            raise InvalidArgumentError("need at least one sample per client")
        self.dim, self.K, self.ridge = d, K, float(ridge)
        self.batch_size = batch_size
        direction = _rng_normals(seed, 11, (d,))
        direction /= np.linalg.norm(direction)
        labels = np.where(uniform_stream(derive_key(seed, 12), n_samples) < 0.5, -1.0, 1.0)
        x = _rng_normals(seed, 13, (n_samples, d)) + separation * labels[:, None] * direction
        # signed features: the loss only ever sees y_i x_i
        self.features = labels[:, None] * x
        self.labels = labels
        perm = np.argsort(uniform_stream(derive_key(seed, 14), n_samples), kind="stable")
        self.shards = [np.sort(part) for part in np.array_split(perm, K)]
        self.w0 = np.zeros(d)
        row_sq = np.sum(x * x, axis=1)
        self.L = 0.25 * float(row_sq.max()) + self.ridge
        self.M = self.ridge
        self._f_star = None
        self._w_star = None

    def shard_size(self, k):
        return self.shards[k].size

    def _mean_loss(self, a, w):
        return float(np.mean(np.logaddexp(0.0, -(a @ w)))) + 0.5 * self.ridge * float(w @ w)

    def client_loss(self, k, w, batch=None):
        idx = self.shards[k] if batch is None else self.shards[k][batch]
        return self._mean_loss(self.features[idx], w)

    def sample_losses(self, k, w):
        """Per-sample losses (ridge included) over client ``k``'s shard."""
        a = self.features[self.shards[k]]
        return np.logaddexp(0.0, -(a @ w)) + 0.5 * self.ridge * float(w @ w)

    def loss(self, w):
        return float(np.mean([self.client_loss(k, w) for k in range(self.K)]))

    def grad(self, w):
        g = np.zeros(self.dim)
        for k in range(self.K):
            g += self.client_grad(k, w)
        return g / self.K

    def client_grad(self, k, w):
        a = self.features[self.shards[k]]
        s = 0.5 * (1.0 - np.tanh(0.5 * (a @ w)))  # sigmoid(-a.w)
        return -(a * s[:, None]).mean(axis=0) + self.ridge * w

    def _solve(self):
        res = optimize.minimize(self.loss, self.w0, jac=self.grad, method="L-BFGS-B",
                                options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 10_000})
        self._w_star = res.x
        self._f_star = float(res.fun)

    @property
    def f_star(self):
        if self._f_star is None:
            self._solve()
        return self._f_star

    @property
    def w_star(self):
        if self._w_star is None:
            self._solve()
        return self._w_star


def quadratic_task(d, K, kappa=10.0, seed=0):
    return QuadraticTask(d, K, kappa, seed)


def logistic_task(d, K, n_samples=1000, seed=0, **kwargs):
    return LogisticTask(d, K, n_samples, seed, **kwargs)


def sample_batch(task, k, key):
    """Uniform with-replacement batch indices into client ``k``'s shard."""
    b = task.batch_size
    n = task.shard_size(k)
    if b is None or n == 0 or b >= n:
        return None
    return np.minimum((uniform_stream(key, b) * n).astype(np.int64), n - 1)
