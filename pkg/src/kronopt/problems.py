"""Desk-scale objectives with exact gradients and seeded gradient noise.

Every deterministic gradient here is hand-derived and checked against
central finite differences in the tests.  Stochastic gradients follow a
matrix-Gaussian model G = mean + row_cov_sqrt @ E @ col_cov_sqrt with E an
iid standard-normal matrix, which keeps both row- and column-wise second
moments available in closed form.  Randomness is counter-based (Philox) and
keyed by tuples, so any draw can be reproduced from (run_seed, step,
parameter_index) without sharing generator state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, ShapeMismatchError

SeedLike = Union[int, Sequence[int]]


def generator(seed: SeedLike) -> np.random.Generator:
    """Counter-based generator keyed by an int or a tuple of ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class MatrixGaussianModel:
    """G = mean + row_cov_sqrt @ E @ col_cov_sqrt, E iid standard normal."""

    mean: np.ndarray
    row_cov_sqrt: np.ndarray
    col_cov_sqrt: np.ndarray

    @property
    def row_cov(self) -> np.ndarray:
        return self.row_cov_sqrt @ self.row_cov_sqrt

    @property
    def col_cov(self) -> np.ndarray:
        return self.col_cov_sqrt @ self.col_cov_sqrt

    @property
    def shape(self) -> tuple[int, int]:
        return self.mean.shape


def iid_noise_model(mean, std: float) -> MatrixGaussianModel:
    """Isotropic special case: G = mean + std * E."""
    mean = np.asarray(mean, dtype=np.float64)
    m, n = mean.shape
    return MatrixGaussianModel(
        mean=mean, row_cov_sqrt=std * np.eye(m), col_cov_sqrt=np.eye(n)
    )


def sample_matrix_gaussian(model: MatrixGaussianModel, seed: SeedLike) -> np.ndarray:
    """One reproducible draw; the same seed always gives the same matrix."""
    m, n = model.shape
    e = generator(seed).standard_normal((m, n))
    return model.mean + model.row_cov_sqrt @ e @ model.col_cov_sqrt


def matrix_gaussian_moments(model: MatrixGaussianModel, b, side: str = "row") -> np.ndarray:
    """Closed-form contracted second moments of the model.

    side="row": E[G B G^T] = mean B mean^T + tr(B col_cov) * row_cov
    side="col": E[G^T B G] = mean^T B mean + tr(B row_cov) * col_cov

    The identity is validated against Monte Carlo in the test suite before
    anything else relies on it.
    """
    b = np.asarray(b, dtype=np.float64)
    m, n = model.shape
    if side == "row":
        if b.shape != (n, n):
            raise DimensionMismatchError(f"b must be {n}x{n} for side='row', got {b.shape}")
        return model.mean @ b @ model.mean.T + np.trace(b @ model.col_cov) * model.row_cov
    if side == "col":
        if b.shape != (m, m):
            raise DimensionMismatchError(f"b must be {m}x{m} for side='col', got {b.shape}")
        return model.mean.T @ b @ model.mean + np.trace(b @ model.row_cov) * model.col_cov
    raise ValueError(f"side must be 'row' or 'col', got {side!r}")


def elementwise_second_moment(model: MatrixGaussianModel) -> np.ndarray:
    """E[G * G] entry by entry: mean^2 + diag(row_cov) outer diag(col_cov)."""
    return model.mean**2 + np.outer(np.diag(model.row_cov), np.diag(model.col_cov))


@dataclass
class Problem:
    """A differentiable objective over a list of parameters.

    ``grad_at`` without a batch seed is the exact deterministic gradient;
    with a seed it adds one matrix-Gaussian noise draw per parameter, keyed
    by (seed..., parameter_index).
    """

    name: str
    parameter_shapes: list[tuple[int, ...]]
    loss_fn: Callable[[list[np.ndarray]], float]
    grad_fn: Callable[[list[np.ndarray]], list[np.ndarray]]
    noise: Optional[list[Optional[tuple[np.ndarray, np.ndarray]]]] = None
    initial_params: Optional[list[np.ndarray]] = None

    def loss_at(self, params) -> float:
        return float(self.loss_fn(list(params)))

    def grad_at(self, params, batch_seed: Optional[SeedLike] = None) -> list[np.ndarray]:
        grads = [np.asarray(g, dtype=np.float64) for g in self.grad_fn(list(params))]
        if batch_seed is None or self.noise is None:
            return grads
        base = (batch_seed,) if isinstance(batch_seed, int) else tuple(batch_seed)
        noisy = []
        for i, g in enumerate(grads):
            spec = self.noise[i]
            if spec is None:
                noisy.append(g)
                continue
            row_sqrt, col_sqrt = spec
            flat = g.reshape(g.shape[0], -1) if g.ndim != 2 else g
            model = MatrixGaussianModel(flat, row_sqrt, col_sqrt)
            draw = sample_matrix_gaussian(model, base + (i,))
            noisy.append(draw.reshape(g.shape))
        return noisy

    def init_params(self, seed: SeedLike = 0, scale: float = 1.0) -> list[np.ndarray]:
        if self.initial_params is not None:
            return [p.copy() for p in self.initial_params]
        rng = generator(seed)
        return [scale * rng.standard_normal(s) for s in self.parameter_shapes]


def eval_quadratic(h, theta) -> tuple[float, np.ndarray]:
    """loss = theta^T H theta / 2, grad = H theta, for symmetric PSD H."""
    h = np.asarray(h, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if h.shape != (theta.size, theta.size):
        raise DimensionMismatchError(f"H is {h.shape}, theta has {theta.size} entries")
    grad = h @ theta
    return float(0.5 * theta @ grad), grad


def eval_logistic(x, y, w) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy with logits ``x @ w`` and labels in {0, 1}."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    w = np.asarray(w, dtype=np.float64)
    w_col = w.reshape(-1, 1)
    if x.shape[1] != w_col.shape[0] or x.shape[0] != y.size:
        raise DimensionMismatchError(
            f"x {x.shape}, y {y.shape}, w {w.shape} are inconsistent"
        )
    z = (x @ w_col).reshape(-1)
    # log(1 + exp(z)) - y z, computed stably
    loss = float(np.mean(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y * z))
    sigma = 1.0 / (1.0 + np.exp(-z))
    grad = (x.T @ (sigma - y) / y.size).reshape(w.shape)
    return loss, grad


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def eval_mlp(params, x, y) -> tuple[float, list[np.ndarray]]:
    """Two-layer tanh classifier: mean cross-entropy and manual backprop.

    params = [w1 (d, h), b1 (h,), w2 (h, c), b2 (c,)]; labels are class
    indices.
    """
    w1, b1, w2, b2 = [np.asarray(p, dtype=np.float64) for p in params]
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    n = x.shape[0]
    if (
        x.shape[1] != w1.shape[0]
        or w1.shape[1] != b1.shape[0]
        or w2.shape[0] != w1.shape[1]
        or w2.shape[1] != b2.shape[0]
        or y.size != n
    ):
        raise ShapeMismatchError("mlp parameter shapes are inconsistent")
    hidden = np.tanh(x @ w1 + b1)
    logits = hidden @ w2 + b2
    probs = _softmax(logits)
    loss = float(-np.mean(np.log(probs[np.arange(n), y])))
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    gw2 = hidden.T @ dlogits
    gb2 = dlogits.sum(axis=0)
    dhidden = (dlogits @ w2.T) * (1.0 - hidden**2)
    gw1 = x.T @ dhidden
    gb1 = dhidden.sum(axis=0)
    return loss, [gw1, gb1, gw2, gb2]


def quadratic_problem(
    h, param_shape: Optional[tuple[int, int]] = None, noise_std: float = 0.0
) -> Problem:
    """Quadratic bowl over a matrix-shaped parameter (column-stacked)."""
    h = np.asarray(h, dtype=np.float64)
    d = h.shape[0]
    if param_shape is None:
        param_shape = (d, 1)
    if param_shape[0] * param_shape[1] != d:
        raise DimensionMismatchError(f"param shape {param_shape} does not hold {d} entries")

    def loss_fn(params):
        return eval_quadratic(h, params[0].reshape(-1, order="F"))[0]

    def grad_fn(params):
        g = eval_quadratic(h, params[0].reshape(-1, order="F"))[1]
        return [g.reshape(param_shape, order="F")]

    noise = None
    if noise_std > 0:
        noise = [(noise_std * np.eye(param_shape[0]), np.eye(param_shape[1]))]
    return Problem(
        name="quadratic",
        parameter_shapes=[param_shape],
        loss_fn=loss_fn,
        grad_fn=grad_fn,
        noise=noise,
    )


def ill_conditioned_quadratic(dim: int, condition: float, seed: SeedLike) -> np.ndarray:
    """Random SPD matrix with log-spaced spectrum and given condition number."""
    rng = generator(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = np.logspace(0.0, np.log10(condition), dim) / condition
    return (q * eigs) @ q.T


def make_logistic_data(
    seed: SeedLike, n: int = 128, dim: int = 20, separable: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Two-class Gaussian blobs; ``separable`` pushes the means far apart."""
    rng = generator(seed)
    gap = 6.0 if separable else 1.0
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    y = (rng.uniform(size=n) < 0.5).astype(np.int64)
    x = rng.standard_normal((n, dim)) + gap * np.where(y[:, None] == 1, 1.0, -1.0) * direction
    return x, y


def make_correlated_logistic_data(
    seed: SeedLike, n: int = 256, dim: int = 30, condition: float = 1e3, gap: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Two-class blobs pushed through a rotated ill-conditioned mixing map.

    The mixing couples coordinates and spreads the curvature spectrum, so
    element-wise and matrix-structured adaptation have something to adapt
    to (axis-aligned rescaling alone would leave sign-based updates
    unaffected).
    """
    rng = generator(seed)
    y = (rng.uniform(size=n) < 0.5).astype(np.int64)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    z = rng.standard_normal((n, dim)) + gap * np.where(y[:, None] == 1, 1.0, -1.0) * direction
    q1, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    q2, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    mixing = q1 @ np.diag(np.logspace(-np.log10(condition), 0, dim)) @ q2
    return z @ mixing, y


def logistic_problem(x, y, noise_std: float = 0.0) -> Problem:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    d = x.shape[1]
    shape = (d, 1)

    def loss_fn(params):
        return eval_logistic(x, y, params[0])[0]

    def grad_fn(params):
        return [eval_logistic(x, y, params[0])[1]]

    noise = None
    if noise_std > 0:
        noise = [(noise_std * np.eye(d), np.eye(1))]
    return Problem(
        name="logistic",
        parameter_shapes=[shape],
        loss_fn=loss_fn,
        grad_fn=grad_fn,
        noise=noise,
        initial_params=[np.zeros(shape)],
    )


def make_mlp_data(
    seed: SeedLike, n: int = 64, dim: int = 6, classes: int = 3
) -> tuple[np.ndarray, np.ndarray]:
    rng = generator(seed)
    y = rng.integers(0, classes, size=n)
    centers = 2.0 * rng.standard_normal((classes, dim))
    x = centers[y] + rng.standard_normal((n, dim))
    return x, y


def mlp_problem(x, y, hidden: int = 8, classes: Optional[int] = None, noise_std: float = 0.0) -> Problem:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    if classes is None:
        classes = int(y.max()) + 1
    d = x.shape[1]
    shapes = [(d, hidden), (hidden,), (hidden, classes), (classes,)]

    def loss_fn(params):
        return eval_mlp(params, x, y)[0]

    def grad_fn(params):
        return eval_mlp(params, x, y)[1]

    noise = None
    if noise_std > 0:
        noise = []
        for s in shapes:
            rows = s[0]
            cols = s[1] if len(s) == 2 else 1
            noise.append((noise_std * np.eye(rows), np.eye(cols)))
    return Problem(
        name="mlp", parameter_shapes=shapes, loss_fn=loss_fn, grad_fn=grad_fn, noise=noise
    )


def save_dataset_csv(x, y, path) -> None:
    """Dump a features/labels dataset for inspection."""
    x = np.asarray(x)
    y = np.asarray(y).reshape(-1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(x.shape[1])] + ["y"])
        for row, label in zip(x, y):
            writer.writerow([f"{v:.17g}" for v in row] + [int(label)])


def finite_difference_grad(loss_fn, params, index: int, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of ``loss_fn`` w.r.t. one parameter."""
    params = [np.array(p, dtype=np.float64) for p in params]
    base = params[index]
    grad = np.zeros_like(base)
    it = np.nditer(base, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = base[idx]
        base[idx] = orig + h
        up = loss_fn(params)
        base[idx] = orig - h
        down = loss_fn(params)
        base[idx] = orig
        grad[idx] = (up - down) / (2 * h)
        it.iternext()
    return grad
