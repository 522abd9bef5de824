"""Executable verification oracles.

Every check here compares a closed form against an independent computation:
a grid search over an analytically evaluated objective, a convex descent, a
fixed-point solve, or a dense Kronecker construction.  Expectations use the
matrix-Gaussian closed-form moments (themselves validated against Monte
Carlo in the test suite), which turns probabilistic claims into
deterministic numeric checks.

Each check accepts a ``perturb`` multiplier applied to its closed-form side;
``perturb=1.05`` must make the check fail (mutation sanity), which guards
against vacuous comparisons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, optim, precond
from .errors import DimensionMismatchError, OptimizerDidNotConvergeError, RankDeficientError
from .optim import OptimizerSpec
from .precond import PreconditionerKind
from .problems import MatrixGaussianModel, matrix_gaussian_moments


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    passed: bool
    max_error: float
    tolerance: float
    details: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.check_name,
            "passed": bool(self.passed),
            "max_error": float(self.max_error),
            "tolerance": float(self.tolerance),
            "details": self.details,
        }


def _report(name: str, max_error: float, tolerance: float, details: str = "") -> VerificationReport:
    max_error = float(max_error)
    return VerificationReport(
        check_name=name,
        passed=bool(max_error <= tolerance),
        max_error=max_error,
        tolerance=float(tolerance),
        details=details,
    )


def _psd_power(a, p: float) -> np.ndarray:
    """Spectral power of a PSD matrix; negative powers use pseudoinverse cutoffs."""
    a = np.asarray(a, dtype=np.float64)
    w, q = np.linalg.eigh(0.5 * (a + a.T))
    w = np.maximum(w, 0.0)
    if p < 0:
        cutoff = 1e-12 * a.shape[0] * w.max(initial=0.0)
        wp = np.where(w > cutoff, np.where(w > 0, w, 1.0) ** p, 0.0)
    else:
        wp = w**p
    out = (q * wp) @ q.T
    return 0.5 * (out + out.T)


def _normal_cdf(x: float) -> float:
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _grid_parabola_min(objective, lo: float, hi: float, points: int = 4001) -> float:
    """Argmin of a 1D objective: grid scan plus one parabolic refinement.

    Exact (to round-off) for quadratics, which is all the propositions need;
    the refinement never consults any derivative formula, so it stays
    independent of the closed forms it is used to check.
    """
    xs = np.linspace(lo, hi, points)
    ys = objective(xs)
    i = int(np.argmin(ys))
    if i == 0 or i == len(xs) - 1:
        return float(xs[i])
    x0, x1, x2 = xs[i - 1], xs[i], xs[i + 1]
    y0, y1, y2 = ys[i - 1], ys[i], ys[i + 1]
    denom = (y0 - 2 * y1 + y2)
    if denom <= 0:
        return float(x1)
    return float(x1 + 0.5 * (y0 - y2) / denom * (x1 - x0))


# ---------------------------------------------------------------------------
# variance-adaptation propositions


def oracle_prop1(mean, sigma, perturb: float = 1.0) -> VerificationReport:
    """Optimal element-wise scalings under per-coordinate Gaussian noise.

    Two closed forms are checked per coordinate against grid minimization of
    the analytic objectives: the gradient-matching scaling
    mu^2 / (mu^2 + sigma^2), and the sign-matching scaling
    2 Phi(|mu| / sigma) - 1.
    """
    mean = np.asarray(mean, dtype=np.float64).reshape(-1)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    errors = []
    for mu, sd in zip(mean, sigma):
        second = mu**2 + sd**2
        closed_grad = perturb * (mu**2 / second)
        # E[(gamma g - mu)^2] = gamma^2 E[g^2] - 2 gamma mu^2 + mu^2
        argmin = _grid_parabola_min(
            lambda g: g**2 * second - 2 * g * mu**2 + mu**2, -0.25, 1.5
        )
        errors.append(abs(closed_grad - argmin))
        # E[(gamma sign(g) - sign(mu))^2] = gamma^2 - 2 gamma s + 1 with
        # s = sign(mu) E[sign(g)]
        ratio = math.inf if sd == 0 else abs(mu) / sd
        closed_sign = perturb * (2.0 * _normal_cdf(ratio) - 1.0)
        mean_sign = np.sign(mu) * (2.0 * _normal_cdf(mu / sd if sd > 0 else math.copysign(math.inf, mu)) - 1.0)
        argmin = _grid_parabola_min(lambda g: g**2 - 2 * g * mean_sign + 1.0, -0.25, 1.5)
        errors.append(abs(closed_sign - argmin))
    return _report(
        "prop1_variance_adaptation",
        max(errors),
        1e-3,
        f"{len(mean)} coordinates, gradient- and sign-matching scalings",
    )


def oracle_prop2(mean, sigma, perturb: float = 1.0) -> VerificationReport:
    """Optimal scaling of the raw gradient toward the sign of the mean:
    |mu| / E[g^2], checked against grid minimization."""
    mean = np.asarray(mean, dtype=np.float64).reshape(-1)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    errors = []
    for mu, sd in zip(mean, sigma):
        second = mu**2 + sd**2
        closed = perturb * abs(mu) / second
        hi = max(1.5, 1.5 * abs(mu) / second)
        # E[(gamma g - sign(mu))^2] = gamma^2 E[g^2] - 2 gamma |mu| + 1
        argmin = _grid_parabola_min(
            lambda g: g**2 * second - 2 * g * abs(mu) + 1.0, -0.25, hi
        )
        errors.append(abs(closed - argmin))
    return _report(
        "prop2_sign_target_adaptation", max(errors), 1e-3, f"{len(mean)} coordinates"
    )


def prop3_closed_form(model: MatrixGaussianModel) -> np.ndarray:
    """(mean mean^T)^(1/2) E[G G^T]^(-1), the optimal left adaptation map."""
    second = matrix_gaussian_moments(model, np.eye(model.shape[1]), "row")
    return _psd_power(model.mean @ model.mean.T, 0.5) @ _psd_power(second, -1.0)


def oracle_prop3(
    model: MatrixGaussianModel,
    perturb: float = 1.0,
    tolerance: float = 1e-4,
    max_iters: int = 200_000,
) -> VerificationReport:
    """Left adaptation map: closed form vs convex descent on the expected
    distance to the polar factor of the mean.

    The objective E[||A G - U V^T||_F^2] expands to
    Tr(A S A^T) - 2 Tr(A^T (mean mean^T)^(1/2)) + k with S = E[G G^T], which
    descent minimizes with the fixed step 1 / (2 lambda_max(S)).
    """
    m, n = model.shape
    mean_rank = np.linalg.matrix_rank(model.mean)
    if mean_rank < m:
        raise RankDeficientError("the model mean must have full row rank")
    second = matrix_gaussian_moments(model, np.eye(n), "row")
    half = _psd_power(model.mean @ model.mean.T, 0.5)
    step_size = 1.0 / (2.0 * np.linalg.eigvalsh(second).max())
    a = np.zeros((m, m))
    scale = np.linalg.norm(half)
    for i in range(max_iters):
        grad = 2.0 * (a @ second - half)
        a = a - step_size * grad
        if np.linalg.norm(grad) <= 1e-13 * max(1.0, scale):
            break
    else:
        raise OptimizerDidNotConvergeError(
            f"descent did not converge in {max_iters} iterations"
        )
    closed = perturb * prop3_closed_form(model)
    err = np.linalg.norm(a - closed) / max(np.linalg.norm(closed), 1e-300)
    return _report(
        "prop3_left_adaptation",
        err,
        tolerance,
        f"converged in {i + 1} descent iterations",
    )


# ---------------------------------------------------------------------------
# whitening and time-averaged orthogonality


def _row_moment(model, b_sq, centered):
    if centered:
        return np.trace(b_sq @ model.col_cov) * model.row_cov
    return matrix_gaussian_moments(model, b_sq, "row")


def _col_moment(model, a_sq, centered):
    if centered:
        return np.trace(a_sq @ model.row_cov) * model.col_cov
    return matrix_gaussian_moments(model, a_sq, "col")


def check_whitening(
    model: MatrixGaussianModel,
    max_iters: int = 500,
    centered: bool = True,
    perturb: float = 1.0,
) -> VerificationReport:
    """Two-sided whitening maps via alternating fixed point on analytic moments.

    Square shapes admit an exact pair (up to a scalar gauge): alternate
    A <- Cov_row(G B)^(-1/2), B <- Cov_col(A G)^(-1/2) and require both
    post-transform covariances to be the identity.  Rectangular shapes
    cannot satisfy both identity conditions (their traces disagree), so the
    check instead solves the coupled pair L = E[G R^-1 G^T],
    R = E[G^T L^-1 G], fixes the scalar gauge by tr(L)/m = tr(R)/n, and
    verifies that fixed point.
    """
    m, n = model.shape
    if m == n:
        a = np.eye(m)
        b = np.eye(n)
        for _ in range(max_iters):
            a = _psd_power(_row_moment(model, b @ b, centered), -0.5)
            b = _psd_power(_col_moment(model, a @ a, centered), -0.5)
            row_resid = np.linalg.norm(a @ _row_moment(model, b @ b, centered) @ a.T - np.eye(m))
            col_resid = np.linalg.norm(b @ _col_moment(model, a @ a, centered) @ b.T - np.eye(n))
            if max(row_resid, col_resid) < 1e-10:
                break
        a = perturb * a
        b = perturb * b
        row_resid = np.linalg.norm(a @ _row_moment(model, b @ b, centered) @ a.T - np.eye(m))
        col_resid = np.linalg.norm(b @ _col_moment(model, a @ a, centered) @ b.T - np.eye(n))
        return _report(
            "whitening_square",
            max(row_resid, col_resid),
            1e-8,
            f"{'centered' if centered else 'uncentered'} covariance, exact pair",
        )

    # Rectangular: the exact identity pair is infeasible, and so is the
    # unscaled coupled pair L = E[G R^-1 G^T], R = E[G^T L^-1 G] (taking
    # traces forces m = n in both).  The divergence-minimizing stationarity
    # carries dimension factors, L = E[G R^-1 G^T] / n and
    # R = E[G^T L^-1 G] / m, which is satisfiable up to the (c L, R / c)
    # gauge; that is what the flip-flop solves and verifies here.
    left = np.eye(m)
    right = np.eye(n)

    def residuals(lt, rt):
        resid_l = np.linalg.norm(
            lt - matrix_gaussian_moments(model, _psd_power(rt, -1.0), "row") / n
        ) / np.linalg.norm(lt)
        resid_r = np.linalg.norm(
            rt - matrix_gaussian_moments(model, _psd_power(lt, -1.0), "col") / m
        ) / np.linalg.norm(rt)
        return resid_l, resid_r

    for _ in range(max_iters):
        left = matrix_gaussian_moments(model, _psd_power(right, -1.0), "row") / n
        right = matrix_gaussian_moments(model, _psd_power(left, -1.0), "col") / m
        gauge = math.sqrt((np.trace(right) * m) / (np.trace(left) * n))
        left, right = gauge * left, right / gauge
        if max(residuals(left, right)) < 1e-9:
            break
    resid_l, resid_r = residuals(perturb * left, right)
    return _report(
        "whitening_rectangular",
        max(resid_l, resid_r),
        1e-6,
        "exact identity pair infeasible for m != n (trace conditions conflict), "
        "and the unscaled coupled pair inherits the same obstruction; verified "
        "the gauge-fixed dimension-scaled fixed point instead",
    )


def _ema_weights(count: int, beta2: float) -> np.ndarray:
    """Normalized EMA weights over a length-``count`` window (latest last)."""
    w = (1.0 - beta2) * beta2 ** np.arange(count - 1, -1, -1, dtype=np.float64)
    if beta2 == 0.0:
        w = np.zeros(count)
        w[-1] = 1.0
        return w
    return w / w.sum()


def solve_idealized_kl(
    models: list[MatrixGaussianModel],
    beta2: float,
    max_iters: int = 500,
    perturb: float = 1.0,
) -> tuple[VerificationReport, np.ndarray, np.ndarray]:
    """Fixed point of the time-averaged expected-orthogonality conditions.

    Alternates A <- EMA_t(E[G_t B^2 G_t^T])^(-1/2) and the transposed
    analogue over the model sequence, gauge-fixes the scalar family, and
    verifies both identity conditions.  Requires square shapes; see
    ``check_whitening`` for why rectangular shapes are excluded.
    """
    shapes = {model.shape for model in models}
    if len(shapes) != 1:
        raise DimensionMismatchError("all models must share one shape")
    m, n = shapes.pop()
    if m != n:
        raise DimensionMismatchError(
            "the exact identity pair needs square shapes (trace conditions conflict)"
        )
    w = _ema_weights(len(models), beta2)
    a = np.eye(m)
    b = np.eye(n)

    def row_avg(b_sq):
        return sum(wt * matrix_gaussian_moments(md, b_sq, "row") for wt, md in zip(w, models))

    def col_avg(a_sq):
        return sum(wt * matrix_gaussian_moments(md, a_sq, "col") for wt, md in zip(w, models))

    for i in range(max_iters):
        a = _psd_power(row_avg(b @ b), -0.5)
        b = _psd_power(col_avg(a @ a), -0.5)
        gauge = (np.trace(b @ b) * m / (np.trace(a @ a) * n)) ** 0.25
        a, b = gauge * a, b / gauge
        row_resid = np.linalg.norm(a @ row_avg(b @ b) @ a.T - np.eye(m))
        col_resid = np.linalg.norm(b @ col_avg(a @ a) @ b.T - np.eye(n))
        if max(row_resid, col_resid) < 1e-8:
            break
    a_chk = perturb * a
    b_chk = perturb * b
    row_resid = np.linalg.norm(a_chk @ row_avg(b_chk @ b_chk) @ a_chk.T - np.eye(m))
    col_resid = np.linalg.norm(b_chk @ col_avg(a_chk @ a_chk) @ b_chk.T - np.eye(n))
    report = _report(
        "idealized_kl_fixed_point",
        max(row_resid, col_resid),
        1e-6,
        f"{len(models)} model(s), beta2={beta2}, {i + 1} alternations",
    )
    return report, a, b


def scalar_kl_recursion(sigma: float, beta2: float, x0: float, iters: int) -> list[float]:
    """x <- beta2 * x + (1 - beta2) * sigma^2 / x, the per-singular-value
    dynamics of the coupled factor iteration on a fixed gradient."""
    xs = [x0]
    for _ in range(iters):
        xs.append(beta2 * xs[-1] + (1.0 - beta2) * sigma**2 / xs[-1])
    return xs


def instantaneous_kl(
    g,
    beta2: float = 0.5,
    c0: float = 1.0,
    iters: int = 200,
    perturb: float = 1.0,
) -> VerificationReport:
    """Coupled factor iteration on one fixed gradient converges to its polar
    factor; the per-singular-value recursion is Newton's square-root method
    at beta2 = 1/2.

    Reports a normalized error (tolerance 1), the max of
    matrix residual / 1e-8 and worst scalar residual / 1e-12.

    For rank-deficient (e.g. rectangular) gradients the factor eigenvalue on
    the null space decays geometrically through the pseudoinverse cutoff and
    briefly amplifies round-off into the factors (~sqrt(machine eps)); start
    with ``c0`` below the cutoff to keep the null space excluded throughout.
    """
    g = np.asarray(g, dtype=np.float64)
    m, n = g.shape
    left = c0 * np.eye(m)
    right = c0 * np.eye(n)
    for _ in range(iters):
        left_new = beta2 * left + (1.0 - beta2) * g @ _psd_power(right, -1.0) @ g.T
        right_new = beta2 * right + (1.0 - beta2) * g.T @ _psd_power(left, -1.0) @ g
        left, right = left_new, right_new
    update = _psd_power(left, -0.5) @ g @ _psd_power(right, -0.5)
    matrix_resid = np.linalg.norm(update - perturb * linalg.polar_svd(g))

    # Newton regime: 8 applications reach 1e-12 from anywhere in [s/10, 10s]
    scalar_resid = 0.0
    for sigma in (0.5, 2.0):
        for x0 in np.linspace(sigma / 10.0, 10.0 * sigma, 21):
            xs = scalar_kl_recursion(sigma, 0.5, x0, 8)
            scalar_resid = max(scalar_resid, abs(xs[-1] - perturb * sigma))
    # plain (non-Newton) EMA rates still converge, just linearly
    linear_resid = 0.0
    for b2 in (0.3, 0.8):
        xs = scalar_kl_recursion(2.0, b2, 0.3, 400)
        linear_resid = max(linear_resid, abs(xs[-1] - perturb * 2.0))
    max_error = max(matrix_resid / 1e-8, scalar_resid / 1e-12, linear_resid / 1e-10)
    return _report(
        "instantaneous_kl",
        max_error,
        1.0,
        f"matrix residual {matrix_resid:.3e} (tol 1e-8), scalar residual "
        f"{scalar_resid:.3e} (tol 1e-12), linear-rate residual {linear_resid:.3e}",
    )


# ---------------------------------------------------------------------------
# update identities


def check_exponent_paradox(g, perturb: float = 1.0) -> VerificationReport:
    """Fresh factors with exponent 1/2 invert the singular values: the update
    is U diag(1/s) V^T, the transposed pseudoinverse, not the polar factor."""
    g = np.asarray(g, dtype=np.float64)
    dec = linalg.svd(g)
    s = dec.singular_values
    if s.min() <= 1e-12 * max(g.shape) * s.max():
        raise RankDeficientError("g must have full rank")
    pair = precond.shampoo_factor_update(
        precond.zero_factor_pair(*g.shape), g, beta2=0.0
    )
    update = precond.precondition(PreconditionerKind.TWO_SIDED, pair, g, 0.5, 0.0)
    reference = perturb * (dec.u * (1.0 / s)) @ dec.v.T
    err = np.linalg.norm(update - reference)
    also = np.linalg.norm(update - perturb * linalg.pseudo_inverse(g).T)
    return _report(
        "exponent_paradox",
        max(err, also),
        1e-8,
        "exponent 1/2 with fresh factors recovers the transposed pseudoinverse",
    )


def check_kron_equivalence(
    left, right, m, p: float, epsilon: float, perturb: float = 1.0
) -> VerificationReport:
    """Factored preconditioning equals the dense Kronecker-product route,
    with the damping folded as (R + eps I) kron (L + eps I)."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (left.shape[0], right.shape[0]):
        raise DimensionMismatchError(
            f"m has shape {m.shape}, factors give {(left.shape[0], right.shape[0])}"
        )
    pair = precond.FactorPair(left=left, right=right)
    direct = precond.precondition(PreconditionerKind.TWO_SIDED, pair, m, p, epsilon)
    big = linalg.kron(
        right + epsilon * np.eye(right.shape[0]), left + epsilon * np.eye(left.shape[0])
    )
    vec_side = _psd_power(big, -p) @ linalg.vec(m)
    err = np.linalg.norm(linalg.vec(direct) - perturb * vec_side)
    return _report(
        "kron_equivalence", err, 1e-10, f"p={p}, epsilon={epsilon}, shape {m.shape}"
    )


def check_adapted_norm_descent(
    model: MatrixGaussianModel,
    alternatives: int = 100,
    seed: int = 0,
    perturb: float = 1.0,
) -> VerificationReport:
    """The stochastically adapted sign and spectral descent directions.

    Element-wise: d = -g / sqrt(E[g^2]) satisfies E[d_ij^2] = 1; matrix:
    D = -E[G G^T]^(-1/2) G satisfies E[D D^T] = I.  Optimality: no random
    feasible alternative (rescaled onto the constraint boundary) attains a
    lower expected linearized loss.
    """
    rng = np.random.default_rng(seed)
    m, n = model.shape
    # element-wise second moments via the contracted-moment route, which is
    # independent of the element-wise formula used to build the update
    second = np.empty((m, n))
    for j in range(n):
        basis = np.zeros((n, n))
        basis[j, j] = 1.0
        second[:, j] = np.diag(matrix_gaussian_moments(model, basis, "row"))
    scale = perturb / np.sqrt(second)  # d = -scale * g
    coord_identity_err = np.max(np.abs(scale**2 * second - 1.0))
    # optimal expected linearized loss per coordinate: -sqrt(E[g^2])
    opt_coord_loss = -(scale * second).sum()
    worst_violation = 0.0
    for _ in range(alternatives):
        c1 = rng.standard_normal((m, n))
        c0 = rng.standard_normal((m, n))
        # normalize each coordinate onto E[d^2] = 1:
        # E[(c1 g + c0)^2] = c1^2 E[g^2] + 2 c1 c0 mean + c0^2
        norm = np.sqrt(c1**2 * second + 2 * c1 * c0 * model.mean + c0**2)
        c1n, c0n = c1 / norm, c0 / norm
        # E[g d] with d = -(c1 g + c0): -(c1 E[g^2] + c0 mean)
        alt_loss = -(c1n * second + c0n * model.mean).sum()
        worst_violation = max(worst_violation, opt_coord_loss - alt_loss)

    row_second = matrix_gaussian_moments(model, np.eye(n), "row")
    whitener = perturb * _psd_power(row_second, -0.5)  # D = -whitener @ G
    matrix_identity_err = np.linalg.norm(whitener @ row_second @ whitener.T - np.eye(m))
    opt_matrix_loss = -np.trace(whitener @ row_second)
    for _ in range(alternatives):
        w = rng.standard_normal((m, m))
        gram = w @ row_second @ w.T
        w = w / np.sqrt(np.linalg.eigvalsh(gram).max())  # E[D D^T] <= I, tight
        alt_loss = -np.trace(w @ row_second)
        worst_violation = max(worst_violation, opt_matrix_loss - alt_loss)

    max_error = max(coord_identity_err, matrix_identity_err, worst_violation)
    return _report(
        "adapted_norm_descent",
        max_error,
        1e-6,
        f"identity residuals (coord {coord_identity_err:.2e}, matrix "
        f"{matrix_identity_err:.2e}); {alternatives} alternatives per geometry, "
        f"worst improvement over the boxed updates {worst_violation:.2e}",
    )


# ---------------------------------------------------------------------------
# the optimizer-equivalence grid


def _update_sequence(spec: OptimizerSpec, grads, lr: float):
    state = optim.init_state(spec, grads[0].shape)
    theta = np.zeros(grads[0].shape)
    updates = []
    for g in grads:
        theta_new, state = optim.step(spec, state, theta, g, lr)
        updates.append(theta_new - theta)
        theta = theta_new
    return updates


def _reference_ema_updates(grads, direction_fn, beta3, lr):
    buf = np.zeros(grads[0].shape)
    updates = []
    for t, g in enumerate(grads, start=1):
        buf = beta3 * buf + (1.0 - beta3) * direction_fn(g)
        updates.append(-lr * buf / (1.0 - beta3**t))
    return updates


def table1_pairs(stream_seed: int = 0, steps: int = 100, lr: float = 0.01):
    """The equivalence grid as (name, updates_a, updates_b) triples."""
    rng = np.random.default_rng(stream_seed)
    vec_grads = [rng.standard_normal(6) for _ in range(steps)]
    mat_grads = [rng.standard_normal((5, 4)) for _ in range(steps)]

    pairs = []
    pairs.append(
        (
            "adam(b1=b2=0,eps=0) == signgd",
            _update_sequence(OptimizerSpec("adam", epsilon=0.0), vec_grads, lr),
            _update_sequence(OptimizerSpec("signgd"), vec_grads, lr),
        )
    )
    pairs.append(
        (
            "adam(b1=0) == rmsprop",
            _update_sequence(OptimizerSpec("adam", beta2=0.9, epsilon=1e-8), vec_grads, lr),
            _update_sequence(OptimizerSpec("rmsprop", beta2=0.9, epsilon=1e-8), vec_grads, lr),
        )
    )
    pairs.append(
        (
            "laprop(b2=0,b3>0) == ema-of-sign",
            _update_sequence(
                OptimizerSpec("adam", wiring="laprop", beta3=0.8, epsilon=0.0),
                vec_grads,
                lr,
            ),
            _reference_ema_updates(vec_grads, np.sign, 0.8, lr),
        )
    )
    pairs.append(
        (
            "bcosm shampoo^1/4(b2=0) == muon(svd)",
            _update_sequence(
                OptimizerSpec(
                    "shampoo", p=0.25, wiring="bcosm", beta1=0.9, epsilon=0.0
                ),
                mat_grads,
                lr,
            ),
            _update_sequence(OptimizerSpec("muon_svd", beta1=0.9), mat_grads, lr),
        )
    )
    pairs.append(
        (
            "laprop shampoo^1/4(b2=0,b3=0) == spectralgd",
            _update_sequence(
                OptimizerSpec("shampoo", p=0.25, wiring="laprop", epsilon=0.0),
                mat_grads,
                lr,
            ),
            _update_sequence(OptimizerSpec("spectralgd"), mat_grads, lr),
        )
    )
    pairs.append(
        (
            "bcosm shampoo(b1=0) == shampoo w/o momentum",
            _update_sequence(
                OptimizerSpec("shampoo", beta2=0.9, wiring="bcosm", epsilon=1e-12),
                mat_grads,
                lr,
            ),
            _update_sequence(
                OptimizerSpec("shampoo", beta2=0.9, epsilon=1e-12), mat_grads, lr
            ),
        )
    )
    pairs.append(
        (
            "laprop shampoo^1/4(b2=0,b3>0) == ema-of-polar",
            _update_sequence(
                OptimizerSpec(
                    "shampoo", p=0.25, wiring="laprop", beta3=0.9, epsilon=0.0
                ),
                mat_grads,
                lr,
            ),
            _reference_ema_updates(mat_grads, linalg.polar_svd, 0.9, lr),
        )
    )
    return pairs


def check_table1_equivalences(
    stream_seed: int = 0, steps: int = 100, perturb: float = 1.0
) -> VerificationReport:
    """Per-step agreement of the hyperparameter-limit equivalences on one
    shared seeded gradient stream."""
    deviations = []
    for name, ups_a, ups_b in table1_pairs(stream_seed, steps):
        worst = max(
            np.max(np.abs(a - perturb * b)) for a, b in zip(ups_a, ups_b)
        )
        deviations.append((name, worst))
    tolerance = 1e-12
    failing = [name for name, dev in deviations if dev > tolerance]
    detail = "; ".join(f"{name}: {dev:.2e}" for name, dev in deviations)
    if failing:
        detail = f"mismatching cells: {failing}; " + detail
    return _report(
        "table1_equivalences", max(dev for _, dev in deviations), tolerance, detail
    )


# ---------------------------------------------------------------------------
# suites


def linalg_suite(seed: int = 0):
    """Kernel invariants as verification reports (yields one at a time)."""
    rng = np.random.default_rng(seed)

    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 9))
        a = rng.standard_normal((n, n))
        a = a + a.T
        eig = linalg.sym_eig(a)
        q, w = eig.eigenvectors, eig.eigenvalues
        worst = max(
            worst,
            np.linalg.norm((q * w) @ q.T - a) / max(1.0, np.linalg.norm(a)),
            np.linalg.norm(q.T @ q - np.eye(n)),
        )
    yield _report("symmetric_eigendecomposition", worst, 1e-10, "20 random instances")

    worst = 0.0
    for _ in range(20):
        m, n = int(rng.integers(2, 8)), int(rng.integers(2, 8))
        a = rng.standard_normal((m, n))
        dec = linalg.svd(a)
        worst = max(
            worst,
            np.linalg.norm((dec.u * dec.singular_values) @ dec.v.T - a)
            / max(1.0, np.linalg.norm(a)),
        )
    yield _report("svd_reconstruction", worst, 1e-10, "20 random instances")

    worst = 0.0
    for _ in range(20):
        b = rng.standard_normal((5, 5))
        a = b @ b.T + 0.5 * np.eye(5)
        root = linalg.stabilized_inverse_root(a, 1e-8, 0.25)
        worst = max(
            worst,
            np.linalg.norm(a @ root - root @ a)
            / (np.linalg.norm(a) * np.linalg.norm(root)),
        )
    yield _report("inverse_root_commutes", worst, 1e-9, "relative commutator, 20 instances")

    worst = 0.0
    for _ in range(20):
        a = rng.standard_normal((5, 4))
        p = linalg.polar_svd(a)
        worst = max(worst, np.linalg.norm(linalg.polar_svd(p) - p))
        for _ in range(5):
            q, _ = np.linalg.qr(rng.standard_normal((5, 4)))
            if np.linalg.norm(a - p) > np.linalg.norm(a - q) + 1e-12:
                worst = max(worst, np.linalg.norm(a - p) - np.linalg.norm(a - q))
    yield _report("polar_idempotent_and_nearest", worst, 1e-10, "20 instances, 5 competitors each")

    worst = 0.0
    for _ in range(20):
        left = rng.standard_normal((3, 3))
        right = rng.standard_normal((4, 4))
        x = rng.standard_normal((3, 4))
        lhs = linalg.vec(left @ x @ right)
        rhs = linalg.kron(right.T, left) @ linalg.vec(x)
        worst = max(worst, np.linalg.norm(lhs - rhs))
    yield _report("kron_vec_identity", worst, 1e-12, "20 instances")


def _random_model(rng, m, n, noise=0.6) -> MatrixGaussianModel:
    mean = rng.standard_normal((m, n))
    a = rng.standard_normal((m, m))
    b = rng.standard_normal((n, n))
    return MatrixGaussianModel(
        mean=mean,
        row_cov_sqrt=noise * (a @ a.T / m + np.eye(m)) / 2,
        col_cov_sqrt=noise * (b @ b.T / n + np.eye(n)) / 2,
    )


def propositions_suite(seed: int = 0, perturb: float = 1.0):
    rng = np.random.default_rng(seed)
    mean = rng.standard_normal(8)
    sigma = rng.uniform(0.2, 2.0, 8)
    yield oracle_prop1(mean, sigma, perturb)
    yield oracle_prop2(mean, sigma, perturb)
    yield oracle_prop3(_random_model(rng, 3, 4), perturb)
    yield check_whitening(_random_model(rng, 4, 4), centered=True, perturb=perturb)
    yield check_whitening(_random_model(rng, 3, 5), perturb=perturb)
    models = [_random_model(rng, 4, 4, noise=0.5) for _ in range(2)]
    yield solve_idealized_kl(models, beta2=0.5, perturb=perturb)[0]
    yield instantaneous_kl(rng.standard_normal((4, 4)), perturb=perturb)
    yield check_exponent_paradox(rng.standard_normal((5, 3)), perturb)
    yield check_adapted_norm_descent(_random_model(rng, 3, 4), seed=seed, perturb=perturb)
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((4, 4))
    yield check_kron_equivalence(
        a @ a.T + np.eye(3),
        b @ b.T + np.eye(4),
        rng.standard_normal((3, 4)),
        p=0.25,
        epsilon=0.1,
        perturb=perturb,
    )


def table1_suite(seed: int = 0, perturb: float = 1.0):
    yield check_table1_equivalences(stream_seed=seed, perturb=perturb)


SUITES = {
    "linalg": linalg_suite,
    "propositions": propositions_suite,
    "table1": table1_suite,
}


def iter_suite(name: str, seed: int = 0):
    """Yield reports one at a time (lets callers time individual checks)."""
    if name == "all":
        for suite in SUITES.values():
            yield from suite(seed)
        return
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    yield from SUITES[name](seed)


def run_suite(name: str, seed: int = 0) -> list[VerificationReport]:
    return list(iter_suite(name, seed))


def summarize(reports: list[VerificationReport]) -> str:
    width = max(len(r.check_name) for r in reports)
    lines = []
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{r.check_name:<{width}}  {status}  max_error={r.max_error:.3e}  "
            f"tolerance={r.tolerance:.1e}"
        )
    n_pass = sum(r.passed for r in reports)
    lines.append(f"{n_pass}/{len(reports)} checks passed")
    return "\n".join(lines)


def reports_to_jsonl(reports: list[VerificationReport], timings=None) -> str:
    lines = []
    for i, r in enumerate(reports):
        record = r.to_dict()
        if timings is not None:
            record["seconds"] = timings[i]
        lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + "\n"
