"""Coupled factor dynamics and whitening fixed points.

On a fixed gradient, the mutually whitened factor iteration converges to
the gradient's symmetric polar parts, so preconditioning with the inverse
square roots reproduces the polar factor even though the exponent is 1/2.
Per singular value the iteration is a damped square-root recursion that
becomes Newton's method at EMA rate 1/2.
"""

import numpy as np

from kronopt import linalg, precond, verify
from kronopt.precond import PreconditionerKind
from kronopt.problems import MatrixGaussianModel

rng = np.random.default_rng(4)

print("== per-singular-value recursion (Newton at rate 1/2) ==")
xs = verify.scalar_kl_recursion(sigma=2.0, beta2=0.5, x0=1.0, iters=6)
for t, x in enumerate(xs):
    print(f"  t={t}: x = {x:.15f}  (|x - 2| = {abs(x - 2):.2e})")

print("\n== matrix iteration on a fixed gradient ==")
g = rng.standard_normal((4, 4))
state = precond.init_kl_state(4, 4, epsilon=0.0, init_scale=1.0)
polar = linalg.polar_svd(g)
for t in range(1, 41):
    state = precond.kl_factor_update(state, g, beta2=0.5, epsilon=0.0)
    if t in (1, 2, 5, 10, 20, 40):
        update = precond.precondition(
            PreconditionerKind.TWO_SIDED, state.factors, g, p=0.5, epsilon=0.0
        )
        print(f"  iter {t:3d}: ||update - polar|| = {np.linalg.norm(update - polar):.3e}")

print("\n== same-exponent update on fresh (uncoupled) factors ==")
pair = precond.shampoo_factor_update(precond.zero_factor_pair(4, 4), g, beta2=0.0)
fresh = precond.precondition(PreconditionerKind.TWO_SIDED, pair, g, p=0.5, epsilon=0.0)
print("  fresh factors at p=1/2 invert the spectrum instead:",
      "||update - pinv(G)^T|| =", f"{np.linalg.norm(fresh - linalg.pseudo_inverse(g).T):.2e}")
pair_quarter = precond.precondition(PreconditionerKind.TWO_SIDED, pair, g, p=0.25, epsilon=0.0)
print("  fresh factors at p=1/4 recover the polar factor:     ",
      "||update - polar||    =", f"{np.linalg.norm(pair_quarter - polar):.2e}")

print("\n== whitening fixed points from analytic moments ==")
a = rng.standard_normal((4, 4))
model = MatrixGaussianModel(
    mean=rng.standard_normal((4, 4)),
    row_cov_sqrt=0.4 * (a @ a.T / 4 + np.eye(4)),
    col_cov_sqrt=0.5 * np.eye(4),
)
report = verify.check_whitening(model)
print(" ", report.check_name, "->", "PASS" if report.passed else "FAIL",
      f"(residual {report.max_error:.2e})")
rect = verify.check_whitening(MatrixGaussianModel(
    mean=rng.standard_normal((3, 5)),
    row_cov_sqrt=0.5 * np.eye(3),
    col_cov_sqrt=0.5 * np.eye(5),
))
print(" ", rect.check_name, "->", "PASS" if rect.passed else "FAIL")
print("   note:", rect.details)

print("\n== time-averaged conditions over a model sequence ==")
models = []
for noise in (0.3, 0.6):
    b = rng.standard_normal((4, 4))
    models.append(MatrixGaussianModel(
        mean=rng.standard_normal((4, 4)),
        row_cov_sqrt=noise * (b @ b.T / 4 + np.eye(4)) / 2,
        col_cov_sqrt=noise * np.eye(4),
    ))
report, a_map, b_map = verify.solve_idealized_kl(models, beta2=0.5)
print(" ", report.check_name, "->", "PASS" if report.passed else "FAIL",
      f"(residual {report.max_error:.2e}, {report.details})")
