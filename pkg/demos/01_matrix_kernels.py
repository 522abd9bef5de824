"""Tour of the dense linear-algebra kernels.

Everything downstream is built from these: symmetric eigendecompositions,
stabilized inverse p-th roots, polar factors (exact and iterative), and the
Kronecker/vectorization identity that ties factored preconditioning to its
dense equivalent.
"""

import numpy as np

from kronopt import linalg

rng = np.random.default_rng(0)

print("== symmetric eigendecomposition ==")
a = rng.standard_normal((5, 5))
a = a + a.T
eig = linalg.sym_eig(a)
recon = (eig.eigenvectors * eig.eigenvalues) @ eig.eigenvectors.T
print("eigenvalues:", np.array2string(eig.eigenvalues, precision=3))
print("reconstruction residual:", np.linalg.norm(recon - a))

print("\n== stabilized inverse roots ==")
b = rng.standard_normal((4, 4))
spd = b @ b.T + 0.1 * np.eye(4)
half = linalg.stabilized_inverse_root(spd, 0.0, 0.5)
quarter = linalg.stabilized_inverse_root(spd, 0.0, 0.25)
print("||A^(-1/2) A A^(-1/2) - I|| =", np.linalg.norm(half @ spd @ half - np.eye(4)))
print("||(A^(-1/4))^2 - A^(-1/2)||  =", np.linalg.norm(quarter @ quarter - half))
print("damping shifts the spectrum: eps=1 turns the identity into",
      np.round(linalg.stabilized_inverse_root(np.eye(2), 1.0, 0.5)[0, 0], 6))

print("\n== polar factor: exact vs iterative ==")
g = rng.standard_normal((6, 4))
exact = linalg.polar_svd(g)
print("exact polar: singular values ->", np.round(linalg.svd(exact).singular_values, 6))
for steps in (1, 3, 5, 8):
    approx = linalg.polar_newton_schulz(g, steps=steps)
    print(f"newton-schulz {steps} steps: distance to exact = "
          f"{np.linalg.norm(approx - exact):.4f}, singular values in "
          f"[{linalg.svd(approx).singular_values.min():.3f}, "
          f"{linalg.svd(approx).singular_values.max():.3f}]")
print("the quintic oscillates singular values around 1 instead of converging;")
print("that is the price of a multiplication-only iteration.")

print("\n== nearest semi-orthogonal matrix ==")
dist_polar = np.linalg.norm(g - exact)
q, _ = np.linalg.qr(rng.standard_normal((6, 4)))
print(f"distance to polar factor {dist_polar:.4f} <= distance to a random "
      f"semi-orthogonal matrix {np.linalg.norm(g - q):.4f}")

print("\n== matrix norms ==")
norms = linalg.matrix_norms(g)
print(f"frobenius {norms.frobenius:.4f}  spectral {norms.spectral:.4f}  "
      f"nuclear {norms.nuclear:.4f}  rms->rms {norms.rms_rms:.4f}")

print("\n== vectorization identity ==")
left = rng.standard_normal((3, 3))
right = rng.standard_normal((4, 4))
x = rng.standard_normal((3, 4))
lhs = linalg.vec(left @ x @ right)
rhs = linalg.kron(right.T, left) @ linalg.vec(x)
print("||vec(L X R) - (R^T kron L) vec(X)|| =", np.linalg.norm(lhs - rhs))
