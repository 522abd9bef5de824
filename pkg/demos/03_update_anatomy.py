"""Anatomy of the adaptive updates.

The element-wise update splits into a magnitude in (0, 1] times a sign; the
two-sided matrix update splits the same way into left/right adaptation
matrices around the polar factor.  The last section plots the two optimal
element-wise scaling factors against the signal-to-noise ratio; they track
each other closely without being equal, so nothing is asserted about their
relationship.
"""

import numpy as np

from kronopt import linalg, optim, verify

rng = np.random.default_rng(3)

print("== element-wise: magnitude times sign ==")
m = rng.standard_normal(6)
v = m**2 + rng.uniform(0.05, 0.8, 6)
dec = optim.adam_decompose(m, v)
print("adaptation        ", np.round(dec.adaptation, 4))
print("relative-var form ", np.round(dec.relative_adaptation, 4))
print("sign              ", dec.sign)
print("product reproduces m/sqrt(v):",
      np.allclose(dec.adaptation * dec.sign, m / np.sqrt(v), atol=1e-12))

print("\n== matrix: left/right adaptation around the polar factor ==")
mat = rng.standard_normal((4, 4))
b = rng.standard_normal((4, 4))
left = b @ b.T + np.eye(4)
c = rng.standard_normal((4, 4))
right = c @ c.T + np.eye(4)
split = optim.shampoo_decompose(mat, left, right, p=0.5)
target = (
    linalg.stabilized_inverse_root(left, 0.0, 0.5)
    @ mat
    @ linalg.stabilized_inverse_root(right, 0.0, 0.5)
)
product = split.left_adaptation @ split.polar @ split.right_adaptation
print("reconstruction residual:", np.linalg.norm(product - target))
print("polar part singular values:", np.round(linalg.svd(split.polar).singular_values, 8))
print("with the factors equal to the update's own Gram roots, both")
print("adaptations collapse to the identity and only the polar part is left:")
dec_m = linalg.svd(mat)
gram_l = (dec_m.u * dec_m.singular_values) @ dec_m.u.T
gram_r = (dec_m.v * dec_m.singular_values) @ dec_m.v.T
collapsed = optim.shampoo_decompose(mat, gram_l, gram_r, p=0.5)
print("  ||left - I|| =", np.linalg.norm(collapsed.left_adaptation - np.eye(4)))

print("\n== the two optimal element-wise scalings, plotted ==")
# gradient-matching scaling mu^2/(mu^2+s^2) vs sign-matching 2*Phi(|mu|/s)-1:
# they track each other empirically; the plot shows both without asserting
# any identity between them.
import math

import matplotlib

matplotlib.use("svg")
matplotlib.rcParams["svg.hashsalt"] = "kronopt"
import matplotlib.pyplot as plt

snr = np.linspace(0.01, 4.0, 200)
grad_matching = snr**2 / (snr**2 + 1.0)
sign_matching = np.array([2 * (0.5 * (1 + math.erf(r / math.sqrt(2)))) - 1 for r in snr])
fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot(snr, grad_matching, label="gradient-matching scaling")
ax.plot(snr, sign_matching, label="sign-matching scaling")
ax.set_xlabel("|mean| / stddev")
ax.set_ylabel("optimal scaling")
ax.legend()
fig.tight_layout()
fig.savefig("demo_adaptation_factors.svg", metadata={"Date": None})
plt.close(fig)
print("wrote demo_adaptation_factors.svg")
print("closed forms checked against grid minimizers:")
print(" ", verify.oracle_prop1([1.0, 0.5], [1.0, 1.0]).details,
      "->", verify.oracle_prop1([1.0, 0.5], [1.0, 1.0]).passed)
