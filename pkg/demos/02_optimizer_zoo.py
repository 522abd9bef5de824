"""The optimizer family and its hyperparameter-limit equivalences.

One meta-step drives every named method here; setting EMA rates to zero
collapses the adaptive methods onto their plain counterparts, and the
wiring variants move where the momentum EMA sits relative to the
preconditioner.
"""

import numpy as np

from kronopt import optim, problems
from kronopt.optim import OptimizerSpec

rng = np.random.default_rng(1)

print("== the zoo on one ill-conditioned quadratic ==")
h = problems.ill_conditioned_quadratic(24, 1e3, seed=2)
problem = problems.quadratic_problem(h, (6, 4))
theta0 = problem.init_params(seed=(2, 7))[0]

zoo = {
    "signgd": OptimizerSpec(family="signgd"),
    "signum": OptimizerSpec(family="signum", beta1=0.9),
    "rmsprop": OptimizerSpec(family="rmsprop", beta2=0.99),
    "adam": OptimizerSpec(family="adam", beta1=0.9, beta2=0.99),
    "spectralgd": OptimizerSpec(family="spectralgd"),
    "muon (svd)": OptimizerSpec(family="muon_svd", beta1=0.9),
    "muon (ns)": OptimizerSpec(family="muon_ns", beta1=0.9),
    "two-sided p=1/4": OptimizerSpec(family="shampoo", p=0.25, beta2=0.9),
    "two-sided p=1/2": OptimizerSpec(family="shampoo", p=0.5, beta2=0.9),
    # the coupling feeds epsilon into the factors themselves, so without a
    # magnitude transfer the raw update is badly scaled at this lr
    "coupled (kl)": OptimizerSpec(family="kl_shampoo", beta2=0.9, epsilon=1e-8),
    "coupled (kl, grafted)": OptimizerSpec(
        family="kl_shampoo", beta2=0.9, epsilon=1e-8,
        scaling="graft", graft=OptimizerSpec(family="rmsprop", beta2=0.99),
    ),
    "eig-corrected": OptimizerSpec(family="eshampoo", beta2=0.9, epsilon=1e-8),
    "one-sided right": OptimizerSpec(family="one_sided_r", beta2=0.9),
    "full-matrix": OptimizerSpec(family="full_matrix", beta2=0.99),
}
for name, spec in zoo.items():
    theta = theta0.copy()
    state = optim.init_state(spec, theta.shape)
    for t in range(150):
        g = problem.grad_at([theta])[0]
        theta, state = optim.step(spec, state, theta, g, lr=0.02)
    print(f"{name:18s} final loss {problem.loss_at([theta]):.6f}")

print("\n== limits collapse onto plain methods ==")
grads = [rng.standard_normal((5, 4)) for _ in range(30)]


def updates(spec):
    state = optim.init_state(spec, (5, 4))
    theta = np.zeros((5, 4))
    out = []
    for g in grads:
        new, state = optim.step(spec, state, theta, g, 0.01)
        out.append(new - theta)
        theta = new
    return out


pairs = [
    ("adam(b1=b2=0, eps=0)", OptimizerSpec("adam", epsilon=0.0), "signgd", OptimizerSpec("signgd")),
    (
        "bcosm two-sided p=1/4 (b2=0)",
        OptimizerSpec("shampoo", p=0.25, wiring="bcosm", beta1=0.9, epsilon=0.0),
        "muon (svd)",
        OptimizerSpec("muon_svd", beta1=0.9),
    ),
    (
        "laprop two-sided p=1/4 (b2=b3=0)",
        OptimizerSpec("shampoo", p=0.25, wiring="laprop", epsilon=0.0),
        "spectralgd",
        OptimizerSpec("spectralgd"),
    ),
]
for name_a, spec_a, name_b, spec_b in pairs:
    dev = max(np.abs(a - b).max() for a, b in zip(updates(spec_a), updates(spec_b)))
    print(f"{name_a:32s} == {name_b:12s} max per-step deviation {dev:.2e}")
