"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one pass/fail line (visible with ``pytest -s`` or in the
captured output of failures) and asserts the criterion.
"""

import time

import numpy as np
import pytest

from kronopt import cli, harness, linalg, optim, problems, verify
from kronopt.harness import RunConfig
from kronopt.optim import OptimizerSpec


def criterion(cid: str, name: str, passed: bool, detail: str = ""):
    line = f"[acceptance] {cid} {name}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert passed, line


def random_full_rank(rng, m, n, cond):
    k = min(m, n)
    u, _ = np.linalg.qr(rng.standard_normal((m, k)))
    v, _ = np.linalg.qr(rng.standard_normal((n, k)))
    s = np.exp(rng.uniform(np.log(1.0 / cond), 0.0, size=k))
    return (u * s) @ v.T


def shampoo_update(g, p, beta2=0.0, epsilon=0.0):
    spec = OptimizerSpec(family="shampoo", p=p, beta2=beta2, epsilon=epsilon)
    state = optim.init_state(spec, g.shape)
    theta = np.zeros(g.shape)
    theta_new, _ = optim.step(spec, state, theta, g, lr=1.0)
    return theta - theta_new


def test_c01_polar_identity_of_fresh_quarter_root():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(2, 17))
        n = int(rng.integers(2, 13))
        g = random_full_rank(rng, m, n, cond=1e3)
        update = shampoo_update(g, p=0.25)
        worst = max(worst, np.linalg.norm(update - linalg.polar_svd(g)))
    elapsed = time.perf_counter() - start
    criterion(
        "C01",
        "fresh quarter-root update equals the polar factor",
        worst <= 1e-8 and elapsed < 5.0,
        f"max residual {worst:.2e} over 50 shapes up to 16x12, {elapsed:.2f}s",
    )


def test_c02_three_part_decomposition_reconstructs():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(2, 9))
        mat = random_full_rank(rng, m, n, cond=100.0)
        b = rng.standard_normal((m, m))
        left = b @ b.T + 0.5 * np.eye(m)
        c = rng.standard_normal((n, n))
        right = c @ c.T + 0.5 * np.eye(n)
        for p in (0.25, 0.5):
            dec = optim.shampoo_decompose(mat, left, right, p)
            target = (
                linalg.stabilized_inverse_root(left, 0.0, p)
                @ mat
                @ linalg.stabilized_inverse_root(right, 0.0, p)
            )
            product = dec.left_adaptation @ dec.polar @ dec.right_adaptation
            worst = max(worst, np.linalg.norm(product - target) / np.linalg.norm(target))
    criterion(
        "C02",
        "adaptation-polar-adaptation product reconstructs the update",
        worst <= 1e-10,
        f"max relative residual {worst:.2e}, 50 instances, p in (1/4, 1/2)",
    )


def test_c03_coupled_iteration_convergence():
    worst_scalar = 0.0
    for sigma in (0.5, 2.0):
        for x0 in np.linspace(sigma / 10.0, 10.0 * sigma, 25):
            xs = verify.scalar_kl_recursion(sigma, beta2=0.5, x0=float(x0), iters=8)
            worst_scalar = max(worst_scalar, abs(xs[-1] - sigma))
    rng = np.random.default_rng(103)
    worst_matrix = 0.0
    for beta2 in (0.3, 0.5, 0.8):
        g = rng.standard_normal((4, 4))
        report = verify.instantaneous_kl(g, beta2=beta2, c0=1.0, iters=200)
        # normalized report: matrix part is max_error component times 1e-8
        worst_matrix = max(worst_matrix, report.max_error * 1e-8)
        assert report.passed, report.details
    criterion(
        "C03",
        "coupled factor iteration converges to the polar factor",
        worst_scalar <= 1e-12 and worst_matrix <= 1e-8,
        f"scalar residual {worst_scalar:.2e} within 8 Newton steps, "
        f"matrix residual {worst_matrix:.2e} within 200 iterations",
    )


def test_c04_optimal_adaptation_oracles():
    start = time.perf_counter()
    rng = np.random.default_rng(104)
    r1 = verify.oracle_prop1(rng.standard_normal(8), rng.uniform(0.2, 2.0, 8))
    r2 = verify.oracle_prop2(rng.standard_normal(8), rng.uniform(0.2, 2.0, 8))
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((4, 4))
    model = problems.MatrixGaussianModel(
        mean=rng.standard_normal((3, 4)),
        row_cov_sqrt=0.3 * (a @ a.T / 3 + np.eye(3)),
        col_cov_sqrt=0.3 * (b @ b.T / 4 + np.eye(4)),
    )
    r3 = verify.oracle_prop3(model, tolerance=1e-4)
    elapsed = time.perf_counter() - start
    criterion(
        "C04",
        "closed-form adaptation factors match independent minimizers",
        r1.passed and r2.passed and r3.passed and elapsed < 60.0,
        f"errors {r1.max_error:.1e} / {r2.max_error:.1e} (tol 1e-3), "
        f"{r3.max_error:.1e} (tol 1e-4), {elapsed:.1f}s",
    )


def test_c05_equivalence_grid():
    report = verify.check_table1_equivalences(stream_seed=0, steps=100)
    criterion(
        "C05",
        "optimizer-pair equivalences hold per step",
        report.passed and report.max_error <= 1e-12,
        f"max per-step deviation {report.max_error:.2e} over 100 steps",
    )


def test_c06_time_averaged_orthogonality_conditions():
    rng = np.random.default_rng(106)

    def model(m, n, noise):
        a = rng.standard_normal((m, m))
        b = rng.standard_normal((n, n))
        return problems.MatrixGaussianModel(
            mean=rng.standard_normal((m, n)),
            row_cov_sqrt=noise * (a @ a.T / m + np.eye(m)) / 2,
            col_cov_sqrt=noise * (b @ b.T / n + np.eye(n)) / 2,
        )

    square, _, _ = verify.solve_idealized_kl(
        [model(4, 4, 0.4), model(4, 4, 0.7), model(4, 4, 0.5)], beta2=0.6
    )
    rect = verify.check_whitening(model(3, 5, 0.5))
    criterion(
        "C06",
        "orthogonality fixed points solve at tolerance",
        square.passed
        and square.max_error <= 1e-6
        and rect.passed
        and rect.max_error <= 1e-6
        and "infeasible" in rect.details,
        f"square residual {square.max_error:.2e}, rectangular residual "
        f"{rect.max_error:.2e}, infeasibility reported",
    )


def test_c07_adapted_descent_updates():
    rng = np.random.default_rng(107)
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((4, 4))
    model = problems.MatrixGaussianModel(
        mean=rng.standard_normal((3, 4)),
        row_cov_sqrt=0.5 * (a @ a.T / 3 + np.eye(3)),
        col_cov_sqrt=0.5 * (b @ b.T / 4 + np.eye(4)),
    )
    report = verify.check_adapted_norm_descent(model, alternatives=100, seed=107)
    criterion(
        "C07",
        "stochastically adapted descent updates are optimal and normalized",
        report.passed and report.max_error <= 1e-6,
        report.details,
    )


def test_c08_exponent_paradox():
    rng = np.random.default_rng(108)
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(2, 9))
        g = random_full_rank(rng, m, n, cond=50.0)
        report = verify.check_exponent_paradox(g)
        worst = max(worst, report.max_error)
        assert report.passed
    criterion(
        "C08",
        "exponent 1/2 with fresh factors recovers the transposed pseudoinverse",
        worst <= 1e-8,
        f"max residual {worst:.2e} over 20 full-rank instances",
    )


def test_c09_kron_equivalence():
    rng = np.random.default_rng(109)
    worst = 0.0
    for i in range(20):
        m = int(rng.integers(2, 6))
        n = int(rng.integers(2, 6))
        a = rng.standard_normal((m, m))
        b = rng.standard_normal((n, n))
        eps = [0.0, 1e-3, 0.05][i % 3]
        report = verify.check_kron_equivalence(
            a @ a.T + np.eye(m),
            b @ b.T + np.eye(n),
            rng.standard_normal((m, n)),
            p=[0.25, 0.5][i % 2],
            epsilon=eps,
        )
        worst = max(worst, report.max_error)
        assert report.passed
    criterion(
        "C09",
        "factored and vectorized preconditioning agree",
        worst <= 1e-10,
        f"max deviation {worst:.2e} over 20 instances incl. damped ones",
    )


# -- the full-batch qualitative analogue ------------------------------------

RMSPROP = OptimizerSpec(family="rmsprop", beta2=0.99, epsilon=1e-10)
METHODS = {
    "signgd": OptimizerSpec(family="signgd"),
    "rmsprop": RMSPROP,
    "spectralgd": OptimizerSpec(family="spectralgd"),
    "shampoo": OptimizerSpec(
        family="shampoo", p=0.5, beta1=0.0, beta2=0.9, epsilon=1e-12,
        scaling="graft", graft=RMSPROP,
    ),
}
LR_GRIDS = {
    "quadratic": {
        "signgd": [0.0025, 0.005, 0.01, 0.02],
        "rmsprop": [0.64, 1.28, 2.56, 5.12],
        "spectralgd": [0.005, 0.01, 0.02, 0.04],
        "shampoo": [0.64, 1.28, 2.56, 5.12],
    },
    "logistic": {
        "signgd": [0.01, 0.02, 0.04, 0.08],
        "rmsprop": [0.64, 1.28, 2.56, 5.12],
        "spectralgd": [2.56, 5.12, 10.24, 20.48],
        "shampoo": [0.64, 1.28, 2.56, 5.12],
    },
}


def _tuned_loss(problem, spec, lrs, seed):
    best = np.inf
    for lr in lrs:
        config = RunConfig(
            problem=problem,
            optimizer=spec,
            total_steps=500,
            peak_lr=lr,
            warmup_fraction=0.1,
            clip_norm=1.0,
            seed=seed,
            stochastic=False,
        )
        best = min(best, harness._run(config)[1])
    return best


def test_c10_adaptive_methods_beat_plain_descent():
    start = time.perf_counter()
    details = []
    ok = True
    for seed in (0, 1, 2):
        h = problems.ill_conditioned_quadratic(50, 1e4, seed=(seed, 11))
        x, y = problems.make_correlated_logistic_data((seed, 12), n=256, dim=30, condition=1e3)
        for pname, problem in [
            ("quadratic", problems.quadratic_problem(h, (10, 5))),
            ("logistic", problems.logistic_problem(x, y)),
        ]:
            losses = {
                name: _tuned_loss(problem, spec, LR_GRIDS[pname][name], seed)
                for name, spec in METHODS.items()
            }
            pair_ok = (
                losses["rmsprop"] < losses["signgd"]
                and losses["shampoo"] < losses["spectralgd"]
            )
            ok = ok and pair_ok
            details.append(
                f"{pname}/seed{seed}: rmsprop {losses['rmsprop']:.3e} vs signgd "
                f"{losses['signgd']:.3e}; shampoo {losses['shampoo']:.3e} vs "
                f"spectralgd {losses['spectralgd']:.3e}"
            )
    elapsed = time.perf_counter() - start
    criterion(
        "C10",
        "EMA-adapted methods beat their plain counterparts, 3 of 3 seeds",
        ok and elapsed < 120.0,
        f"{elapsed:.1f}s; " + " | ".join(details),
    )


TRAIN_CONFIG = """
[problem]
kind = "logistic"
samples = 64
dim = 12
mixing_condition = 100.0

[optimizer]
family = "shampoo"
p = 0.5
beta2 = 0.9

[optimizer.graft]
family = "adam"
beta1 = 0.9
beta2 = 0.99

[run]
total_steps = 40
peak_lr = 0.1
seed = 9
"""


def test_c11_byte_identical_outputs(tmp_path):
    config = tmp_path / "config.toml"
    config.write_text(TRAIN_CONFIG)
    outputs = []
    for tag in ("a", "b"):
        report = tmp_path / f"verify_{tag}.jsonl"
        trace = tmp_path / f"trace_{tag}.csv"
        assert cli.main(["verify", "--suite", "all", "--seed", "3", "--report", str(report)]) == 0
        assert cli.main(["train", "--config", str(config), "--out", str(trace)]) == 0
        outputs.append((report.read_bytes(), trace.read_bytes()))
    same = outputs[0] == outputs[1]
    criterion(
        "C11",
        "verify and train outputs are byte-identical across invocations",
        same,
        f"report {len(outputs[0][0])} bytes, trace {len(outputs[0][1])} bytes",
    )


def test_c12_mutation_sanity():
    reports = list(verify.propositions_suite(seed=0, perturb=1.05))
    reports += list(verify.table1_suite(seed=0, perturb=1.05))
    surviving = [r.check_name for r in reports if r.passed]
    criterion(
        "C12",
        "a 5% perturbation of every closed form breaks its oracle",
        not surviving,
        f"{len(reports)} perturbed oracles all failed"
        if not surviving
        else f"survived: {surviving}",
    )
