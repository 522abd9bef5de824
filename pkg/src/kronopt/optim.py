"""The meta-optimizer and every named configuration of it.

One step routes through a fixed line order: first-moment EMA, preconditioner
statistics update, inverse-root application to the (bias-corrected) first
moment, magnitude grafting or a fixed scaling, post-preconditioning EMA,
then the decoupled-weight-decay parameter update.  Element-wise and
matrix-structured families differ only in their preconditioner statistics
and in how the direction is produced from them, so hyperparameter limits of
one family land exactly on another (sign descent, plain spectral descent,
momentum-orthogonalization, factored preconditioning with or without
momentum, and so on).

Wiring variants control what feeds the two EMAs: ``standard`` feeds the
preconditioner the raw gradient and applies it to the first moment;
``laprop`` (requires beta1 = 0) preconditions the raw gradient and lets
beta3 average the preconditioned updates; ``bcosm`` feeds the preconditioner
the bias-corrected first moment itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import linalg, precond
from .errors import (
    DimensionMismatchError,
    RankDeficientError,
    StateMissingError,
    ZeroDirectionError,
    ZeroMatrixError,
    ZeroVarianceError,
)
from .precond import PreconditionerKind

ELEMENTWISE_FAMILIES = frozenset({"adam", "rmsprop", "signgd", "signum"})
POLAR_FAMILIES = frozenset({"spectralgd", "muon_svd", "muon_ns"})
FACTORED_FAMILIES = frozenset(
    {
        "shampoo",
        "kl_shampoo",
        "eshampoo",
        "centered_shampoo",
        "one_sided_l",
        "one_sided_r",
        "full_matrix",
        "order_n",
    }
)
MATRIX_FAMILIES = POLAR_FAMILIES | FACTORED_FAMILIES
FAMILIES = ELEMENTWISE_FAMILIES | MATRIX_FAMILIES

WIRINGS = ("standard", "laprop", "bcosm")
SCALINGS = ("none", "graft", "classic", "moonlight", "nuclear", "rms_rms")

_DEFAULT_EPSILON = {"adam": 1e-8, "rmsprop": 1e-8}
_DEFAULT_P = {
    "shampoo": 0.25,
    "centered_shampoo": 0.25,
    "kl_shampoo": 0.5,
    "one_sided_l": 0.5,
    "one_sided_r": 0.5,
    "full_matrix": 0.5,
}


@dataclass(frozen=True)
class BiasCorrection:
    """Per-buffer bias-correction switches.

    ``m`` covers the first moment, ``second`` the element-wise second moment
    and the eigenvalue-corrected buffer, ``factors`` the factor matrices and
    the full-matrix accumulator (off by default: grafting controls the
    magnitude there), ``post`` the post-preconditioning EMA.
    """

    m: bool = True
    second: bool = True
    factors: bool = False
    post: bool = True


@dataclass(frozen=True)
class OptimizerSpec:
    """Complete configuration of one optimizer instance."""

    family: str
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    epsilon: Optional[float] = None  # family default when None
    p: Optional[float] = None  # family default when None
    wiring: str = "standard"
    scaling: str = "none"
    graft: Optional["OptimizerSpec"] = None
    bias_correction: BiasCorrection = field(default_factory=BiasCorrection)
    weight_decay: float = 0.0
    precondition_frequency: int = 1
    ns_steps: int = 5
    ns_coeffs: tuple[float, float, float] = linalg.NS_QUINTIC
    centered_subtract_at_use: bool = False
    kl_init_scale: float = 0.0

    def resolved_epsilon(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        if self.family in FACTORED_FAMILIES:
            return 1e-12
        return _DEFAULT_EPSILON.get(self.family, 0.0)

    def resolved_p(self, order: int = 2) -> float:
        if self.p is not None:
            return self.p
        if self.family == "order_n":
            return 1.0 / (2.0 * order)
        return _DEFAULT_P.get(self.family, 0.25)


def validate_spec(spec: OptimizerSpec) -> None:
    if spec.family not in FAMILIES:
        raise ValueError(f"unknown family {spec.family!r}")
    for name, beta in (("beta1", spec.beta1), ("beta2", spec.beta2), ("beta3", spec.beta3)):
        if not 0.0 <= beta < 1.0:
            raise ValueError(f"{name} must be in [0, 1), got {beta}")
    if spec.resolved_epsilon() < 0:
        raise ValueError("epsilon must be nonnegative")
    if spec.weight_decay < 0:
        raise ValueError("weight_decay must be nonnegative")
    if spec.precondition_frequency < 1:
        raise ValueError("precondition_frequency must be >= 1")
    if spec.wiring not in WIRINGS:
        raise ValueError(f"unknown wiring {spec.wiring!r}")
    if spec.scaling not in SCALINGS:
        raise ValueError(f"unknown scaling {spec.scaling!r}")
    if spec.wiring == "laprop" and spec.beta1 != 0.0:
        raise ValueError("laprop wiring requires beta1 = 0; beta3 is its momentum")
    if spec.wiring == "bcosm" and spec.family not in MATRIX_FAMILIES:
        raise ValueError("bcosm wiring requires a matrix family")
    if spec.scaling == "graft":
        if spec.graft is None:
            raise ValueError("graft scaling needs a base optimizer spec")
        if spec.graft.family not in ELEMENTWISE_FAMILIES:
            raise ValueError("graft base must be an element-wise family")
        if spec.graft.scaling != "none":
            raise ValueError("graft base must use scaling 'none'")
    if spec.family == "rmsprop" and spec.beta1 != 0.0:
        raise ValueError("rmsprop is the beta1 = 0 cell; use adam for beta1 > 0")
    if spec.family == "kl_shampoo" and spec.p is not None and spec.p != 0.5:
        raise ValueError("kl_shampoo preconditions with its cached square roots (p = 1/2)")


@dataclass
class _EShampooState:
    factors: precond.FactorPair
    correction: precond.EigCorrectionState


@dataclass
class OptimizerState:
    """Mutable per-parameter buffers; advance one parameter on one thread."""

    m: np.ndarray
    v: np.ndarray
    precond_state: object
    graft_state: Optional["OptimizerState"] = None
    step: int = 0
    cached_roots: object = None


def init_state(spec: OptimizerSpec, shape: tuple[int, ...]) -> OptimizerState:
    """Zero-initialized state for a parameter of the given shape."""
    validate_spec(spec)
    shape = tuple(int(s) for s in shape)
    if spec.family in MATRIX_FAMILIES and spec.family != "order_n" and len(shape) != 2:
        raise DimensionMismatchError(
            f"family {spec.family!r} needs a 2D parameter, got shape {shape}"
        )
    if spec.family == "order_n" and len(shape) < 2:
        raise DimensionMismatchError("order_n needs at least a 2D parameter")
    if spec.family == "adam" and spec.beta1 > 0 and spec.beta2 == 0:
        warnings.warn(
            "adam with beta1 > 0 and beta2 = 0 divides a smoothed numerator by an "
            "instantaneous denominator; this cell is unstable",
            RuntimeWarning,
            stacklevel=2,
        )

    pstate: object = None
    if spec.family in ("adam", "rmsprop"):
        pstate = np.zeros(shape)
    elif spec.family in ("shampoo", "centered_shampoo", "one_sided_l", "one_sided_r"):
        pstate = precond.zero_factor_pair(shape[0], shape[1])
    elif spec.family == "kl_shampoo":
        pstate = precond.init_kl_state(
            shape[0], shape[1], spec.resolved_epsilon(), spec.kl_init_scale
        )
    elif spec.family == "eshampoo":
        pstate = _EShampooState(
            factors=precond.zero_factor_pair(shape[0], shape[1]),
            correction=precond.init_eig_correction_state(shape[0], shape[1]),
        )
    elif spec.family == "full_matrix":
        size = int(np.prod(shape))
        pstate = np.zeros((size, size))
    elif spec.family == "order_n":
        pstate = precond.zero_order_n_factors(shape)

    graft_state = None
    if spec.scaling == "graft":
        graft_state = init_state(spec.graft, shape)
    return OptimizerState(
        m=np.zeros(shape), v=np.zeros(shape), precond_state=pstate, graft_state=graft_state
    )


def ema_update(buffer, x, beta: float) -> np.ndarray:
    """buffer <- beta * buffer + (1 - beta) * x"""
    buffer = np.asarray(buffer, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if buffer.shape != x.shape:
        raise DimensionMismatchError(f"buffer {buffer.shape} vs value {x.shape}")
    return beta * buffer + (1.0 - beta) * x


def bias_corrected(buffer, beta: float, t: int, enabled: bool = True) -> np.ndarray:
    """Divide an EMA buffer by ``1 - beta**t`` so early values are unbiased."""
    if t < 1:
        raise ValueError("t must be >= 1")
    buffer = np.asarray(buffer, dtype=np.float64)
    if not enabled:
        return buffer
    return buffer / (1.0 - beta**t)


def adam_direction(m, v, epsilon: float) -> np.ndarray:
    """Element-wise ``m / (sqrt(v) + epsilon)`` with 0/0 mapped to 0."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.shape != v.shape:
        raise DimensionMismatchError(f"m {m.shape} vs v {v.shape}")
    if np.any(v < 0):
        raise ValueError("second-moment entries must be nonnegative")
    den = np.sqrt(v) + epsilon
    return np.divide(m, den, out=np.zeros_like(m), where=den > 0)


def sign_direction(m) -> np.ndarray:
    """Element-wise sign with sign(0) = 0."""
    return np.sign(np.asarray(m, dtype=np.float64))


def spectral_direction(
    m,
    method: str = "svd",
    ns_steps: int = 5,
    ns_coeffs: tuple[float, float, float] = linalg.NS_QUINTIC,
) -> np.ndarray:
    """Polar factor of ``m`` by exact SVD or the Newton-Schulz iteration."""
    if method == "svd":
        return linalg.polar_svd(m)
    if method == "newton_schulz":
        return linalg.polar_newton_schulz(m, steps=ns_steps, coeffs=ns_coeffs)
    raise ValueError(f"unknown method {method!r}")


class AdamDecomposition(NamedTuple):
    adaptation: np.ndarray
    sign: np.ndarray
    relative_adaptation: np.ndarray


def adam_decompose(m, v) -> AdamDecomposition:
    """Split ``m / sqrt(v)`` into a magnitude part and a sign part.

    The magnitude is reported twice: directly as ``|m| / sqrt(v)`` and in
    relative-variance form ``1 / sqrt(1 + (v - m^2) / m^2)``; the two agree
    wherever they are defined.
    """
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.shape != v.shape:
        raise DimensionMismatchError(f"m {m.shape} vs v {v.shape}")
    if np.any((v == 0) & (m != 0)):
        raise ZeroVarianceError("v is zero at an entry where m is nonzero")
    adaptation = np.divide(
        np.abs(m), np.sqrt(v), out=np.zeros_like(m), where=v > 0
    )
    msq = m**2
    rel_var = np.divide(v - msq, msq, out=np.full_like(m, np.inf), where=msq > 0)
    relative = 1.0 / np.sqrt(1.0 + rel_var)
    return AdamDecomposition(adaptation=adaptation, sign=np.sign(m), relative_adaptation=relative)


class ShampooDecomposition(NamedTuple):
    left_adaptation: np.ndarray
    polar: np.ndarray
    right_adaptation: np.ndarray


def shampoo_decompose(m, left, right, p: float) -> ShampooDecomposition:
    """Split ``L^-p M R^-p`` into left/right adaptation around the polar factor.

    left = L^-p (M M^T)^(1/4), polar = U V^T, right = (M^T M)^(1/4) R^-p;
    their product reconstructs the two-sided preconditioned update.
    """
    m = np.asarray(m, dtype=np.float64)
    dec = linalg.svd(m)
    s = dec.singular_values
    if s.min() <= 1e-12 * max(m.shape) * s.max():
        raise RankDeficientError("m must have full rank")
    root_s = np.sqrt(s)
    gram_left_quarter = (dec.u * root_s) @ dec.u.T
    gram_right_quarter = (dec.v * root_s) @ dec.v.T
    left_adapt = linalg.stabilized_inverse_root(left, 0.0, p) @ gram_left_quarter
    right_adapt = gram_right_quarter @ linalg.stabilized_inverse_root(right, 0.0, p)
    return ShampooDecomposition(
        left_adaptation=left_adapt, polar=dec.u @ dec.v.T, right_adaptation=right_adapt
    )


def graft_and_scale(
    direction,
    spec: OptimizerSpec,
    graft_update=None,
    shape: Optional[tuple[int, int]] = None,
    source=None,
) -> np.ndarray:
    """Apply the configured magnitude rule to a raw direction.

    graft:     rescale to the Frobenius norm of the base optimizer's update
    classic:   sqrt(max(1, m/n))
    moonlight: 0.2 * sqrt(max(m, n))
    nuclear:   nuclear norm of ``source`` (the matrix whose polar factor the
               direction is)
    rms_rms:   sqrt(m / n)
    """
    direction = np.asarray(direction, dtype=np.float64)
    if spec.scaling == "none":
        return direction
    if spec.scaling == "graft":
        if graft_update is None:
            raise StateMissingError("graft scaling needs the base optimizer's update")
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            raise ZeroDirectionError("cannot graft a magnitude onto a zero direction")
        return (np.linalg.norm(graft_update) / norm) * direction
    if shape is None:
        if direction.ndim != 2:
            raise DimensionMismatchError("fixed scalings need an (m, n) shape")
        shape = direction.shape
    rows, cols = shape
    if spec.scaling == "classic":
        return np.sqrt(max(1.0, rows / cols)) * direction
    if spec.scaling == "moonlight":
        return 0.2 * np.sqrt(max(rows, cols)) * direction
    if spec.scaling == "nuclear":
        if source is None:
            raise StateMissingError("nuclear scaling needs the pre-polar source matrix")
        return linalg.matrix_norms(source).nuclear * direction
    if spec.scaling == "rms_rms":
        return np.sqrt(rows / cols) * direction
    raise ValueError(f"unknown scaling {spec.scaling!r}")


def _corrected_factors(factors: precond.FactorPair, spec, t) -> precond.FactorPair:
    if not spec.bias_correction.factors:
        return factors
    c = 1.0 - spec.beta2**t
    return replace(factors, left=factors.left / c, right=factors.right / c)


def _refresh_due(spec: OptimizerSpec, t: int) -> bool:
    return (t - 1) % spec.precondition_frequency == 0


def _factored_direction(spec: OptimizerSpec, state: OptimizerState, m_hat, stat_in, t):
    """Update preconditioner statistics, then precondition the first moment."""
    family = spec.family
    eps = spec.resolved_epsilon()
    bc = spec.bias_correction

    if family in ("shampoo", "one_sided_l", "one_sided_r", "centered_shampoo"):
        if family == "centered_shampoo" and not spec.centered_subtract_at_use:
            state.precond_state = precond.centered_factor_update(
                state.precond_state, stat_in, state.m, spec.beta2
            )
        else:
            state.precond_state = precond.shampoo_factor_update(
                state.precond_state, stat_in, spec.beta2
            )
        factors = _corrected_factors(state.precond_state, spec, t)
        if family == "centered_shampoo" and spec.centered_subtract_at_use:
            factors = replace(
                factors,
                left=factors.left - state.m @ state.m.T,
                right=factors.right - state.m.T @ state.m,
            )
        kind = {
            "one_sided_l": PreconditionerKind.ONE_SIDED_L,
            "one_sided_r": PreconditionerKind.ONE_SIDED_R,
        }.get(family, PreconditionerKind.TWO_SIDED)
        p = spec.resolved_p()
        if _refresh_due(spec, t):
            roots = {}
            if kind != PreconditionerKind.ONE_SIDED_R:
                roots["left"] = precond.damped_inverse_root(factors.left, eps, p)
            if kind != PreconditionerKind.ONE_SIDED_L:
                roots["right"] = precond.damped_inverse_root(factors.right, eps, p)
            state.cached_roots = roots
        roots = state.cached_roots
        out = m_hat
        if "left" in roots:
            out = roots["left"] @ out
        if "right" in roots:
            out = out @ roots["right"]
        return out

    if family == "kl_shampoo":
        state.precond_state = precond.kl_factor_update(
            state.precond_state, stat_in, spec.beta2, eps, spec.precondition_frequency
        )
        kl = state.precond_state
        return kl.cached_left_invroot @ m_hat @ kl.cached_right_invroot

    if family == "eshampoo":
        es = state.precond_state
        es.factors = precond.shampoo_factor_update(es.factors, stat_in, spec.beta2)
        es.correction = precond.eshampoo_correction_update(
            es.correction, es.factors, stat_in, spec.beta2, basis_refresh=_refresh_due(spec, t)
        )
        corrected = bias_corrected(
            es.correction.corrected_second_moment, spec.beta2, t, bc.second
        )
        view = replace(es.correction, corrected_second_moment=corrected)
        return precond.precondition(PreconditionerKind.EIG_CORRECTED, view, m_hat, 0.5, eps)

    if family == "full_matrix":
        state.precond_state = precond.full_matrix_update(
            state.precond_state, linalg.vec(stat_in), spec.beta2
        )
        a = state.precond_state
        if bc.factors:
            a = a / (1.0 - spec.beta2**t)
        p = spec.resolved_p()
        if _refresh_due(spec, t):
            state.cached_roots = precond.damped_inverse_root(a, eps, p)
        return linalg.unvec(state.cached_roots @ linalg.vec(m_hat), m_hat.shape)

    if family == "order_n":
        state.precond_state = precond.order_n_factor_update(
            state.precond_state, stat_in, spec.beta2
        )
        factors = state.precond_state.factors
        if bc.factors:
            c = 1.0 - spec.beta2**t
            factors = tuple(f / c for f in factors)
        p = spec.resolved_p(order=len(factors))
        if _refresh_due(spec, t):
            state.cached_roots = tuple(
                precond.damped_inverse_root(f, eps, p) for f in factors
            )
        out = m_hat
        for k, root in enumerate(state.cached_roots):
            out = np.moveaxis(np.tensordot(root, out, axes=(1, k)), 0, k)
        return out

    raise StateMissingError(f"no preconditioner path for family {family!r}")


def _direction(spec: OptimizerSpec, state: OptimizerState, m_hat, stat_in, t):
    family = spec.family
    if family in ("adam", "rmsprop"):
        state.precond_state = ema_update(state.precond_state, stat_in**2, spec.beta2)
        v2_hat = bias_corrected(state.precond_state, spec.beta2, t, spec.bias_correction.second)
        return adam_direction(m_hat, v2_hat, spec.resolved_epsilon())
    if family in ("signgd", "signum"):
        return sign_direction(m_hat)
    if family in POLAR_FAMILIES:
        if not np.any(m_hat):
            return np.zeros_like(m_hat)  # matrix sign of 0 is 0
        method = "newton_schulz" if family == "muon_ns" else "svd"
        return spectral_direction(m_hat, method, spec.ns_steps, spec.ns_coeffs)
    return _factored_direction(spec, state, m_hat, stat_in, t)


def step(
    spec: OptimizerSpec,
    state: OptimizerState,
    theta,
    grad,
    lr: float,
) -> tuple[np.ndarray, OptimizerState]:
    """Advance one parameter by one step; returns the new parameter value.

    ``state`` is mutated in place and returned for convenience.  The graft
    base optimizer, when configured, advances in lockstep on the same
    gradient and only its update magnitude is used.
    """
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape or theta.shape != state.m.shape:
        raise DimensionMismatchError(
            f"theta {theta.shape}, grad {grad.shape}, state {state.m.shape}"
        )
    t = state.step + 1
    state.m = ema_update(state.m, grad, spec.beta1)
    m_hat = bias_corrected(state.m, spec.beta1, t, spec.bias_correction.m)
    stat_in = m_hat if spec.wiring == "bcosm" else grad
    u = _direction(spec, state, m_hat, stat_in, t)

    graft_update = None
    if spec.scaling == "graft":
        g_spec, g_state = spec.graft, state.graft_state
        g_state.m = ema_update(g_state.m, grad, g_spec.beta1)
        g_m_hat = bias_corrected(g_state.m, g_spec.beta1, t, g_spec.bias_correction.m)
        graft_update = _direction(g_spec, g_state, g_m_hat, grad, t)
        g_state.step = t
    u = graft_and_scale(u, spec, graft_update=graft_update, shape=None, source=m_hat)

    state.v = ema_update(state.v, u, spec.beta3)
    v_hat = bias_corrected(state.v, spec.beta3, t, spec.bias_correction.post)
    state.step = t
    theta_new = theta - lr * (v_hat + spec.weight_decay * theta)
    return theta_new, state
