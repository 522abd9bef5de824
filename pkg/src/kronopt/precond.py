"""Factor-matrix preconditioner state and update rules.

Covers the whole family used by the optimizers: plain two-sided factor
accumulation, the coupled (mutually whitened) variant, centered
accumulation, per-parameter full-matrix accumulation on the vectorized
gradient, order-N tensor factors, and eigenvalue-corrected scaling in the
factor eigenbasis.  Update functions return fresh state values; distinct
parameters can therefore be advanced in parallel without shared mutable
state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    ShapeMismatchError,
    StateMissingError,
)


class PreconditionerKind(str, Enum):
    TWO_SIDED = "two_sided"
    ONE_SIDED_L = "one_sided_l"
    ONE_SIDED_R = "one_sided_r"
    FULL_MATRIX = "full_matrix"
    ORDER_N = "order_n"
    EIG_CORRECTED = "eig_corrected"


@dataclass(frozen=True)
class FactorPair:
    """Left (m-by-m) and right (n-by-n) PSD factor accumulators."""

    left: np.ndarray
    right: np.ndarray
    step: int = 0


@dataclass(frozen=True)
class KlState:
    """Coupled factors plus the cached inverse roots used to whiten updates.

    The caches hold ``damped_inverse_root(factor, epsilon, 1/2)`` of factors
    at most ``refresh_every`` updates old; ``staleness`` counts updates since
    the last refresh.
    """

    factors: FactorPair
    cached_left_invroot: np.ndarray
    cached_right_invroot: np.ndarray
    staleness: int = 0


@dataclass(frozen=True)
class EigCorrectionState:
    """Factor eigenbases plus the second-moment buffer expressed in them."""

    left_basis: np.ndarray
    right_basis: np.ndarray
    corrected_second_moment: np.ndarray
    step: int = 0


@dataclass(frozen=True)
class OrderNFactors:
    """One PSD factor per tensor mode; factor k is shape[k]-by-shape[k]."""

    factors: tuple[np.ndarray, ...]
    shape: tuple[int, ...]
    step: int = 0


def _check_gradient(g, shape, name="g"):
    g = np.asarray(g, dtype=np.float64)
    if g.shape != tuple(shape):
        raise DimensionMismatchError(f"{name} has shape {g.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return g


def _symmetrize(a):
    return 0.5 * (a + a.T)


def damped_inverse_root(factor, epsilon: float, p: float) -> np.ndarray:
    """Inverse p-th root of a PSD factor, damped by ``epsilon``.

    With ``epsilon > 0`` this is the stabilized root; with ``epsilon == 0``
    it falls back to Moore-Penrose semantics so exactly rank-deficient
    factors (e.g. fresh Gram matrices of rectangular gradients) map their
    null space to zero instead of failing.
    """
    if epsilon > 0:
        return linalg.stabilized_inverse_root(factor, epsilon, p)
    return linalg.pseudo_inverse_root(factor, p)


def zero_factor_pair(m: int, n: int) -> FactorPair:
    return FactorPair(left=np.zeros((m, m)), right=np.zeros((n, n)), step=0)


def shampoo_factor_update(state: FactorPair, g, beta2: float) -> FactorPair:
    """EMA the left/right Gram matrices of the gradient into the factors."""
    m, n = state.left.shape[0], state.right.shape[0]
    g = _check_gradient(g, (m, n))
    left = _symmetrize(beta2 * state.left + (1.0 - beta2) * (g @ g.T))
    right = _symmetrize(beta2 * state.right + (1.0 - beta2) * (g.T @ g))
    return FactorPair(left=left, right=right, step=state.step + 1)


def centered_factor_update(state: FactorPair, g, m_ema, beta2: float) -> FactorPair:
    """Factor update on the noise part: increments are G G^T - M M^T.

    The increment can be indefinite; factors are clamped PSD at use time by
    the eigenvalue clamping inside the inverse root.
    """
    m, n = state.left.shape[0], state.right.shape[0]
    g = _check_gradient(g, (m, n))
    m_ema = _check_gradient(m_ema, (m, n), "m_ema")
    left = _symmetrize(beta2 * state.left + (1.0 - beta2) * (g @ g.T - m_ema @ m_ema.T))
    right = _symmetrize(beta2 * state.right + (1.0 - beta2) * (g.T @ g - m_ema.T @ m_ema))
    return FactorPair(left=left, right=right, step=state.step + 1)


def full_matrix_update(state, g_vec, beta2: float) -> np.ndarray:
    """Rank-one EMA update of the full d-by-d second-moment matrix."""
    state = np.asarray(state, dtype=np.float64)
    g_vec = np.asarray(g_vec, dtype=np.float64).reshape(-1)
    if state.shape != (g_vec.size, g_vec.size):
        raise DimensionMismatchError(
            f"state is {state.shape}, gradient has {g_vec.size} entries"
        )
    if not np.all(np.isfinite(g_vec)):
        raise NonFiniteError("g_vec contains non-finite entries")
    return _symmetrize(beta2 * state + (1.0 - beta2) * np.outer(g_vec, g_vec))


def init_kl_state(m: int, n: int, epsilon: float, init_scale: float = 0.0) -> KlState:
    """Fresh coupled-factor state with factors ``init_scale * I``.

    The initial caches are the damped inverse square roots of the initial
    factors, so ``init_scale == 0`` requires ``epsilon > 0``.
    """
    factors = FactorPair(left=init_scale * np.eye(m), right=init_scale * np.eye(n))
    return KlState(
        factors=factors,
        cached_left_invroot=linalg.stabilized_inverse_root(factors.left, epsilon, 0.5),
        cached_right_invroot=linalg.stabilized_inverse_root(factors.right, epsilon, 0.5),
        staleness=0,
    )


def kl_factor_update(
    state: KlState, g, beta2: float, epsilon: float, refresh_every: int = 1
) -> KlState:
    """Coupled factor update via outer products of whitened gradients.

    The gradient is whitened on each side with the cached (possibly stale)
    inverse root of the opposite factor before its Gram matrix is
    accumulated, so each factor tracks the second moment of the gradient as
    seen through the other side's preconditioning.
    """
    m, n = state.factors.left.shape[0], state.factors.right.shape[0]
    g = _check_gradient(g, (m, n))
    g_left = g @ state.cached_right_invroot
    g_right = state.cached_left_invroot @ g
    left = _symmetrize(beta2 * state.factors.left + (1.0 - beta2) * (g_left @ g_left.T))
    right = _symmetrize(beta2 * state.factors.right + (1.0 - beta2) * (g_right.T @ g_right))
    factors = FactorPair(left=left, right=right, step=state.factors.step + 1)
    staleness = state.staleness + 1
    if staleness >= refresh_every:
        return KlState(
            factors=factors,
            cached_left_invroot=damped_inverse_root(left, epsilon, 0.5),
            cached_right_invroot=damped_inverse_root(right, epsilon, 0.5),
            staleness=0,
        )
    return replace(state, factors=factors, staleness=staleness)


def init_eig_correction_state(m: int, n: int) -> EigCorrectionState:
    return EigCorrectionState(
        left_basis=np.eye(m),
        right_basis=np.eye(n),
        corrected_second_moment=np.zeros((m, n)),
        step=0,
    )


def eshampoo_correction_update(
    state: EigCorrectionState,
    factors: FactorPair,
    g,
    beta2: float,
    basis_refresh: bool = True,
) -> EigCorrectionState:
    """EMA of the squared gradient expressed in the factor eigenbases.

    When ``basis_refresh`` is set the bases are recomputed as the
    eigenvectors of the current factors before accumulating.
    """
    m, n = state.left_basis.shape[0], state.right_basis.shape[0]
    g = _check_gradient(g, (m, n))
    left_basis, right_basis = state.left_basis, state.right_basis
    if basis_refresh:
        left_basis = linalg.sym_eig(factors.left).eigenvectors
        right_basis = linalg.sym_eig(factors.right).eigenvectors
    projected = left_basis.T @ g @ right_basis
    corrected = beta2 * state.corrected_second_moment + (1.0 - beta2) * projected**2
    return EigCorrectionState(
        left_basis=left_basis,
        right_basis=right_basis,
        corrected_second_moment=corrected,
        step=state.step + 1,
    )


def zero_order_n_factors(shape) -> OrderNFactors:
    shape = tuple(int(s) for s in shape)
    return OrderNFactors(factors=tuple(np.zeros((s, s)) for s in shape), shape=shape)


def mode_k_unfold(g, k: int) -> np.ndarray:
    """Matricization with rows indexing mode k."""
    g = np.asarray(g)
    return np.moveaxis(g, k, 0).reshape(g.shape[k], -1)


def _mode_k_multiply(g, mat, k: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(mat, g, axes=(1, k)), 0, k)


def order_n_factor_update(state: OrderNFactors, g, beta2: float) -> OrderNFactors:
    """EMA the mode-k unfolding Gram matrix into factor k, for every mode."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape != state.shape:
        raise ShapeMismatchError(f"g has shape {g.shape}, expected {state.shape}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("g contains non-finite entries")
    factors = []
    for k, factor in enumerate(state.factors):
        unfolded = mode_k_unfold(g, k)
        factors.append(_symmetrize(beta2 * factor + (1.0 - beta2) * (unfolded @ unfolded.T)))
    return OrderNFactors(factors=tuple(factors), shape=state.shape, step=state.step + 1)


def precondition(kind: PreconditionerKind, state, m, p: float, epsilon: float) -> np.ndarray:
    """Apply the inverse-p-th-root preconditioner of ``kind`` to ``m``.

    two_sided:      (L + eps I)^-p  M  (R + eps I)^-p
    one_sided_l/r:  the matching single-factor product
    full_matrix:    unvec((A + eps I)^-p vec(M))
    order_n:        mode-k products with exponent p on every factor
    eig_corrected:  rescale M in the factor eigenbases by the element-wise
                    reciprocal of sqrt(second moment) + eps
    """
    kind = PreconditionerKind(kind)
    if state is None:
        raise StateMissingError(f"no state supplied for {kind.value}")
    m = np.asarray(m, dtype=np.float64)

    if kind in (PreconditionerKind.TWO_SIDED, PreconditionerKind.ONE_SIDED_L, PreconditionerKind.ONE_SIDED_R):
        if not isinstance(state, FactorPair):
            raise StateMissingError(f"{kind.value} needs a FactorPair, got {type(state).__name__}")
        rows, cols = state.left.shape[0], state.right.shape[0]
        if m.shape != (rows, cols):
            raise DimensionMismatchError(f"m has shape {m.shape}, expected {(rows, cols)}")
        out = m
        if kind != PreconditionerKind.ONE_SIDED_R:
            out = damped_inverse_root(state.left, epsilon, p) @ out
        if kind != PreconditionerKind.ONE_SIDED_L:
            out = out @ damped_inverse_root(state.right, epsilon, p)
        return out

    if kind == PreconditionerKind.FULL_MATRIX:
        state = np.asarray(state, dtype=np.float64)
        if state.ndim != 2 or state.shape[0] != state.shape[1]:
            raise StateMissingError("full_matrix needs a square second-moment matrix")
        if m.size != state.shape[0]:
            raise DimensionMismatchError(
                f"m has {m.size} entries, state is {state.shape}"
            )
        root = damped_inverse_root(state, epsilon, p)
        return linalg.unvec(root @ linalg.vec(m), m.shape)

    if kind == PreconditionerKind.ORDER_N:
        if not isinstance(state, OrderNFactors):
            raise StateMissingError(f"order_n needs OrderNFactors, got {type(state).__name__}")
        if m.shape != state.shape:
            raise DimensionMismatchError(f"m has shape {m.shape}, expected {state.shape}")
        out = m
        for k, factor in enumerate(state.factors):
            out = _mode_k_multiply(out, damped_inverse_root(factor, epsilon, p), k)
        return out

    if kind == PreconditionerKind.EIG_CORRECTED:
        if not isinstance(state, EigCorrectionState):
            raise StateMissingError(
                f"eig_corrected needs EigCorrectionState, got {type(state).__name__}"
            )
        if m.shape != state.corrected_second_moment.shape:
            raise DimensionMismatchError(
                f"m has shape {m.shape}, expected {state.corrected_second_moment.shape}"
            )
        projected = state.left_basis.T @ m @ state.right_basis
        scaled = projected / (np.sqrt(state.corrected_second_moment) + epsilon)
        return state.left_basis @ scaled @ state.right_basis.T

    raise StateMissingError(f"unknown preconditioner kind {kind!r}")
