"""Recover composite-parameterization angles from a group element.

The sweep works column by column: for each pair (m, n) with m < n a
two-level factor is inverted against the working matrix so that entry
(n, m) vanishes, exactly as in the constructive covering argument for
the parameterization.  After the sweep the working matrix is diagonal
with unit-modulus entries whose arguments are the diagonal phases; for
SU(d) the last phase is implied by det = 1 and checked rather than
stored.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .groups import (
    TWO_PI,
    ComplexMatrix,
    Group,
    ParamMatrix,
    _apply_p,
    _apply_y,
    canonical_mod,
)

__all__ = ["GivensSolution", "ResidualTooLarge", "givens_params", "decompose", "decompose_array"]


class ResidualTooLarge(RuntimeError):
    """The sweep failed to diagonalize the input to working precision."""


@dataclass(frozen=True)
class GivensSolution:
    """Angles of one inverted two-level factor.

    ``rot`` in [0, pi/2] plays the above-diagonal role, ``phase`` the
    below-diagonal one ([0, 2pi) for U, [0, pi) for SU).  ``degenerate``
    marks a pivot pair that was entirely zero, leaving both angles free.
    """

    rot: float
    phase: float
    degenerate: bool = False


def givens_params(a_upper: complex, a_lower: complex, group: Group) -> GivensSolution:
    """Angles that annihilate ``a_lower`` against the pivot ``a_upper``.

    Total function: a vanishing pivot pair yields the canonical (0, 0)
    choice with the degenerate flag set; if only the upper pivot is zero
    the rotation is pi/2 and the phase is free (chosen 0).
    """
    if a_upper == 0 and a_lower == 0:
        return GivensSolution(0.0, 0.0, degenerate=True)
    if a_lower == 0:
        return GivensSolution(0.0, 0.0)
    rot = math.atan2(abs(a_lower), abs(a_upper))
    if a_upper == 0:
        return GivensSolution(rot, 0.0)
    if group is Group.UNITARY:
        phase = canonical_mod(cmath.phase(a_lower) - cmath.phase(-a_upper), TWO_PI)
    else:
        phase = canonical_mod(0.5 * (cmath.phase(-a_upper) - cmath.phase(a_lower)), math.pi)
    return GivensSolution(rot, float(phase))


def _apply_inverse_factor(work: np.ndarray, m: int, n: int, sol, group: Group) -> None:
    """Left-multiply the stack by the adjoint factor pair for slot (m, n)."""
    if group is Group.UNITARY:
        _apply_p(work, n, -np.asarray(sol.phase), left=True)
    else:
        _apply_p(work, m, -np.asarray(sol.phase), left=True)
        _apply_p(work, n, np.asarray(sol.phase), left=True)
    _apply_y(work, m, n, -np.asarray(sol.rot), left=True)


@dataclass
class _BatchSolution:
    rot: np.ndarray
    phase: np.ndarray


def _givens_batch(a_upper: np.ndarray, a_lower: np.ndarray, group: Group) -> _BatchSolution:
    rot = np.arctan2(np.abs(a_lower), np.abs(a_upper))
    if group is Group.UNITARY:
        phase = canonical_mod(np.angle(a_lower) - np.angle(-a_upper), TWO_PI)
    else:
        phase = canonical_mod(0.5 * (np.angle(-a_upper) - np.angle(a_lower)), math.pi)
    # zero pivots fall back to the canonical free choices
    phase = np.where((a_lower == 0) | (a_upper == 0), 0.0, phase)
    rot = np.where(a_lower == 0, 0.0, rot)
    return _BatchSolution(rot=rot, phase=phase)


def decompose_array(mats: np.ndarray, group: Group, *, tol: float = 1e-8) -> np.ndarray:
    """Vectorized decomposition of a (..., d, d) stack of unitaries.

    Inputs must already satisfy the unitarity (and det, for SU) tolerance;
    use :func:`decompose` for validated single matrices.
    """
    work = np.array(mats, dtype=complex)
    d = work.shape[-1]
    budget = _residual_budget(work, tol)
    lam = np.zeros(work.shape[:-2] + (d, d), dtype=float)
    for m in range(d - 1):
        for n in range(m + 1, d):
            sol = _givens_batch(work[..., m, m], work[..., n, m], group)
            _apply_inverse_factor(work, m, n, sol, group)
            lam[..., m, n] = sol.rot
            lam[..., n, m] = sol.phase
    diag = work[..., range(d), range(d)]
    alpha = canonical_mod(np.angle(diag), TWO_PI)
    if group is Group.UNITARY:
        lam[..., range(d), range(d)] = alpha
    else:
        lam[..., range(d - 1), range(d - 1)] = alpha[..., :-1]
        last = diag[..., -1] * np.exp(1j * alpha[..., :-1].sum(axis=-1))
        worst_last = float(np.max(np.abs(last - 1.0)))
        if not worst_last < budget:
            raise ResidualTooLarge(
                f"implied last diagonal phase off by {worst_last:.3e}; input is not special unitary "
                "to working precision"
            )
    off = work - _diag_embed(diag)
    worst = float(np.max(np.sqrt(np.sum(np.abs(off) ** 2, axis=(-2, -1)))))
    if not worst < budget:
        raise ResidualTooLarge(f"off-diagonal residual {worst:.3e} after sweep")
    return lam


def _diag_embed(diag: np.ndarray) -> np.ndarray:
    out = np.zeros(diag.shape + (diag.shape[-1],), dtype=complex)
    out[..., range(diag.shape[-1]), range(diag.shape[-1])] = diag
    return out


def _residual_budget(mats: np.ndarray, tol: float) -> float:
    # the sweep cannot beat the distance of the input from the group
    d = mats.shape[-1]
    eye = np.eye(d)
    gram = np.einsum("...ji,...jk->...ik", mats.conj(), mats)
    defect = float(np.max(np.sqrt(np.sum(np.abs(gram - eye) ** 2, axis=(-2, -1)))))
    return 1e-9 + 10.0 * min(defect, tol)


def decompose(U: ComplexMatrix, group: Group, *, tol: float = 1e-8) -> ParamMatrix:
    """Parameter grid reproducing U through the ordered factor product.

    Raises :class:`~unicomp.groups.InputNotUnitary` /
    :class:`~unicomp.groups.InputNotSpecial` when validation at ``tol``
    fails, and :class:`ResidualTooLarge` if the sweep cannot diagonalize
    the input to working precision.
    """
    U.require_unitary(tol)
    if group is Group.SPECIAL_UNITARY:
        U.require_special(tol)
    work = np.array(U.entries)
    d = U.d
    lam = np.zeros((d, d))
    for m in range(d - 1):
        for n in range(m + 1, d):
            sol = givens_params(work[m, m], work[n, m], group)
            _apply_inverse_factor(work, m, n, sol, group)
            lam[m, n] = sol.rot
            lam[n, m] = sol.phase
    diag = np.diagonal(work)
    alpha = canonical_mod(np.angle(diag), TWO_PI)
    budget = _residual_budget(U.entries[None], tol)
    if group is Group.UNITARY:
        lam[range(d), range(d)] = alpha
    else:
        lam[range(d - 1), range(d - 1)] = alpha[:-1]
        last = diag[-1] * np.exp(1j * alpha[:-1].sum())
        if not abs(last - 1.0) < budget:
            raise ResidualTooLarge(
                f"implied last diagonal phase off by {abs(last - 1.0):.3e}"
            )
    resid = float(np.linalg.norm(work - np.diag(diag)))
    if not resid < budget:
        raise ResidualTooLarge(f"off-diagonal residual {resid:.3e} after sweep")
    return ParamMatrix(group, lam)
