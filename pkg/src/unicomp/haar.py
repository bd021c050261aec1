"""Haar measure in composite coordinates: density, sampling, checks.

In these coordinates the invariant density factorizes over the rotation
angles: each angle ``lambda_{m,n}`` with m < n contributes
``sin(l) * cos(l)**(2k-1)`` with k = n - m, while every phase parameter
is flat on its range.  The normalization constant is an exact rational
times a power of pi for both groups, which makes inverse-CDF sampling
exact: the rotation marginal has CDF ``1 - cos(l)**(2k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import PiPower
from .groups import (
    HALF_PI,
    TWO_PI,
    FrameMask,
    Group,
    ParamMatrix,
    build_array,
    param_range,
)

__all__ = [
    "HaarStream",
    "HaarDensity",
    "ReducedMeasure",
    "JacobianCheck",
    "JacobianConstancy",
    "normalization",
    "box_volume",
    "density",
    "sample",
    "sample_params",
    "sample_matrices",
    "marginal_weight",
    "jacobian_check",
    "jacobian_constancy",
    "normalization_quadrature",
    "normalization_mc",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class HaarStream:
    """Deterministic, splittable source of Haar draws.

    A stream is a pure value: the same (seed, stream_index) always denotes
    the same variate sequence, on every platform (counter-based Philox
    keyed by the pair).  Independent substreams come from distinct
    ``stream_index`` values; chunked consumers additionally partition one
    stream into disjoint counter blocks via ``generator(block=...)``.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 bits")
        if not 0 <= self.stream_index <= _MASK64:
            raise ValueError("stream_index must fit in 64 bits")

    def generator(self, block: int = 0) -> np.random.Generator:
        """Fresh generator positioned at the start of a counter block."""
        if block < 0:
            raise ValueError("block must be non-negative")
        key = (self.stream_index << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key, counter=block << 192))

    def substream(self, index: int) -> "HaarStream":
        return HaarStream(self.seed, index)


def _pair_count(d: int) -> int:
    return d * (d - 1) // 2


def _range_product(d: int) -> int:
    """Product of 2(n - m) over all pairs m < n."""
    out = 1
    for m in range(1, d):
        for n in range(m + 1, d + 1):
            out *= 2 * (n - m)
    return out


def normalization(d: int, group: Group) -> PiPower:
    """Exact normalization constant of the invariant density.

    U(d): (2 pi)^{d(d+1)/2} / prod 2(n-m);
    SU(d): 2^{d-1} pi^{d(d+1)/2 - 1} / prod 2(n-m).
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    e = d * (d + 1) // 2
    k = _range_product(d)
    if group is Group.UNITARY:
        return PiPower(Fraction(2**e, k), e)
    return PiPower(Fraction(2 ** (d - 1), k), e - 1)


def box_volume(d: int, group: Group) -> PiPower:
    """Exact volume of the parameter box (product of all range lengths)."""
    pairs = _pair_count(d)
    if group is Group.UNITARY:
        # d(d+1)/2 phases of length 2pi, plus pairs rotations of length pi/2
        return PiPower(Fraction(2 ** (d * (d + 1) // 2), 2**pairs), d * (d + 1) // 2 + pairs)
    # d-1 diagonal phases (2pi), pairs phases (pi), pairs rotations (pi/2)
    return PiPower(Fraction(2 ** (d - 1), 2**pairs), (d - 1) + 2 * pairs)


def _rotation_weights(lam: np.ndarray) -> np.ndarray:
    """Unnormalized density prod sin * cos^{2(n-m)-1} over a (..., d, d) stack."""
    d = lam.shape[-1]
    out = np.ones(lam.shape[:-2])
    for m in range(d - 1):
        for n in range(m + 1, d):
            k = n - m
            ang = lam[..., m, n]
            out = out * np.sin(ang) * np.cos(ang) ** (2 * k - 1)
    return out


@dataclass(frozen=True)
class HaarDensity:
    """Normalized invariant density on the parameter box of one group."""

    d: int
    group: Group

    @property
    def exact_normalization(self) -> PiPower:
        return normalization(self.d, self.group)

    @property
    def log_normalization(self) -> float:
        n = self.exact_normalization
        return math.log(float(n.coeff)) + n.exponent * math.log(math.pi)

    def weights(self, lam: np.ndarray) -> np.ndarray:
        """Vectorized density over a (..., d, d) angle stack (no range check)."""
        return _rotation_weights(np.asarray(lam)) / float(self.exact_normalization)

    def __call__(self, params: ParamMatrix) -> float:
        if params.d != self.d or params.group is not self.group:
            raise ValueError("parameter grid does not match this density")
        bad = params.range_violations()
        if bad:
            m, n, v = bad[0]
            raise ValueError(f"parameter ({m},{n})={v:.6g} outside its range")
        return float(self.weights(params.lam))


def density(params: ParamMatrix) -> float:
    """Normalized Haar density at an in-range parameter grid."""
    return HaarDensity(params.d, params.group)(params)


def _param_slots(d: int, group: Group) -> list[tuple[int, int]]:
    """0-based slots in the documented row-major consumption order."""
    slots = [(i, j) for i in range(d) for j in range(d)]
    if group is Group.SPECIAL_UNITARY:
        slots.remove((d - 1, d - 1))
    return slots


def sample_params(
    d: int, group: Group, n: int, stream: HaarStream, *, block: int = 0
) -> np.ndarray:
    """n Haar-distributed parameter grids as an (n, d, d) array.

    Each draw consumes exactly one uniform variate per parameter, in
    row-major slot order.  Rotation angles use the exact inverse CDF
    ``arccos(u**(1/(2k)))`` with u on (0, 1]; phases are uniform on their
    ranges.
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if n < 0:
        raise ValueError("sample count must be non-negative")
    slots = _param_slots(d, group)
    u = stream.generator(block).random((n, len(slots)))
    lam = np.zeros((n, d, d))
    for idx, (i, j) in enumerate(slots):
        col = u[:, idx]
        if i < j:
            k = j - i
            lam[:, i, j] = np.arccos(np.clip((1.0 - col) ** (1.0 / (2 * k)), 0.0, 1.0))
        else:
            upper, _ = param_range(group, i + 1, j + 1)
            lam[:, i, j] = upper * col
    return lam


def sample(d: int, group: Group, stream: HaarStream) -> ParamMatrix:
    """The Haar draw the stream denotes (a pure function of the stream)."""
    return ParamMatrix(group, sample_params(d, group, 1, stream)[0])


def sample_matrices(
    d: int, group: Group, n: int, stream: HaarStream, *, block: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """n Haar draws as parameter grids plus the built (n, d, d) unitaries."""
    lam = sample_params(d, group, n, stream, block=block)
    return lam, build_array(lam, group)


class ReducedMeasure:
    """Normalized measure reduced to a mask of relevant parameters.

    Every in-mask slot keeps its own normalized factor (flat 1/range for
    phases, ``2k sin cos^{2k-1}`` for rotations); every out-of-mask slot
    is replaced by the constant 1, which preserves normalization.
    """

    def __init__(self, d: int, group: Group, mask: FrameMask):
        if mask.d != d:
            raise ValueError(f"mask is for dimension {mask.d}, not {d}")
        for m, n in mask.relevant:
            if not (1 <= m <= d and 1 <= n <= d):
                raise ValueError(f"mask slot ({m},{n}) out of range")
            if not group.has_param(d, m, n):
                raise ValueError(f"mask slot ({m},{n}) is not a {group.json_tag} parameter")
        self.d = d
        self.group = group
        self.mask = mask
        self._slots = sorted(mask.relevant)

    def weight(self, lam: np.ndarray | ParamMatrix) -> np.ndarray | float:
        """Density over the masked parameters at a full (..., d, d) stack."""
        if isinstance(lam, ParamMatrix):
            arr = lam.lam
        else:
            arr = np.asarray(lam, dtype=float)
        out = np.ones(arr.shape[:-2])
        for m, n in self._slots:
            ang = arr[..., m - 1, n - 1]
            if m < n:
                k = n - m
                out = out * (2 * k) * np.sin(ang) * np.cos(ang) ** (2 * k - 1)
            else:
                upper, _ = param_range(self.group, m, n)
                out = out / upper
        return out if out.ndim else float(out)

    __call__ = weight


def marginal_weight(d: int, group: Group, mask: FrameMask) -> ReducedMeasure:
    """Reduced normalized measure over only the masked parameters."""
    return ReducedMeasure(d, group, mask)


# Numeric verification of the invariant-density claim.  For U(d) the raw
# complex Jacobian of the matrix entries with respect to the parameters
# has |det| proportional to the rotation-angle density (this is exactly
# the coordinate system in which the d = 2 determinant equals
# 2 sin cos).  For SU(d) the matrix-entry Jacobian is rank deficient in
# the traceless operator basis, so the frame -i U^dag dU is expanded in
# the Hermitian traceless basis instead; its coefficients are real and
# the |det| is again proportional to the density.


def _traceless_basis(d: int) -> list[np.ndarray]:
    basis: list[np.ndarray] = []
    for m in range(d - 1):
        for n in range(m + 1, d):
            x = np.zeros((d, d), dtype=complex)
            x[m, n] = 1.0
            x[n, m] = 1.0
            y = np.zeros((d, d), dtype=complex)
            y[m, n] = -1j
            y[n, m] = 1j
            basis.extend((x, y))
    for k in range(d - 1):
        l = np.zeros((d, d), dtype=complex)
        f = math.sqrt(2.0 / ((d - 1 - k) * (d - k)))
        l[k, k] = -(d - 1 - k) * f
        for t in range(k + 1, d):
            l[t, t] = f
        basis.append(l)
    return basis


@dataclass(frozen=True)
class JacobianCheck:
    """|det| of the numeric coordinate Jacobian at one interior point."""

    det_abs: float
    density_factor: float
    ratio: float
    step: float


@dataclass(frozen=True)
class JacobianConstancy:
    """Ratio statistics over several interior points."""

    ratios: tuple[float, ...]
    mean_ratio: float
    rel_std: float
    step: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.rel_std < self.threshold


def _require_interior(params: ParamMatrix, step: float) -> None:
    margin = max(2.0 * step, 1e-8)
    d = params.d
    for m in range(1, d + 1):
        for n in range(1, d + 1):
            if not params.group.has_param(d, m, n):
                continue
            upper, _ = param_range(params.group, m, n)
            v = params.lam[m - 1, n - 1]
            if v < margin or v > upper - margin:
                raise ValueError(
                    f"parameter ({m},{n})={v:.6g} too close to its range boundary for a "
                    f"central stencil of step {step:g}"
                )


def jacobian_check(params: ParamMatrix, step: float = 1e-5) -> JacobianCheck:
    """Finite-difference |det| of the coordinate Jacobian and its ratio
    to the rotation-angle density factor.

    The ratio is parameter independent; at d = 2 for U(d) it equals 2.
    Requires a strictly interior point and a positive step.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    _require_interior(params, step)
    d, group = params.d, params.group
    slots = _param_slots(d, group)
    lam0 = np.array(params.lam)

    def built(lam: np.ndarray) -> np.ndarray:
        return build_array(lam, group)

    diffs = []
    for i, j in slots:
        lp = lam0.copy()
        lp[i, j] += step
        lm = lam0.copy()
        lm[i, j] -= step
        diffs.append((built(lp) - built(lm)) / (2.0 * step))

    if group is Group.UNITARY:
        jac = np.array([du.ravel() for du in diffs]).T
    else:
        u0 = built(lam0)
        basis = _traceless_basis(d)
        rows = np.array([b.conj().ravel() / np.trace(b.conj().T @ b).real for b in basis])
        frame = [(-1j * (u0.conj().T @ du)).ravel() for du in diffs]
        jac = (rows @ np.array(frame).T).real
    det_abs = float(abs(np.linalg.det(jac)))
    factor = float(_rotation_weights(lam0))
    return JacobianCheck(det_abs=det_abs, density_factor=factor, ratio=det_abs / factor, step=step)


def jacobian_constancy(
    d: int,
    group: Group,
    stream: HaarStream,
    *,
    points: int = 20,
    step: float = 1e-5,
    threshold: float = 1e-4,
) -> JacobianConstancy:
    """Ratio constancy across random interior points.

    A relative standard deviation above the threshold is a diagnostic
    that the step is too large (or the claim is violated), reported via
    ``passed`` rather than silently.
    """
    slots = _param_slots(d, group)
    u = stream.generator().random((points, len(slots)))
    ratios = []
    for row in u:
        lam = np.zeros((d, d))
        for idx, (i, j) in enumerate(slots):
            upper, _ = param_range(group, i + 1, j + 1)
            margin = 0.05 * upper
            lam[i, j] = margin + row[idx] * (upper - 2 * margin)
        ratios.append(jacobian_check(ParamMatrix(group, lam), step=step).ratio)
    arr = np.array(ratios)
    mean = float(arr.mean())
    rel = float(arr.std() / abs(mean)) if mean else math.inf
    return JacobianConstancy(
        ratios=tuple(float(r) for r in arr),
        mean_ratio=mean,
        rel_std=rel,
        step=step,
        threshold=threshold,
    )


def normalization_quadrature(d: int, group: Group, nodes: int = 24) -> float:
    """Tensor Gauss-Legendre integral of the density over the full box.

    Exact normalization drives this to 1; feasible for d = 2 (the grid is
    the full tensor product of per-parameter rules).
    """
    if d != 2:
        raise ValueError("tensor quadrature supported for d = 2 only; use normalization_mc")
    slots = _param_slots(d, group)
    x, w = np.polynomial.legendre.leggauss(nodes)
    axes_vals, axes_wts = [], []
    for i, j in slots:
        upper, _ = param_range(group, i + 1, j + 1)
        axes_vals.append(0.5 * upper * (x + 1.0))
        axes_wts.append(0.5 * upper * w)
    grids = np.meshgrid(*axes_vals, indexing="ij")
    wts = np.meshgrid(*axes_wts, indexing="ij")
    lam = np.zeros(grids[0].shape + (d, d))
    for idx, (i, j) in enumerate(slots):
        lam[..., i, j] = grids[idx]
    weight = np.multiply.reduce(wts)
    return float(np.sum(weight * HaarDensity(d, group).weights(lam)))


def normalization_mc(
    d: int, group: Group, n: int, stream: HaarStream
) -> tuple[float, float]:
    """Monte Carlo integral of the density over the box (mean, std error).

    Uniform points in the parameter box times the exact box volume; the
    estimate converges to 1.
    """
    slots = _param_slots(d, group)
    u = stream.generator().random((n, len(slots)))
    lam = np.zeros((n, d, d))
    for idx, (i, j) in enumerate(slots):
        upper, _ = param_range(group, i + 1, j + 1)
        lam[:, i, j] = upper * u[:, idx]
    vals = HaarDensity(d, group).weights(lam) * float(box_volume(d, group))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n))
    return mean, se
