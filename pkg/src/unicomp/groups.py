"""Composite parameterization of the unitary and special unitary groups.

A group element is assembled as an ordered product of elementary factors,
one per real parameter: two-level rotations ``exp(i Y_{m,n} t)`` driven by
the rotation angles above the diagonal of the parameter grid, and phase
factors (projector phases ``exp(i P_l t)`` for U(d), traceless two-level
phases ``exp(i Z_{m,n} t)`` for SU(d)) driven by the entries on and below
the diagonal.  The grid is a d x d matrix of angles ``lambda_{m,n}``; for
SU(d) the slot ``(d, d)`` does not exist.

All indices in the public interface are 1-based.  Every operation here is
a pure function on immutable values.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

__all__ = [
    "Group",
    "ParamMatrix",
    "ComplexMatrix",
    "FrameMask",
    "Factor",
    "ParameterRangeWarning",
    "InputNotUnitary",
    "InputNotSpecial",
    "generator",
    "apply_factor",
    "factor_sequence",
    "build_unitary",
    "build_array",
    "frame_mask",
]


class Group(enum.Enum):
    """The full unitary group U(d) or its det=1 subgroup SU(d)."""

    UNITARY = "U"
    SPECIAL_UNITARY = "SU"

    @property
    def json_tag(self) -> str:
        return self.value

    @classmethod
    def from_tag(cls, tag: str) -> "Group":
        for g in cls:
            if g.value == tag:
                return g
        raise ValueError(f"unknown group tag {tag!r}, expected 'U' or 'SU'")

    def param_count(self, d: int) -> int:
        return d * d if self is Group.UNITARY else d * d - 1

    def has_param(self, d: int, m: int, n: int) -> bool:
        """Whether the 1-based slot (m, n) is a parameter for dimension d."""
        return not (self is Group.SPECIAL_UNITARY and m == n == d)


class ParameterRangeWarning(UserWarning):
    """Out-of-range angles fed to a construction that tolerates them."""


class InputNotUnitary(ValueError):
    """Matrix failed the unitarity validation tolerance."""

    def __init__(self, defect: float, tol: float):
        self.defect = defect
        super().__init__(f"unitarity defect {defect:.3e} exceeds tolerance {tol:.1e}")


class InputNotSpecial(ValueError):
    """Matrix failed the |det - 1| validation tolerance."""

    def __init__(self, defect: float, tol: float):
        self.defect = defect
        super().__init__(f"|det - 1| = {defect:.3e} exceeds tolerance {tol:.1e}")


def param_range(group: Group, m: int, n: int) -> tuple[float, bool]:
    """Upper bound and closedness of the range of ``lambda_{m,n}``.

    Rotations (m < n) live on the closed interval [0, pi/2]; all phase
    parameters live on half-open intervals [0, R).  Returns ``(R, closed)``.
    """
    if m < n:
        return HALF_PI, True
    if group is Group.UNITARY or m == n:
        return TWO_PI, False
    return math.pi, False


def canonical_mod(x: float | np.ndarray, upper: float):
    """Reduce into [0, upper); an exact tie at ``upper`` maps to 0."""
    r = np.mod(x, upper)
    return np.where(r >= upper, 0.0, r) if isinstance(r, np.ndarray) else (0.0 if r >= upper else r)


@dataclass(frozen=True, eq=False)
class ParamMatrix:
    """Grid of composite-parameterization angles for one group element.

    ``lam[i, j]`` stores ``lambda_{i+1, j+1}`` in radians.  For the special
    unitary group the (d, d) slot is not a parameter and is pinned to 0.
    """

    group: Group
    lam: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.lam, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("parameter grid must be square")
        if arr.shape[0] < 2:
            raise ValueError("dimension must be >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameters must be finite")
        if self.group is Group.SPECIAL_UNITARY:
            arr[-1, -1] = 0.0
        arr.setflags(write=False)
        object.__setattr__(self, "lam", arr)

    @property
    def d(self) -> int:
        return self.lam.shape[0]

    @classmethod
    def zeros(cls, d: int, group: Group) -> "ParamMatrix":
        return cls(group, np.zeros((d, d)))

    def value(self, m: int, n: int) -> float:
        """Angle ``lambda_{m,n}`` (1-based indices)."""
        _check_index(m, self.d), _check_index(n, self.d)
        return float(self.lam[m - 1, n - 1])

    def with_value(self, m: int, n: int, angle: float) -> "ParamMatrix":
        """Copy with ``lambda_{m,n}`` replaced (1-based indices)."""
        _check_index(m, self.d), _check_index(n, self.d)
        if not self.group.has_param(self.d, m, n):
            raise ValueError(f"slot ({m}, {n}) is not a parameter for {self.group.json_tag}")
        arr = np.array(self.lam)
        arr[m - 1, n - 1] = angle
        return ParamMatrix(self.group, arr)

    def range_violations(self) -> list[tuple[int, int, float]]:
        """1-based slots whose angle falls outside its declared range."""
        out = []
        for m in range(1, self.d + 1):
            for n in range(1, self.d + 1):
                if not self.group.has_param(self.d, m, n):
                    continue
                v = self.lam[m - 1, n - 1]
                upper, closed = param_range(self.group, m, n)
                if v < 0.0 or (v > upper if closed else v >= upper):
                    out.append((m, n, float(v)))
        return out

    def in_range(self) -> bool:
        return not self.range_violations()

    def allclose(self, other: "ParamMatrix", atol: float = 1e-9) -> bool:
        return self.group is other.group and np.allclose(self.lam, other.lam, atol=atol, rtol=0.0)


@dataclass(frozen=True, eq=False)
class ComplexMatrix:
    """Dense square complex matrix with unitarity validation helpers."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("matrix must be square")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, d: int) -> "ComplexMatrix":
        return cls(np.eye(d, dtype=complex))

    def unitarity_defect(self) -> float:
        """Frobenius norm of ``U^dag U - 1``."""
        u = self.entries
        return float(np.linalg.norm(u.conj().T @ u - np.eye(self.d)))

    def special_defect(self) -> float:
        """``|det U - 1|``."""
        return float(abs(np.linalg.det(self.entries) - 1.0))

    def require_unitary(self, tol: float = 1e-8) -> None:
        defect = self.unitarity_defect()
        if not defect < tol:
            raise InputNotUnitary(defect, tol)

    def require_special(self, tol: float = 1e-8) -> None:
        defect = self.special_defect()
        if not defect < tol:
            raise InputNotSpecial(defect, tol)

    def allclose(self, other: "ComplexMatrix | np.ndarray", atol: float = 1e-9) -> bool:
        other_arr = other.entries if isinstance(other, ComplexMatrix) else np.asarray(other)
        return bool(np.allclose(self.entries, other_arr, atol=atol, rtol=0.0))


@dataclass(frozen=True)
class FrameMask:
    """Subset of parameter slots relevant for a geometric sub-object.

    ``relevant`` holds 1-based (m, n) pairs.  For a mask describing k
    orthonormal vectors the size is k(2d-k-1); for a k-dimensional
    subspace it is 2k(d-k).
    """

    d: int
    k: int
    kind: str
    relevant: frozenset[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.relevant)

    def __contains__(self, slot: tuple[int, int]) -> bool:
        return slot in self.relevant


GeneratorKind = Literal["P", "Y", "Z"]
Side = Literal["left", "right"]

MASK_FRAME = "frame"
MASK_SUBSPACE = "subspace"
MASK_TRAILING = "trailing_block"


def _check_index(i: int, d: int) -> None:
    if not 1 <= i <= d:
        raise ValueError(f"index {i} out of range 1..{d}")


def _check_pair(m: int, n: int, d: int) -> None:
    _check_index(m, d)
    _check_index(n, d)
    if m >= n:
        raise ValueError(f"two-level indices need m < n, got ({m}, {n})")


def generator(kind: GeneratorKind, m: int, n: int | None, d: int) -> ComplexMatrix:
    """Elementary generator matrix.

    ``P`` is the rank-1 projector onto basis vector m (n is ignored),
    ``Y`` the antisymmetric imaginary two-level generator and ``Z`` the
    diagonal traceless two-level generator, all 1-based on dimension d.
    """
    g = np.zeros((d, d), dtype=complex)
    if kind == "P":
        _check_index(m, d)
        g[m - 1, m - 1] = 1.0
    elif kind == "Y":
        if n is None:
            raise ValueError("Y generator needs both indices")
        _check_pair(m, n, d)
        g[m - 1, n - 1] = -1j
        g[n - 1, m - 1] = 1j
    elif kind == "Z":
        if n is None:
            raise ValueError("Z generator needs both indices")
        _check_pair(m, n, d)
        g[m - 1, m - 1] = 1.0
        g[n - 1, n - 1] = -1.0
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    return ComplexMatrix(g)


# In-place factor application on (..., d, d) stacks.  exp(i Y t) acts as
# cos t on both diagonal slots, +sin t at (m, n) and -sin t at (n, m);
# exp(i P t) scales one row/column by e^{it}; exp(i Z t) scales the two
# rows/columns by e^{+it} and e^{-it}.  Each touches O(d) entries per
# matrix.  ``angle`` may be a scalar or an array over the stack.


def _stackable(x, arr: np.ndarray) -> np.ndarray | float:
    x = np.asarray(x)
    return x[..., None] if x.ndim and arr.ndim > 2 else x


def _apply_p(mats: np.ndarray, i: int, angle, *, left: bool) -> None:
    phase = np.exp(1j * np.asarray(angle))
    if left:
        mats[..., i, :] *= _stackable(phase, mats)
    else:
        mats[..., :, i] *= _stackable(phase, mats)


def _apply_z(mats: np.ndarray, i: int, j: int, angle, *, left: bool) -> None:
    _apply_p(mats, i, angle, left=left)
    _apply_p(mats, j, -np.asarray(angle), left=left)


def _apply_y(mats: np.ndarray, i: int, j: int, angle, *, left: bool) -> None:
    c = _stackable(np.cos(angle), mats)
    s = _stackable(np.sin(angle), mats)
    if left:
        ri = mats[..., i, :].copy()
        rj = mats[..., j, :]
        mats[..., i, :] = c * ri + s * rj
        mats[..., j, :] = -s * ri + c * rj
    else:
        ci = mats[..., :, i].copy()
        cj = mats[..., :, j]
        mats[..., :, i] = c * ci - s * cj
        mats[..., :, j] = s * ci + c * cj


def apply_factor(
    U: ComplexMatrix,
    kind: GeneratorKind,
    m: int,
    n: int | None,
    angle: float,
    side: Side = "right",
) -> ComplexMatrix:
    """Multiply U by ``exp(i G angle)`` on the requested side.

    G is the generator of the given kind at 1-based indices (m, n); the
    update is a structured two-row / two-column operation, never a dense
    matrix exponential.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not math.isfinite(angle):
        raise ValueError("angle must be finite")
    d = U.d
    out = np.array(U.entries)
    left = side == "left"
    if kind == "P":
        _check_index(m, d)
        _apply_p(out, m - 1, angle, left=left)
    elif kind == "Y":
        if n is None:
            raise ValueError("Y factor needs both indices")
        _check_pair(m, n, d)
        _apply_y(out, m - 1, n - 1, angle, left=left)
    elif kind == "Z":
        if n is None:
            raise ValueError("Z factor needs both indices")
        _check_pair(m, n, d)
        _apply_z(out, m - 1, n - 1, angle, left=left)
    else:
        raise ValueError(f"unknown factor kind {kind!r}")
    return ComplexMatrix(out)


@dataclass(frozen=True)
class Factor:
    """One factor ``exp(i G_{i,j} lambda_{row,col})`` of the ordered product."""

    kind: str
    i: int
    j: int | None
    row: int
    col: int


def factor_sequence(d: int, group: Group) -> tuple[Factor, ...]:
    """The ordered factor list whose left-to-right product is the element.

    For each pair m < n (outer loop over m, inner over n) a phase factor
    driven by ``lambda_{n,m}`` precedes the rotation driven by
    ``lambda_{m,n}``; the trailing block carries the diagonal phases.
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    seq: list[Factor] = []
    su = group is Group.SPECIAL_UNITARY
    for m in range(1, d):
        for n in range(m + 1, d + 1):
            if su:
                seq.append(Factor("Z", m, n, n, m))
            else:
                seq.append(Factor("P", n, None, n, m))
            seq.append(Factor("Y", m, n, m, n))
    if su:
        seq.extend(Factor("Z", l, d, l, l) for l in range(1, d))
    else:
        seq.extend(Factor("P", l, None, l, l) for l in range(1, d + 1))
    return tuple(seq)


def build_array(lam: np.ndarray, group: Group) -> np.ndarray:
    """Vectorized construction over a (..., d, d) stack of parameter grids."""
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    if lam.shape[-2] != d or d < 2:
        raise ValueError("parameter stack must end in square (d, d) grids, d >= 2")
    mats = np.zeros(lam.shape[:-2] + (d, d), dtype=complex)
    mats[..., range(d), range(d)] = 1.0
    for f in factor_sequence(d, group):
        angle = lam[..., f.row - 1, f.col - 1]
        if f.kind == "P":
            _apply_p(mats, f.i - 1, angle, left=False)
        elif f.kind == "Y":
            _apply_y(mats, f.i - 1, f.j - 1, angle, left=False)
        else:
            _apply_z(mats, f.i - 1, f.j - 1, angle, left=False)
    return mats


def build_unitary(params: ParamMatrix) -> ComplexMatrix:
    """Assemble the group element for a parameter grid.

    The map is total: out-of-range angles are accepted (the product is
    still well defined) but reported through :class:`ParameterRangeWarning`.
    """
    violations = params.range_violations()
    if violations:
        worst = ", ".join(f"({m},{n})={v:.6g}" for m, n, v in violations[:3])
        warnings.warn(
            f"{len(violations)} parameter(s) outside their declared range ({worst} ...)",
            ParameterRangeWarning,
            stacklevel=2,
        )
    return ComplexMatrix(build_array(params.lam, params.group))


def frame_mask(d: int, k: int, kind: str, group: Group = Group.UNITARY) -> FrameMask:
    """Relevant-parameter mask for frames, subspaces or the trailing block.

    ``frame``: slots needed for k orthonormal vectors (size k(2d-k-1)).
    ``subspace``: slots needed for a k-dimensional subspace (size 2k(d-k)).
    ``trailing_block``: slots of the residual group on the last d-k basis
    directions (minus the absent (d, d) slot for SU).
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if not 1 <= k <= d:
        raise ValueError(f"frame size {k} out of range 1..{d}")
    slots: Iterable[tuple[int, int]]
    if kind == MASK_FRAME:
        slots = (
            (m, n)
            for m in range(1, d + 1)
            for n in range(1, d + 1)
            if m != n and min(m, n) <= k
        )
    elif kind == MASK_SUBSPACE:
        slots = (
            (m, n)
            for m in range(1, d + 1)
            for n in range(1, d + 1)
            if (m <= k < n) or (n <= k < m)
        )
    elif kind == MASK_TRAILING:
        slots = (
            (m, n)
            for m in range(k + 1, d + 1)
            for n in range(k + 1, d + 1)
            if group.has_param(d, m, n)
        )
    else:
        raise ValueError(f"unknown mask kind {kind!r}")
    return FrameMask(d=d, k=k, kind=kind, relevant=frozenset(slots))
