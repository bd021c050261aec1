"""Group-integral engines.

General integrands are averaged by Monte Carlo over Haar draws; the
polynomial families with known closed forms (absolute-entry moments,
two-entry second moments, bilateral twirling and the average squared
concurrence) are evaluated exactly as rationals.  Monte Carlo work is
split into fixed-size chunks with per-chunk counter blocks, so the
result depends only on (seed, n), never on thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .exact import PiPower
from .groups import ComplexMatrix, Group, ParamMatrix
from .haar import HaarStream, sample_matrices, sample_params

__all__ = [
    "CHUNK_SIZE",
    "McEstimate",
    "MomentResult",
    "DensityMatrix",
    "DesignReport",
    "TwirlResult",
    "UnsupportedMoment",
    "IntegrandError",
    "InvalidDensityMatrix",
    "mc_integrate",
    "mc_integrate_params",
    "moment_abs_entry",
    "moment_i22",
    "trig_monomial",
    "design_check",
    "twirl",
    "avg_concurrence",
    "swap_operator",
    "maximally_entangled",
    "maximally_mixed",
]

# Fixed chunk size is part of the reproducibility contract: chunk c of a
# run always consumes counter block c of the caller's stream.
CHUNK_SIZE = 4096


class UnsupportedMoment(ValueError):
    """Moment outside the closed-form family."""


class IntegrandError(ValueError):
    """Integrand returned a non-finite value."""

    def __init__(self, draw_index: int):
        self.draw_index = draw_index
        super().__init__(f"integrand returned a non-finite value at draw {draw_index}")


class InvalidDensityMatrix(ValueError):
    """Input failed the density-matrix validation tolerances."""


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error and seed provenance."""

    mean: float | complex
    std_error: float
    n_samples: int
    seed: int
    stream_index: int
    elapsed: float


@dataclass(frozen=True)
class MomentResult:
    """Exact rational value of a closed-form moment plus its float."""

    exact: Fraction
    approx: float

    @classmethod
    def of(cls, exact: Fraction) -> "MomentResult":
        return cls(exact=exact, approx=float(exact))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated quantum state: Hermitian, unit trace, positive."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidDensityMatrix("state must be a square matrix")
        if float(np.max(np.abs(arr - arr.conj().T))) > 1e-10:
            raise InvalidDensityMatrix("state is not Hermitian within 1e-10")
        if abs(np.trace(arr) - 1.0) > 1e-10:
            raise InvalidDensityMatrix("state trace differs from 1 by more than 1e-10")
        if float(np.linalg.eigvalsh(arr).min()) < -1e-10:
            raise InvalidDensityMatrix("state has an eigenvalue below -1e-10")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _chunks(n: int) -> list[tuple[int, int, int]]:
    """(block, start, size) triples covering n draws."""
    out = []
    start = 0
    block = 0
    while start < n:
        size = min(CHUNK_SIZE, n - start)
        out.append((block, start, size))
        start += size
        block += 1
    return out


def _mc_mean(
    chunk_values: Callable[[int, int, int], np.ndarray],
    n: int,
    stream: HaarStream,
    threads: int,
) -> McEstimate:
    """Combine per-chunk integrand values into a mean and standard error.

    Chunks are reduced in index order regardless of scheduling, keeping
    the float result independent of the worker count.
    """
    if n < 2:
        raise ValueError("need at least 2 samples")
    t0 = time.perf_counter()
    plan = _chunks(n)

    def run(args: tuple[int, int, int]) -> tuple[complex, float, bool, int]:
        block, start, size = args
        vals = chunk_values(block, start, size)
        finite = np.isfinite(vals.real) & np.isfinite(vals.imag)
        if not np.all(finite):
            return 0.0, 0.0, False, start + int(np.argmin(finite))
        sq = float((np.abs(vals) ** 2).sum())
        return complex(vals.sum()), sq, bool(np.all(vals.imag == 0.0)), -1

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, plan))
    else:
        results = [run(args) for args in plan]

    total = 0.0 + 0.0j
    total_sq = 0.0
    all_real = True
    for s, sq, real_only, bad in results:
        if bad >= 0:
            raise IntegrandError(bad)
        total += s
        total_sq += sq
        all_real = all_real and real_only
    mean = total / n
    var = max((total_sq - n * abs(mean) ** 2) / (n - 1), 0.0)
    return McEstimate(
        mean=mean.real if all_real else mean,
        std_error=math.sqrt(var / n),
        n_samples=n,
        seed=stream.seed,
        stream_index=stream.stream_index,
        elapsed=time.perf_counter() - t0,
    )


def mc_integrate(
    f: Callable[[ComplexMatrix], complex],
    d: int,
    group: Group,
    n: int,
    stream: HaarStream,
    *,
    threads: int = 1,
) -> McEstimate:
    """Monte Carlo mean of f over n Haar draws from the group."""

    def chunk_values(block: int, start: int, size: int) -> np.ndarray:
        _, mats = sample_matrices(d, group, size, stream, block=block)
        vals = np.empty(size, dtype=complex)
        for i in range(size):
            vals[i] = f(ComplexMatrix(mats[i]))
        return vals

    return _mc_mean(chunk_values, n, stream, threads)


def mc_integrate_params(
    f: Callable[[ParamMatrix], complex],
    d: int,
    group: Group,
    n: int,
    stream: HaarStream,
    *,
    threads: int = 1,
) -> McEstimate:
    """Monte Carlo mean of a parameter-space integrand (no matrices built)."""

    def chunk_values(block: int, start: int, size: int) -> np.ndarray:
        lams = sample_params(d, group, size, stream, block=block)
        vals = np.empty(size, dtype=complex)
        for i in range(size):
            vals[i] = f(ParamMatrix(group, lams[i]))
        return vals

    return _mc_mean(chunk_values, n, stream, threads)


def moment_abs_entry(d: int, p: int, k: int = 1, l: int = 1) -> MomentResult:
    """Exact Haar average of |U_{k,l}|^p over U(d) for even p.

    The value is independent of the entry position; (k, l) are accepted
    and validated for interface symmetry.
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if not (1 <= k <= d and 1 <= l <= d):
        raise ValueError("entry indices out of range")
    if p < 0 or p % 2 != 0:
        raise UnsupportedMoment("only even absolute powers have this closed form")
    exact = Fraction(1)
    for m in range(2, d + 1):
        exact *= Fraction(2 * (m - 1), 2 * (m - 1) + p)
    return MomentResult.of(exact)


def moment_i22(
    d: int,
    first: tuple[int, int] | None = None,
    second: tuple[int, int] | None = None,
) -> MomentResult:
    """Exact Haar average of |U_{k,l}|^2 |U_{m,n}|^2 over U(d) for two
    distinct entries sharing a row or a column: 1 / (d (d + 1)).

    Index pairs are optional; when given they are validated against the
    family (coinciding pairs belong to :func:`moment_abs_entry` with
    p = 4, pairs sharing neither a row nor a column have a different
    closed form).
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if (first is None) != (second is None):
        raise ValueError("give both index pairs or neither")
    if first is not None and second is not None:
        for k, l in (first, second):
            if not (1 <= k <= d and 1 <= l <= d):
                raise ValueError("entry indices out of range")
        if first == second:
            raise ValueError("coinciding index pairs: use moment_abs_entry with p = 4")
        if first[0] != second[0] and first[1] != second[1]:
            raise UnsupportedMoment(
                "pairs sharing neither a row nor a column are outside this family"
            )
    return MomentResult.of(Fraction(1, d * (d + 1)))


def trig_monomial(a: int, b: int) -> PiPower:
    """Exact integral of sin^a(x) cos^b(x) over [0, pi/2].

    Beta-function recurrence; the result is a rational, or a rational
    multiple of pi when both exponents are even.
    """
    if a < 0 or b < 0:
        raise ValueError("exponents must be non-negative")
    value = PiPower(Fraction(1))
    while a >= 2:
        value = value * Fraction(a - 1, a + b)
        a -= 2
    while b >= 2:
        value = value * Fraction(b - 1, a + b)
        b -= 2
    if a == 0 and b == 0:
        return value * PiPower(Fraction(1, 2), 1)
    if a == 1 and b == 1:
        return value * Fraction(1, 2)
    return value  # (1,0) and (0,1) integrate to 1


@dataclass(frozen=True)
class DesignReport:
    """Entrywise moment test of a weighted set against the Haar value.

    The criterion is necessary only: passing does not certify a design,
    failing refutes one.
    """

    d: int
    t: int
    n_elements: int
    required: Fraction
    required_approx: float
    per_entry: np.ndarray
    max_abs_dev: float
    tolerance: float
    passed: bool
    criterion: str = "necessary-only"


def design_check(
    elements: Sequence[tuple[ComplexMatrix | np.ndarray, float]],
    t: int,
    tolerance: float = 1e-9,
) -> DesignReport:
    """Test whether weighted entry moments of degree (t, t) match Haar.

    Every entry average sum_i w_i |U_i[k,l]|^{2t} is compared with the
    Haar value prod_{n=2..d} (n-1)/(n-1+t).
    """
    if t < 1:
        raise ValueError("degree t must be >= 1")
    if not elements:
        raise ValueError("empty set")
    mats = []
    weights = []
    for entry, w in elements:
        cm = entry if isinstance(entry, ComplexMatrix) else ComplexMatrix(np.asarray(entry))
        cm.require_unitary()
        mats.append(cm.entries)
        weights.append(float(w))
    d = mats[0].shape[0]
    if any(m.shape[0] != d for m in mats):
        raise ValueError("mixed dimensions in the set")
    w = np.array(weights)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-10:
        raise ValueError(f"weights sum to {w.sum()!r}, not 1")
    required = Fraction(1)
    for m in range(2, d + 1):
        required *= Fraction(m - 1, m - 1 + t)
    stack = np.array(mats)
    per_entry = np.tensordot(w, np.abs(stack) ** (2 * t), axes=(0, 0))
    dev = np.abs(per_entry - float(required))
    max_dev = float(dev.max())
    return DesignReport(
        d=d,
        t=t,
        n_elements=len(mats),
        required=required,
        required_approx=float(required),
        per_entry=per_entry,
        max_abs_dev=max_dev,
        tolerance=tolerance,
        passed=max_dev <= tolerance,
    )


def swap_operator(d: int) -> np.ndarray:
    """SWAP on the d x d bipartite space: |i j> -> |j i|."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s


def maximally_entangled(d: int) -> DensityMatrix:
    """Projector onto (1/sqrt d) sum_i |ii>."""
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        psi[i * d + i] = 1.0 / math.sqrt(d)
    return DensityMatrix(np.outer(psi, psi.conj()))


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(np.eye(d * d, dtype=complex) / (d * d))


@dataclass(frozen=True)
class TwirlResult:
    """Twirled state and its fitted Werner coefficient."""

    state: DensityMatrix
    beta: float
    fit_residual: float


def _werner_fit(out: np.ndarray, d: int) -> tuple[float, float]:
    """Orthogonal projection of ``out`` onto span{1, SWAP}; returns
    (beta, residual norm)."""
    dim = d * d
    s = swap_operator(d)
    gram = np.array([[float(dim), float(d)], [float(d), float(dim)]])
    rhs = np.array([np.trace(out).real, np.trace(s @ out).real])
    a, b = np.linalg.solve(gram, rhs)
    resid = float(np.linalg.norm(out - a * np.eye(dim) - b * s))
    if abs(a) < 1e-300:
        raise ValueError("degenerate fit: identity coefficient vanished")
    return float(b / a), resid


def twirl(
    rho: DensityMatrix,
    d: int,
    mode: str = "exact",
    *,
    n: int | None = None,
    stream: HaarStream | None = None,
    group: Group = Group.UNITARY,
    threads: int = 1,
    beta_slack: float = 0.05,
) -> TwirlResult:
    """Bilateral twirl: the group average of (U x U) rho (U x U)^dag.

    ``exact`` assembles the output from the closed-form second moments
    (local dimension <= 3); ``mc`` averages over n Haar draws of the
    local group.  The output is projected onto span{1, SWAP} to read off
    the Werner coefficient beta, asserted inside [-1, 1] up to
    ``beta_slack``.
    """
    if rho.dim != d * d:
        raise ValueError(f"state dimension {rho.dim} != d^2 = {d * d}")
    dim = d * d
    s = swap_operator(d)
    if mode == "exact":
        if d > 3:
            raise ValueError("exact twirl engine is restricted to local dimension <= 3")
        # Permutation-term weights recovered from the closed-form moments:
        # shared-line second moment C = 1/(d(d+1)), no-shared-index moment
        # from row unitarity Q = (1/d - C)/(d-1); consistency with the
        # fourth absolute moment (= 2C) is asserted.
        c = moment_i22(d).exact
        q = (Fraction(1, d) - c) / (d - 1)
        if moment_abs_entry(d, 4).exact != 2 * c:
            raise AssertionError("second-moment closed forms are inconsistent")
        w_match = float(q)
        w_cross = float(c - q)
        tr = float(np.trace(rho.entries).real)
        sw = float(np.trace(s @ rho.entries).real)
        out = (w_match * tr + w_cross * sw) * np.eye(dim) + (
            w_cross * tr + w_match * sw
        ) * s
    elif mode == "mc":
        if n is None or stream is None:
            raise ValueError("mc mode needs n and stream")
        if n < 2:
            raise ValueError("need at least 2 samples")
        total = np.zeros((dim, dim), dtype=complex)
        plan = _chunks(n)

        def run(args: tuple[int, int, int]) -> np.ndarray:
            block, _start, size = args
            _, mats = sample_matrices(d, group, size, stream, block=block)
            w = np.einsum("nab,ncd->nacbd", mats, mats).reshape(size, dim, dim)
            sandwiched = w @ rho.entries @ w.conj().transpose(0, 2, 1)
            return sandwiched.sum(axis=0)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(run, plan))
        else:
            parts = [run(args) for args in plan]
        for part in parts:
            total += part
        out = total / n
    else:
        raise ValueError(f"unknown twirl mode {mode!r}")
    beta, resid = _werner_fit(out, d)
    if not -1.0 - beta_slack <= beta <= 1.0 + beta_slack:
        raise ValueError(f"fitted beta {beta:.6g} outside [-1, 1] beyond slack {beta_slack}")
    out = 0.5 * (out + out.conj().T)
    return TwirlResult(state=DensityMatrix(out), beta=beta, fit_residual=resid)


def avg_concurrence(
    d: int,
    mode: str = "exact",
    *,
    n: int | None = None,
    stream: HaarStream | None = None,
    threads: int = 1,
) -> MomentResult | McEstimate:
    """Average squared concurrence of Haar-random bipartite pure states.

    Exact mode combines the two second-moment families over the global
    group on dimension d^2 (the fourth absolute moment enters d^2 times,
    the two-entry moment 2(d-1)d^2 times); Monte Carlo applies random
    global unitaries to a fixed product state and averages
    d/(d-1) (1 - purity of the reduced state).
    """
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    if mode == "exact":
        i4 = moment_abs_entry(d * d, 4).exact
        i22 = moment_i22(d * d).exact
        exact = Fraction(d, d - 1) * (1 - d * d * i4 - 2 * (d - 1) * d * d * i22)
        return MomentResult.of(exact)
    if mode != "mc":
        raise ValueError(f"unknown concurrence mode {mode!r}")
    if n is None or stream is None:
        raise ValueError("mc mode needs n and stream")

    def f(u: ComplexMatrix) -> float:
        psi = u.entries[:, 0]
        blocks = psi.reshape(d, d)
        rho_b = blocks.T @ blocks.conj()
        purity = float(np.sum(np.abs(rho_b) ** 2))
        return d / (d - 1) * (1.0 - purity)

    return mc_integrate(f, d * d, Group.UNITARY, n, stream, threads=threads)
