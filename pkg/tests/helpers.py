"""Shared test utilities: independent oracles and batch assertions."""

from __future__ import annotations

import math

import numpy as np

from unicomp import Group
from unicomp.groups import param_range


def qr_haar(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Independent Haar sampler: QR of a complex Gaussian matrix with the
    phase convention fixed from the R diagonal."""
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.einsum("nii->ni", r)
    return q * (diag / np.abs(diag))[:, None, :]


def assert_params_in_range(lam: np.ndarray, group: Group) -> None:
    """Every slot of a (..., d, d) parameter stack inside its declared range."""
    d = lam.shape[-1]
    for m in range(1, d + 1):
        for n in range(1, d + 1):
            if not group.has_param(d, m, n):
                continue
            vals = lam[..., m - 1, n - 1]
            upper, closed = param_range(group, m, n)
            assert np.all(vals >= 0.0), f"slot ({m},{n}) below 0"
            if closed:
                assert np.all(vals <= upper), f"slot ({m},{n}) above {upper}"
            else:
                assert np.all(vals < upper), f"slot ({m},{n}) at/above {upper}"


def frobenius(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))
