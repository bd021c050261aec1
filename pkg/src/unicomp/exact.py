"""Exact scalar values of the form (rational) * pi**k.

Normalization constants and the closed-form trigonometric integrals are
rationals times an integer power of pi.  Carrying them exactly keeps
golden-value comparisons free of float drift; floats are derived on
demand via :func:`float`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class PiPower:
    """Exact value ``coeff * pi**exponent`` with rational ``coeff``."""

    coeff: Fraction
    exponent: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        object.__setattr__(self, "exponent", int(self.exponent))

    def __float__(self) -> float:
        return float(self.coeff) * math.pi**self.exponent

    def __mul__(self, other: "PiPower | Fraction | int") -> "PiPower":
        if isinstance(other, PiPower):
            return PiPower(self.coeff * other.coeff, self.exponent + other.exponent)
        return PiPower(self.coeff * Fraction(other), self.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other: "PiPower | Fraction | int") -> "PiPower":
        if isinstance(other, PiPower):
            return PiPower(self.coeff / other.coeff, self.exponent - other.exponent)
        return PiPower(self.coeff / Fraction(other), self.exponent)

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.coeff)
        pi = "pi" if self.exponent == 1 else f"pi^{self.exponent}"
        if self.coeff == 1:
            return pi
        return f"{self.coeff}*{pi}"

    def is_rational(self) -> bool:
        return self.exponent == 0
