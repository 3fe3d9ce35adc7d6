"""Dispersive permittivity of halide-perovskite-type resonators.

All quantities are nondimensional. Physical constants have to be scaled by
the caller before they are put into a :class:`Material`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import DomainError, PoleError

K0_CONVENTIONS = ("paper", "sqrt")

#: relative pole guard, multiplied by |beta|
POLE_EPS = 1e-12


@dataclass(frozen=True)
class Material:
    """Parameters of ``eps(w, k) = eps0 + alpha / (beta - w^2 + eta k^2 - i gamma w)``.

    Parameters
    ----------
    eps0 : float
        Background permittivity.
    mu0 : float
        Permeability, constant in the whole space.
    alpha, beta, gamma, eta : float
        Dispersion constants of the resonator material.
    """

    eps0: float
    mu0: float
    alpha: float
    beta: float
    gamma: float
    eta: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise DomainError(f"{f.name} must be a real number, got {value!r}")
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{f.name} must be finite and > 0, got {value!r}")

    def pole_denominator(self, omega: complex, k: float) -> complex:
        """``beta - w^2 + eta k^2 - i gamma w``."""
        return self.beta - omega * omega + self.eta * k * k - 1j * self.gamma * omega

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class WavePair:
    """A complex angular frequency together with the interior wavenumber."""

    omega: complex
    k: float

    def __post_init__(self):
        if isinstance(self.k, complex) or not math.isfinite(self.k):
            raise DomainError(f"k must be finite and real, got {self.k!r}")


def _checked_denominator(mat: Material, omega: complex, k: float, eps: float) -> complex:
    den = mat.pole_denominator(omega, k)
    if abs(den) < eps * abs(mat.beta):
        raise PoleError(f"material pole: |beta - w^2 + eta k^2 - i gamma w| = {abs(den):.3e} at w={omega}")
    return den


def permittivity(mat: Material, omega: complex, k: float, eps: float = POLE_EPS) -> complex:
    """Permittivity ``eps(w, k)`` of the resonator material."""
    return mat.eps0 + mat.alpha / _checked_denominator(mat, omega, k, eps)


def contrast(mat: Material, omega: complex, k: float, eps: float = POLE_EPS) -> complex:
    """Permittivity contrast ``xi = mu0 * (eps(w, k) - eps0)``.

    Evaluated directly from the dispersive term so that no cancellation
    against ``eps0`` occurs.
    """
    return mat.mu0 * mat.alpha / _checked_denominator(mat, omega, k, eps)


def background_wavenumber(mat: Material, omega: complex, convention: str = "paper") -> complex:
    """Wavenumber outside the resonators.

    ``convention="paper"`` returns ``w * eps0 * mu0``; ``"sqrt"`` returns the
    dimensionally standard ``w * sqrt(eps0 * mu0)``.
    """
    if convention == "paper":
        return omega * mat.eps0 * mat.mu0
    if convention == "sqrt":
        return omega * math.sqrt(mat.eps0 * mat.mu0)
    raise DomainError(f"unknown k0 convention {convention!r}; expected one of {K0_CONVENTIONS}")


def lossless_pole(mat: Material, k: float) -> float:
    """Real frequency ``sqrt(beta + eta k^2)`` where the lossless model diverges."""
    return math.sqrt(mat.beta + mat.eta * k * k)


__all__ = [
    "Material",
    "WavePair",
    "permittivity",
    "contrast",
    "background_wavenumber",
    "lossless_pole",
    "K0_CONVENTIONS",
    "POLE_EPS",
]
