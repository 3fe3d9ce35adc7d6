"""Order-zero Bessel/Hankel functions and free-space Helmholtz kernels.

Real-argument J0 and Y0 are evaluated in three regimes:

* ``x <= 8``: Maclaurin series (Y0 through its log-plus-series form);
* ``8 < x <= 25``: Miller backward recurrence normalised by
  ``J0 + 2 sum J_2k = 1``, with Y0 from the Neumann series in ``J_2k``;
* ``x > 25``: Hankel asymptotic expansion.

Each regime is accurate to a few ulps of ``max(1, |f|)`` on its interval.
"""

from __future__ import annotations

import cmath
import enum
import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061

SERIES_MAX = 8.0
RECURRENCE_MAX = 25.0


def _check_finite(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"non-finite argument {x!r}")
    return x


def _j0_series(x: float) -> float:
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    m = 0
    while True:
        m += 1
        term *= -q / (m * m)
        total += term
        if abs(term) < 1e-17 * max(1.0, abs(total)) and m > 2:
            return total


def _y0_series(x: float, j0: float) -> float:
    q = 0.25 * x * x
    term = 1.0
    harmonic = 0.0
    tail = 0.0
    m = 0
    while True:
        m += 1
        term *= -q / (m * m)
        harmonic += 1.0 / m
        contrib = -term * harmonic
        tail += contrib
        if abs(contrib) < 1e-17 * max(1.0, abs(tail)) and m > 2:
            break
    return (2.0 / math.pi) * ((math.log(0.5 * x) + EULER_GAMMA) * j0 + tail)


def _miller(x: float) -> tuple[float, float]:
    """J0 and Y0 from downward recurrence on J_n, 8 < x <= 25."""
    start = 2 * (int(x + 20.0 + 4.0 * math.sqrt(x)) // 2)
    j_next = 0.0
    j_cur = 1e-300
    norm = 0.0
    neumann = 0.0
    j0 = 0.0
    for n in range(start, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        order = n - 1
        if order > 0 and order % 2 == 0:
            norm += 2.0 * j_cur
            kk = order // 2
            neumann += (-1.0) ** kk * j_cur / kk
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
            neumann *= 1e-250
    j0 = j_cur
    norm += j0
    j0 /= norm
    neumann /= norm
    y0 = (2.0 / math.pi) * (math.log(0.5 * x) + EULER_GAMMA) * j0 - (4.0 / math.pi) * neumann
    return j0, y0


def _pq(x: float) -> tuple[float, float]:
    """Modulus series of the Hankel expansion, truncated at the smallest term.

    With ``b_m = prod_{j<=m} (2j-1)^2 / (m! (8x)^m)`` one has
    ``P = b0 - b2 + b4 - ...`` and ``Q = -b1 + b3 - ...``.
    """
    p = 0.0
    q = 0.0
    b = 1.0
    m = 0
    while m < 80:
        phase = m % 4
        if phase == 0:
            p += b
        elif phase == 1:
            q -= b
        elif phase == 2:
            p -= b
        else:
            q += b
        m += 1
        b_next = b * ((2 * m - 1) ** 2) / (m * 8.0 * x)
        if b_next > b or b_next < 1e-18:
            break
        b = b_next
    return p, q


def _asymptotic_j0y0(x: float) -> tuple[float, float]:
    p, q = _pq(x)
    chi = x - 0.25 * math.pi
    amp = math.sqrt(2.0 / (math.pi * x))
    return amp * (p * math.cos(chi) - q * math.sin(chi)), amp * (p * math.sin(chi) + q * math.cos(chi))


def _j0y0(x: float) -> tuple[float, float]:
    if x <= SERIES_MAX:
        j0 = _j0_series(x)
        return j0, _y0_series(x, j0)
    if x <= RECURRENCE_MAX:
        return _miller(x)
    return _asymptotic_j0y0(x)


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero (even in ``x``)."""
    x = abs(_check_finite(x))
    if x <= SERIES_MAX:
        return _j0_series(x)
    return _j0y0(x)[0]


def bessel_y0(x: float) -> float:
    """Bessel function of the second kind, order zero, for ``x > 0``."""
    x = _check_finite(x)
    if x <= 0:
        raise DomainError(f"Y0 is singular for x <= 0, got {x!r}")
    return _j0y0(x)[1]


def hankel1_0(z: float) -> complex:
    """First-kind Hankel function ``H0(z) = J0(z) + i Y0(z)`` for real ``z > 0``."""
    if isinstance(z, complex):
        if z.imag != 0.0:
            raise DomainError("complex-argument Hankel evaluation is not supported")
        z = z.real
    z = _check_finite(z)
    if z <= 0:
        raise DomainError(f"H0 requires z > 0, got {z!r}")
    j0, y0 = _j0y0(z)
    return complex(j0, y0)


class GreenKernelKind(enum.Enum):
    """Kernels entering the resonator pairings."""

    FULL_2D = "full2d"  # -(i/4) H0(k r)
    STATIC_2D = "static2d"  # -(1/2pi) log r
    DERIV_2D = "deriv2d"  # -(i/4pi) / r
    FULL_3D = "full3d"  # -exp(i k r) / (4 pi r)


def green(r: float, k: complex, dim: int) -> complex:
    """Outgoing Helmholtz Green's function at distance ``r``.

    ``dim=2`` needs ``k * r`` real and positive (the Hankel path is real-only);
    ``dim=3`` accepts any complex ``k``.
    """
    if not r > 0 or not math.isfinite(r):
        raise DomainError(f"Green's function is singular at r={r!r}")
    if dim == 2:
        arg = complex(k) * r
        if arg.imag != 0.0 or arg.real <= 0:
            raise DomainError(f"2D Green's function needs real positive k*r, got {arg}")
        return -0.25j * hankel1_0(arg.real)
    if dim == 3:
        return -cmath.exp(1j * k * r) / (4.0 * math.pi * r)
    raise DomainError(f"dim must be 2 or 3, got {dim!r}")


def kernel(kind: GreenKernelKind, r, k: complex = 0.0):
    """Evaluate a pairing kernel; ``STATIC_2D`` and ``DERIV_2D`` accept arrays."""
    kind = GreenKernelKind(kind)
    if kind is GreenKernelKind.FULL_2D:
        return green(r, k, 2)
    if kind is GreenKernelKind.FULL_3D:
        return green(r, k, 3)
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)) or not np.all(np.isfinite(arr)):
        raise DomainError("kernel is singular at r = 0")
    if kind is GreenKernelKind.STATIC_2D:
        out = -np.log(arr) / (2.0 * math.pi)
    else:
        out = (-1j / (4.0 * math.pi)) / arr
    return out[()] if out.ndim == 0 else out


__all__ = [
    "EULER_GAMMA",
    "GreenKernelKind",
    "bessel_j0",
    "bessel_y0",
    "hankel1_0",
    "green",
    "kernel",
]
