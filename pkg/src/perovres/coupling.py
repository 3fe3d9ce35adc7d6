"""Pairings of the layer operators against normalised indicator functions.

All pairings are normalised by ``sqrt(|D_i| |D_j|)``, i.e. they are
``<A 1_Di / sqrt|Di|, 1_Dj / sqrt|Dj|>``.

For distinct resonators the inner integral over the second resonator is
closed form (mean-value properties, an elliptic integral for ``1/r``) and
the outer integral uses a Gauss-Legendre rule in polar (spherical)
coordinates whose axis points at the other centre.  Self terms of radial kernels reduce to a
one-dimensional integral against the distance distribution of the disk
(ball): ``int_D int_D f(|x-y|) = int_0^{2 rho} f(s) |S^{d-1}| s^{d-1} A(s) ds``
with ``A`` the overlap area (volume) of two copies shifted by ``s``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipe, ellipk

from .errors import DomainError, OverlapError, QuadratureError
from .material import Material, background_wavenumber
from .specfun import EULER_GAMMA

#: e^{gamma_E} / 2, the constant of the small-argument expansion of H0
DEFAULT_GAMMA_HAT = math.exp(EULER_GAMMA) / 2.0

DEFAULT_ORDER = 24
DEFAULT_ORDER_3D = 16
DEFAULT_RTOL = 1e-8


@dataclass(frozen=True)
class Disk:
    """A circular (``dim=2``) or spherical (``dim=3``) resonator in unscaled coordinates."""

    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) not in (2, 3) or not all(math.isfinite(v) for v in c):
            raise DomainError(f"center must be 2 or 3 finite coordinates, got {self.center!r}")
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not (r > 0 and math.isfinite(r)):
            raise DomainError(f"radius must be > 0, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    @property
    def center3(self) -> tuple:
        return self.center if len(self.center) == 3 else (*self.center, 0.0)

    def area(self) -> float:
        return math.pi * self.radius**2

    def volume(self) -> float:
        return 4.0 * math.pi * self.radius**3 / 3.0

    def measure(self, dim: int) -> float:
        return self.area() if dim == 2 else self.volume()

    def distance(self, other: "Disk") -> float:
        return math.dist(self.center3, other.center3)

    def overlaps(self, other: "Disk") -> bool:
        return self.distance(other) <= self.radius + other.radius


@dataclass(frozen=True)
class Configuration:
    """Resonators ``D_1..D_N`` together with the scale ``delta`` (``Omega = delta D + z``)."""

    disks: tuple
    delta: float
    dim: int = 2

    def __post_init__(self):
        disks = tuple(d if isinstance(d, Disk) else Disk(*d) for d in self.disks)
        object.__setattr__(self, "disks", disks)
        if not disks:
            raise DomainError("a configuration needs at least one resonator")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise DomainError(f"delta must be > 0, got {self.delta!r}")
        if self.dim not in (2, 3):
            raise DomainError(f"dim must be 2 or 3, got {self.dim!r}")
        for i in range(len(disks)):
            for j in range(i + 1, len(disks)):
                if disks[i].overlaps(disks[j]):
                    raise OverlapError(f"resonators {i} and {j} are not disjoint")

    @property
    def n(self) -> int:
        return len(self.disks)

    def distance(self, i: int, j: int) -> float:
        return self.disks[i].distance(self.disks[j])

    def identical_radii(self) -> bool:
        r0 = self.disks[0].radius
        return all(d.radius == r0 for d in self.disks)


@dataclass(frozen=True)
class QuadratureOptions:
    """Knobs of the pairing engine.

    ``model="dilute"`` replaces every off-diagonal pairing by ``S + Q dist``.
    """

    order: int = DEFAULT_ORDER
    order_3d: int = DEFAULT_ORDER_3D
    rtol: float = DEFAULT_RTOL
    gamma_hat: float = DEFAULT_GAMMA_HAT
    k0_convention: str = "paper"
    model: str = "quadrature"

    def __post_init__(self):
        if self.order < 4 or self.order_3d < 4:
            raise DomainError("quadrature orders must be >= 4")
        if not self.gamma_hat > 0:
            raise DomainError("gamma_hat must be > 0")
        if self.model not in ("quadrature", "dilute"):
            raise DomainError(f"unknown coupling model {self.model!r}")


# ---------------------------------------------------------------------------
# rules
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[a, b]``."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


@lru_cache(maxsize=256)
def _axial_rule(radius: float, dist: float, n: int, dim: int):
    """Distances ``|x - c|`` and weights for ``x`` in a disk (ball) of the given radius.

    ``c`` lies at ``dist`` from the centre.  Polar coordinates are aligned
    with the line of centres, so nodes cluster at the nearest point and the
    azimuth of the ball drops out.
    """
    r, wr = gauss_legendre(n, 0.0, radius)
    if dim == 2:
        t, wt = gauss_legendre(n, 0.0, math.pi)
        cos_t = np.cos(t)
        wa = 2.0 * wt  # t -> -t
        wrad = wr * r
    else:
        cos_t, wa = gauss_legendre(n, -1.0, 1.0)
        wa = 2.0 * math.pi * wa
        wrad = wr * r * r
    b = np.sqrt(np.maximum(r[:, None] ** 2 + dist * dist - 2.0 * dist * r[:, None] * cos_t[None, :], 0.0))
    w = wrad[:, None] * wa[None, :]
    b.setflags(write=False)
    w.setflags(write=False)
    return b.ravel(), w.ravel()


def _lens_profile(s: float, radius: float) -> float:
    """``A(s) / sqrt(2 rho - s)`` where ``A`` is the overlap area of two disks at distance ``s``.

    Written in ``phi = acos(s / 2 rho)`` so that no cancellation occurs near ``s = 2 rho``.
    """
    phi = math.acos(min(1.0, s / (2.0 * radius)))
    if phi == 0.0:
        return 0.0
    if phi < 1e-3:
        num = (4.0 / 3.0) * phi**3 - (4.0 / 15.0) * phi**5
    else:
        num = 2.0 * phi - math.sin(2.0 * phi)
    return radius * radius * num / (2.0 * math.sqrt(radius) * math.sin(0.5 * phi))


def _self_integral_2d(radius: float, f_smooth: Callable, log_weight: bool, rtol: float, what: str) -> float:
    """``int_D int_D f(|x-y|) dx dy = int_0^{2 rho} f(s) 2 pi s A(s) ds``.

    ``f(s)`` is ``f_smooth(s) * (log s if log_weight else 1)``; the ``sqrt(2 rho - s)``
    and ``log s`` endpoint behaviour is absorbed into the QUADPACK weight.
    """
    weight = "alg-loga" if log_weight else "alg"
    val, err = quad(
        lambda s: 2.0 * math.pi * s * f_smooth(s) * _lens_profile(s, radius),
        0.0,
        2.0 * radius,
        weight=weight,
        wvar=(0.0, 0.5),
        epsabs=0.0,
        epsrel=min(rtol, 1e-13) if rtol else 1e-13,
        limit=200,
    )
    if rtol is not None and err > rtol * max(abs(val), 1e-300):
        raise QuadratureError(f"{what}: estimated error {err:.3e} exceeds {rtol:.1e} x |{val:.3e}|")
    return val


def _ball_lens_volume(s, radius):
    """Overlap volume of two radius-``rho`` balls at centre distance ``s``."""
    return math.pi / 12.0 * (4.0 * radius + s) * (2.0 * radius - s) ** 2


def _cos2_elliptic(m):
    """``int_0^{pi/2} cos^2 t / sqrt(1 - m sin^2 t) dt`` for ``0 <= m < 1``."""
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    small = m < 0.1
    if np.any(small):
        x = m[small]
        a = 1.0
        acc = np.zeros_like(x)
        for n in range(32):
            acc += a * a * x**n / (2 * n + 2)
            a *= (2 * n + 1) / (2 * n + 2)
        out[small] = 0.5 * math.pi * acc
    big = ~small
    if np.any(big):
        x = m[big]
        out[big] = (ellipe(x) - (1.0 - x) * ellipk(x)) / x
    return out


def disk_inverse_distance_integral(b, radius: float):
    """``int_D 1/|x-y| dy`` over a radius-``rho`` disk, ``b = |x - centre| > rho``."""
    b = np.asarray(b, dtype=float)
    if np.any(b <= radius):
        raise OverlapError("evaluation point inside the disk")
    return 4.0 * radius * radius / b * _cos2_elliptic((radius / b) ** 2)


def ball_helmholtz_factor(k: complex, radius: float) -> complex:
    """``int_B exp(ik|x-y|)/|x-y| dy = factor * exp(ik b)/b`` for ``b = |x - centre| > rho``.

    The factor is ``4 pi (sin k rho - k rho cos k rho) / k^3`` (``4 pi rho^3 / 3`` at ``k = 0``).
    """
    x = complex(k) * radius
    if abs(x) < 1e-2:
        shape = 1.0 / 3.0 - x * x / 30.0 + x**4 / 840.0 - x**6 / 45360.0
    else:
        shape = (cmath.sin(x) - x * cmath.cos(x)) / x**3
    return 4.0 * math.pi * radius**3 * shape


def _with_error_estimate(compute: Callable[[int], tuple], n: int, rtol: float, what: str):
    value, mass = compute(n)
    low = max(4, n - max(4, n // 4))
    if low < n and rtol is not None:
        coarse, _ = compute(low)
        err = abs(value - coarse)
        if err > rtol * mass + 1e-300:
            raise QuadratureError(
                f"{what}: estimated error {err:.3e} exceeds {rtol:.1e} x {mass:.3e} at order {n}"
            )
    return value


def _outer_first(di: Disk, dj: Disk) -> tuple:
    """Order a distinct pair so the outer rule runs over the smaller body.

    The closed-form inner integral is singular at the other centre, which is
    then at least one (larger) radius away from the outer domain.
    """
    return (dj, di) if dj.radius < di.radius else (di, dj)


def _classify(di: Disk, dj: Disk) -> bool:
    """True for a self term; raise for distinct overlapping resonators."""
    if di == dj:
        return True
    if di.overlaps(dj):
        raise OverlapError(f"distinct resonators {di} and {dj} overlap")
    return False


# ---------------------------------------------------------------------------
# 2D pairings
# ---------------------------------------------------------------------------


def log_factor(delta: float, k0: complex, gamma_hat: float) -> complex:
    """``log(gamma_hat * delta * k0)``; complex log for complex ``k0``."""
    arg = complex(gamma_hat * delta * k0)
    if arg.imag == 0.0:
        if not arg.real > 0:
            raise DomainError(f"gamma_hat*delta*k0 must be > 0 on the real axis, got {arg.real!r}")
        return complex(math.log(arg.real))
    return cmath.log(arg)


def pairing_khat(di: Disk, dj: Disk, delta: float, k0: complex, gamma_hat: float = DEFAULT_GAMMA_HAT) -> complex:
    """Pairing of the constant kernel ``-(1/2pi) log(gamma_hat delta k0)``."""
    return -log_factor(delta, k0, gamma_hat) / (2.0 * math.pi) * math.sqrt(di.area() * dj.area())


@lru_cache(maxsize=4096)
def _static_2d(di: Disk, dj: Disk, order: int, rtol: float) -> float:
    norm = math.sqrt(di.area() * dj.area())
    if _classify(di, dj):
        total = _self_integral_2d(di.radius, lambda s: 1.0, True, rtol, "static self term")
        return float(-total / (2.0 * math.pi * norm))

    di, dj = _outer_first(di, dj)
    aj = dj.area()
    dist = di.distance(dj)

    def compute(n):
        # log|x - y| is harmonic in y on Dj, so its mean over Dj is log|x - cj|
        b, w = _axial_rule(di.radius, dist, n, 2)
        lg = aj * np.log(b)
        return w @ lg, w @ np.abs(lg)

    total = _with_error_estimate(compute, order, rtol, "static pairing")
    return float(-total / (2.0 * math.pi * norm))


@lru_cache(maxsize=4096)
def _deriv_2d(di: Disk, dj: Disk, order: int, rtol: float) -> float:
    """Real factor ``(1/sqrt|Di||Dj|) int int 1/|x-y|`` (the pairing is ``-(i/4pi)`` times it)."""
    norm = math.sqrt(di.area() * dj.area())
    if _classify(di, dj):
        # the 2 pi s weight cancels the 1/s kernel
        return float(_self_integral_2d(di.radius, lambda s: 1.0 / s, False, rtol, "derivative self term") / norm)

    di, dj = _outer_first(di, dj)
    rj = dj.radius
    dist = di.distance(dj)

    def compute(n):
        b, w = _axial_rule(di.radius, dist, n, 2)
        val = w @ disk_inverse_distance_integral(b, rj)
        return val, val

    return float(_with_error_estimate(compute, order, rtol, "derivative pairing") / norm)


def pairing_static(di: Disk, dj: Disk, order: int = DEFAULT_ORDER, rtol: float = DEFAULT_RTOL) -> complex:
    """``-(1/2pi) <log|x-y| 1_Di, 1_Dj> / sqrt(|Di||Dj|)``; self term when ``di == dj``."""
    return complex(_static_2d(di, dj, order, rtol))


def pairing_deriv(di: Disk, dj: Disk, order: int = DEFAULT_ORDER, rtol: float = DEFAULT_RTOL) -> complex:
    """``-(i/4pi) <1/|x-y| 1_Di, 1_Dj> / sqrt(|Di||Dj|)``; purely imaginary, negative."""
    return complex(0.0, -_deriv_2d(di, dj, order, rtol) / (4.0 * math.pi))


def _assemble_n(khat: complex, static: complex, deriv: complex, delta: float, k0: complex, gamma_hat: float) -> complex:
    log_ = log_factor(delta, k0, gamma_hat)
    dk = delta * k0
    return khat + static + dk * dk * log_ * deriv


def coupling_n(
    di: Disk,
    dj: Disk,
    delta: float,
    k0: complex,
    gamma_hat: float = DEFAULT_GAMMA_HAT,
    order: int = DEFAULT_ORDER,
    rtol: float = DEFAULT_RTOL,
) -> complex:
    """Off-diagonal pairing ``N_ij = Khat + R0 + (delta k0)^2 log(delta k0 gamma_hat) R1``.

    Distances are taken in unscaled coordinates.
    """
    if di == dj:
        raise DomainError("coupling_n is defined for distinct resonators; use self_eigenvalue")
    return _assemble_n(
        pairing_khat(di, dj, delta, k0, gamma_hat),
        pairing_static(di, dj, order, rtol),
        pairing_deriv(di, dj, order, rtol),
        delta,
        k0,
        gamma_hat,
    )


# ---------------------------------------------------------------------------
# 3D pairings
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1024)
def _full_3d(bi: Disk, bj: Disk, k: complex, order: int, rtol: float) -> complex:
    norm = math.sqrt(bi.volume() * bj.volume())
    if _classify(bi, bj):
        rho = bi.radius

        def compute(n):
            # int int G(|x-y|) = int_0^{2 rho} G(s) 4 pi s^2 V(s) ds
            t, w = gauss_legendre(n, 0.0, 2.0 * rho)
            vol = _ball_lens_volume(t, rho)
            val = -np.sum(w * np.exp(1j * k * t) * t * vol)
            return val, np.sum(w * np.abs(np.exp(1j * k * t)) * t * vol)

    else:
        bi, bj = _outer_first(bi, bj)
        factor = ball_helmholtz_factor(k, bj.radius)
        dist = bi.distance(bj)

        def compute(n):
            b, w = _axial_rule(bi.radius, dist, n, 3)
            g = -factor * np.exp(1j * k * b) / (4.0 * math.pi * b)
            return w @ g, w @ np.abs(g)

    return complex(_with_error_estimate(compute, order, rtol, "3D pairing") / norm)


def pairing_full3d(bi: Disk, bj: Disk, k: complex, order: int = DEFAULT_ORDER_3D, rtol: float = DEFAULT_RTOL) -> complex:
    """``<G(., k) 1_Bi, 1_Bj> / sqrt(|Bi||Bj|)`` with ``G = -exp(ikr) / (4 pi r)``."""
    return _full_3d(bi, bj, complex(k), order, rtol)


# ---------------------------------------------------------------------------
# self terms and dilute constants
# ---------------------------------------------------------------------------


def self_eigenvalue(
    di: Disk,
    delta: float,
    k0: complex,
    gamma_hat: float = DEFAULT_GAMMA_HAT,
    dim: int = 2,
    order: Optional[int] = None,
    rtol: float = DEFAULT_RTOL,
) -> complex:
    """Rayleigh quotient of the single-particle operator on the normalised indicator.

    ``dim=2`` gives ``nu = <M 1^, 1^>`` with ``M = Khat + K0 + (delta k0)^2 log(.) K1``;
    ``dim=3`` gives ``lambda = <K 1^, 1^> = -<G(., delta k0) 1^, 1^>``.
    """
    if dim == 2:
        order = order or DEFAULT_ORDER
        return _assemble_n(
            pairing_khat(di, di, delta, k0, gamma_hat),
            pairing_static(di, di, order, rtol),
            pairing_deriv(di, di, order, rtol),
            delta,
            k0,
            gamma_hat,
        )
    if dim == 3:
        return -pairing_full3d(di, di, delta * k0, order or DEFAULT_ORDER_3D, rtol)
    raise DomainError(f"dim must be 2 or 3, got {dim!r}")


@lru_cache(maxsize=256)
def mean_disk_distance(rho: float, order: int = DEFAULT_ORDER, rtol: float = DEFAULT_RTOL) -> float:
    """Mean of ``|x-y|`` over two independent uniform points of a radius-``rho`` disk."""

    area = math.pi * rho * rho
    total = _self_integral_2d(rho, lambda s: s, False, rtol, "mean distance")
    return float(total / area**2)


def dilute_constants(
    rho: float,
    delta: float,
    k0: complex,
    gamma_hat: float = DEFAULT_GAMMA_HAT,
    order: int = DEFAULT_ORDER,
    rtol: float = DEFAULT_RTOL,
) -> tuple:
    """Constants ``(S, Q)`` of the law ``N_ij ~ S + Q dist(D_i, D_j)`` for radius-``rho`` disks.

    ``S = K_ij + R0 + (delta k0)^2 log(delta k0 gamma_hat) R1`` where
    ``R0 = -(1/2pi|D|) int int (|x-y| - 1)`` and ``R1 = -(i/4pi|D|) int int (2 - |x-y|)``
    over two copies of the centred disk, and
    ``Q = -rho^2/2 - (i rho^2/4) (delta k0)^2 log(delta k0 gamma_hat)``.
    """
    if not rho > 0 or not delta > 0:
        raise DomainError("rho and delta must be > 0")
    area = math.pi * rho * rho
    disk = Disk((0.0, 0.0), rho)
    mean = mean_disk_distance(rho, order, rtol)
    # int int |x - y| = area^2 * mean
    r0 = -(area * area * mean - area * area) / (2.0 * math.pi * area)
    r1 = -1j * (2.0 * area * area - area * area * mean) / (4.0 * math.pi * area)
    log_ = log_factor(delta, k0, gamma_hat)
    dk2_log = (delta * k0) ** 2 * log_
    k_ij = pairing_khat(disk, disk, delta, k0, gamma_hat)
    s_const = k_ij + r0 + dk2_log * r1
    q_const = -0.5 * rho * rho - 0.25j * rho * rho * dk2_log
    return complex(s_const), complex(q_const)


# ---------------------------------------------------------------------------
# coupling set
# ---------------------------------------------------------------------------


@dataclass
class CouplingSet:
    """All pairings of a configuration at one frozen background wavenumber.

    ``n_pairs[i, j]`` (``i != j``) is ``N_ij`` in 2D or the ``R`` pairing in 3D;
    the diagonal holds ``nu_delta`` (2D) or ``lambda_delta`` (3D).
    """

    n_pairs: np.ndarray
    gamma_hat: float
    s_const: Optional[complex]
    q_const: Optional[complex]
    delta: float
    k0: complex
    omega_ref: complex
    dim: int = 2
    model: str = "quadrature"
    config: Optional[Configuration] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.n_pairs.shape[0]

    @property
    def delta_k0(self) -> complex:
        return self.delta * self.k0

    @property
    def nu(self) -> np.ndarray:
        return np.diag(self.n_pairs).copy()

    def to_json(self) -> dict:
        def c(z):
            return None if z is None else [float(complex(z).real), float(complex(z).imag)]

        return {
            "dim": self.dim,
            "model": self.model,
            "delta": self.delta,
            "gamma_hat": self.gamma_hat,
            "omega_ref": c(self.omega_ref),
            "k0": c(self.k0),
            "delta_k0": c(self.delta_k0),
            "s_const": c(self.s_const),
            "q_const": c(self.q_const),
            "n_pairs": [[c(z) for z in row] for row in self.n_pairs],
        }


def build_coupling_set(
    config: Configuration,
    material: Material,
    omega_ref: complex,
    opts: Optional[QuadratureOptions] = None,
) -> CouplingSet:
    """Fill every pairing of ``config`` with ``k0`` frozen at ``omega_ref``."""
    opts = opts or QuadratureOptions()
    k0 = background_wavenumber(material, omega_ref, opts.k0_convention)
    n = config.n
    mat = np.zeros((n, n), dtype=complex)
    delta = config.delta
    disks = config.disks
    s_const = q_const = None
    if config.dim == 2:
        if config.identical_radii():
            s_const, q_const = dilute_constants(disks[0].radius, delta, k0, opts.gamma_hat, opts.order, opts.rtol)
        elif opts.model == "dilute":
            raise DomainError("the dilute coupling model needs identical radii")
        for i in range(n):
            mat[i, i] = self_eigenvalue(disks[i], delta, k0, opts.gamma_hat, 2, opts.order, opts.rtol)
            for j in range(n):
                if i == j:
                    continue
                if opts.model == "dilute":
                    mat[i, j] = s_const + q_const * config.distance(i, j)
                else:
                    mat[i, j] = coupling_n(disks[i], disks[j], delta, k0, opts.gamma_hat, opts.order, opts.rtol)
    else:
        if opts.model == "dilute":
            raise DomainError("the dilute coupling model is two-dimensional")
        dk = delta * k0
        for i in range(n):
            for j in range(n):
                mat[i, j] = -pairing_full3d(disks[i], disks[j], dk, opts.order_3d, opts.rtol)
    return CouplingSet(
        n_pairs=mat,
        gamma_hat=opts.gamma_hat,
        s_const=s_const,
        q_const=q_const,
        delta=delta,
        k0=k0,
        omega_ref=complex(omega_ref),
        dim=config.dim,
        model=opts.model,
        config=config,
    )


__all__ = [
    "DEFAULT_GAMMA_HAT",
    "Disk",
    "Configuration",
    "QuadratureOptions",
    "CouplingSet",
    "gauss_legendre",
    "log_factor",
    "pairing_khat",
    "pairing_static",
    "pairing_deriv",
    "pairing_full3d",
    "coupling_n",
    "self_eigenvalue",
    "mean_disk_distance",
    "dilute_constants",
    "build_coupling_set",
]
