"""Inverse design of three identical disks resonating at prescribed frequencies.

Pipeline: the size condition fixes ``delta``; two of the three cubic
equations give ``X = N12 N23 N13`` and ``Y = N12^2 + N23^2 + N13^2``; the
dilute law ``N_ij = S + Q dist_ij`` turns these into a one-parameter family of
distance triples ``(a1, a2, a3)`` with ``a1 = |D1 D2|``, ``a2 = |D2 D3|`` and
``a3 = |D1 D3|``, parametrised by ``a3``.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .coupling import Configuration, Disk, QuadratureOptions, build_coupling_set, dilute_constants, self_eigenvalue
from .errors import (
    AllBranchesRejected,
    ComplexLeak,
    DegenerateB,
    DegenerateFactor,
    DegenerateTargets,
    DomainError,
    NoBracket,
    NoConvergence,
    PerovresError,
)
from .material import Material, background_wavenumber, contrast, lossless_pole
from .spectrum import b_factor, three_particle_frequencies

DEFAULT_BRACKET = (1e-4, 1e-1)
FILTER_TOL = 1e-6
CUBIC_TOL = 1e-7


def _filter_tol(value: complex) -> float:
    return FILTER_TOL * (1.0 + abs(value))


@dataclass(frozen=True)
class DesignTargets:
    """Three target frequencies for disks of (unscaled) radius ``rho``.

    ``omega_ref`` freezes the background wavenumber exactly as in the forward
    solver; it defaults to the lossless pole ``sqrt(beta + eta k^2)``.
    """

    omega_targets: tuple
    k: float
    material: Material
    rho: float
    omega_ref: Optional[complex] = None
    opts: QuadratureOptions = field(default_factory=QuadratureOptions)

    def __post_init__(self):
        w = tuple(complex(z) for z in self.omega_targets)
        if len(w) != 3:
            raise DomainError("exactly three target frequencies are required")
        object.__setattr__(self, "omega_targets", w)
        if not self.rho > 0:
            raise DomainError("rho must be > 0")
        for i in range(3):
            for j in range(i + 1, 3):
                if w[i] == w[j]:
                    raise DegenerateTargets(f"targets {i + 1} and {j + 1} coincide")
        if self.omega_ref is None:
            object.__setattr__(self, "omega_ref", complex(lossless_pole(self.material, self.k)))

    @property
    def k0(self) -> complex:
        return background_wavenumber(self.material, self.omega_ref, self.opts.k0_convention)

    def disk(self) -> Disk:
        return Disk((0.0, 0.0), self.rho)

    def nu(self, delta: float) -> complex:
        return self_eigenvalue(self.disk(), delta, self.k0, self.opts.gamma_hat, 2, self.opts.order, self.opts.rtol)

    def b_values(self, delta: float) -> tuple:
        nu = self.nu(delta)
        return tuple(b_factor(self.material, w, self.k, delta, nu) for w in self.omega_targets)


@dataclass
class DesignSolution:
    delta: float
    alpha1: float
    alpha2: float
    alpha3: float
    branch: tuple
    triangle_ok: bool
    residuals: tuple = ()
    cubic_residuals: tuple = ()

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else math.nan

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "alpha3": self.alpha3,
            "branch": "".join("+" if s > 0 else "-" for s in self.branch),
            "triangle_ok": self.triangle_ok,
            "residuals": list(self.residuals),
            "cubic_residuals": list(self.cubic_residuals),
        }


@dataclass
class DesignFamily:
    """Admissible solutions along the ``alpha3`` grid plus per-point diagnostics."""

    delta: float
    delta_mismatch: complex
    solutions: list
    diagnostics: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.solutions)

    def __len__(self):
        return len(self.solutions)


# ---------------------------------------------------------------------------
# size condition
# ---------------------------------------------------------------------------


def delta_condition_target(targets: DesignTargets) -> complex:
    """Required value of ``delta^2 nu(delta)``, evaluated from the expanded printed form.

    With ``a_i = omega_i^2 xi(omega_i, k)``::

        -1/(3 a1 a2 a3) * num / den
        num = a1^2 a3^3 - a1^3 a3^2 + a2^3 a3^2 - a1^2 a2^3 + a1^3 a2^2 - a2^2 a3^3
        den = a1 a2^2 + a2 a3^2 + a1^2 a3 - a1 a3^2 - a2^2 a3 - a1^2 a2
    """
    mat, k = targets.material, targets.k
    a1, a2, a3 = (w * w * contrast(mat, w, k) for w in targets.omega_targets)
    num = a1**2 * a3**3 - a1**3 * a3**2 + a2**3 * a3**2 - a1**2 * a2**3 + a1**3 * a2**2 - a2**2 * a3**3
    den_terms = (a1 * a2**2, a2 * a3**2, a1**2 * a3, -a1 * a3**2, -a2**2 * a3, -(a1**2) * a2)
    den = sum(den_terms)
    if abs(den) <= 1e-13 * sum(abs(t) for t in den_terms) or a1 * a2 * a3 == 0:
        raise DegenerateTargets("the size condition degenerates: two targets give the same omega^2 xi")
    return -num / (3.0 * a1 * a2 * a3 * den)


def delta_mismatch(targets: DesignTargets, delta: float, target: Optional[complex] = None) -> complex:
    """``delta^2 nu(delta) - target`` (complex)."""
    if target is None:
        target = delta_condition_target(targets)
    return delta * delta * targets.nu(delta) - target


def solve_delta(targets: DesignTargets, bracket: Sequence[float] = DEFAULT_BRACKET) -> float:
    """Real ``delta`` in ``bracket`` zeroing the real part of the size condition.

    The imaginary part of the mismatch is not constrained; inspect it with
    ``delta_mismatch``.
    """
    lo, hi = (float(b) for b in bracket)
    if not 0 < lo < hi:
        raise DomainError(f"invalid delta bracket {bracket!r}")
    target = delta_condition_target(targets)

    def f(d):
        return delta_mismatch(targets, d, target).real

    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoBracket(f"no sign change of the size condition on [{lo:g}, {hi:g}]")
    try:
        return brentq(f, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
    except RuntimeError as exc:
        raise NoConvergence(f"size condition: {exc}") from exc


# ---------------------------------------------------------------------------
# distance family
# ---------------------------------------------------------------------------


def xy_targets(b1: complex, b2: complex) -> tuple:
    """``(X, Y)`` solving ``2 b^3 X + b^2 Y = 1`` for ``b = b1, b2``."""
    b1, b2 = complex(b1), complex(b2)
    if b1 == 0 or b2 == 0:
        raise DegenerateB("B values must be nonzero")
    if abs(b2 - b1) <= 1e-14 * max(abs(b1), abs(b2)):
        raise DegenerateB("B(omega_1) and B(omega_2) coincide")
    x = (b2**2 * (b2 - b1) - (b2**3 - b1**3)) / (2.0 * b1 * b2**2 * (b2 * b1**2 - b1**3))
    y = (b2**3 - b1**3) / (b1**2 * b2**2 * (b2 - b1))
    return x, y


def alpha2_of_alpha3(alpha3: float, s: complex, q: complex, x: complex, y: complex) -> list:
    """The four ``(+-, +-)`` values of ``alpha2`` for a given ``alpha3``.

    Returns ``[(branch, value)]`` with ``branch = (outer, inner)`` signs,
    unfiltered; ``real_candidates`` applies the admissibility filter.
    """
    m = s + q * alpha3
    if abs(m) == 0 or q == 0:
        raise DegenerateFactor("S + Q alpha3 vanishes" if q != 0 else "Q vanishes")
    m2 = m * m
    c = m2 * (m2 - y)
    disc = cmath.sqrt(c * c - 4.0 * x * x * m2)
    out = []
    for outer in (1, -1):
        for inner in (1, -1):
            p = cmath.sqrt((-c + inner * disc) / (2.0 * m2))
            out.append(((outer, inner), (-s + outer * p) / q))
    return out


def real_candidates(alpha3: float, s, q, x, y, rho: float) -> list:
    """Admissible ``(branch, alpha2)``: near-real and above ``2 rho``.

    Raises AllBranchesRejected with one reason per branch when none survive.
    """
    keep, reasons = [], []
    for branch, a2 in alpha2_of_alpha3(alpha3, s, q, x, y):
        tag = "".join("+" if t > 0 else "-" for t in branch)
        if abs(a2.imag) > _filter_tol(a2):
            reasons.append(f"{tag}: imaginary part {a2.imag:.3e}")
        elif not a2.real > 2.0 * rho:
            reasons.append(f"{tag}: alpha2 = {a2.real:.6g} not > 2 rho")
        else:
            keep.append((branch, a2.real))
    if not keep:
        raise AllBranchesRejected(f"no admissible alpha2 at alpha3 = {alpha3:g}", reasons)
    return keep


def alpha1_of_alpha3(alpha3: float, alpha2: float, s: complex, q: complex, x: complex) -> float:
    """``(X / ((S + Q a2)(S + Q a3)) - S) / Q``, projected to the real axis."""
    f2 = s + q * alpha2
    f3 = s + q * alpha3
    if f2 == 0 or f3 == 0 or q == 0:
        raise DegenerateFactor("vanishing factor in the alpha1 formula")
    a1 = (x / (f2 * f3) - s) / q
    if abs(a1.imag) > _filter_tol(a1):
        raise ComplexLeak(f"alpha1 has imaginary part {a1.imag:.3e}")
    return a1.real


def triangle_filter(alpha1: float, alpha2: float, alpha3: float) -> bool:
    """``|a3 - a2| <= a1 <= |a3 + a2|``."""
    return abs(alpha3 - alpha2) <= alpha1 <= abs(alpha3 + alpha2)


def geometry_from_distances(alpha1: float, alpha2: float, alpha3: float, rho: float) -> list:
    """Disks with ``|D1 D2| = a1``, ``|D2 D3| = a2``, ``|D1 D3| = a3`` (``D1`` at the origin)."""
    if not triangle_filter(alpha1, alpha2, alpha3):
        raise DomainError(f"distances ({alpha1}, {alpha2}, {alpha3}) violate the triangle inequality")
    x3 = (alpha1**2 + alpha3**2 - alpha2**2) / (2.0 * alpha1)
    y3 = math.sqrt(max(alpha3**2 - x3**2, 0.0))
    return [Disk((0.0, 0.0), rho), Disk((alpha1, 0.0), rho), Disk((x3, y3), rho)]


def default_alpha3_grid(rho: float, steps: int = 64) -> np.ndarray:
    return np.geomspace(4.0 * rho, 100.0 * rho, steps)


def forward_targets(
    disks: Sequence[Disk],
    delta: float,
    material: Material,
    k: float,
    omega_ref: Optional[complex] = None,
    opts: Optional[QuadratureOptions] = None,
    model: str = "dilute",
) -> tuple:
    """Three resonances of a configuration, ascending by real part."""
    opts = opts or QuadratureOptions()
    if omega_ref is None:
        omega_ref = lossless_pole(material, k)
    opts = QuadratureOptions(opts.order, opts.order_3d, opts.rtol, opts.gamma_hat, opts.k0_convention, model)
    cs = build_coupling_set(Configuration(tuple(disks), delta), material, omega_ref, opts)
    return tuple(three_particle_frequencies(cs, material, delta, k).omegas)


def verify_design(solution: DesignSolution, targets: DesignTargets, model: str = "dilute") -> tuple:
    """Relative errors ``|omega_i - target_i| / |target_i|`` of the forward solve (sorted triples)."""
    disks = geometry_from_distances(solution.alpha1, solution.alpha2, solution.alpha3, targets.rho)
    got = forward_targets(disks, solution.delta, targets.material, targets.k, targets.omega_ref, targets.opts, model)
    want = sorted(targets.omega_targets, key=lambda z: (z.real, z.imag))
    return tuple(abs(g - w) / abs(w) for g, w in zip(got, want))


def _grid_point(a3, ctx, targets, verify):
    """Solutions and diagnostics at one ``alpha3`` grid point."""
    delta, s, q, x, y, bs = ctx
    rho = targets.rho
    sols, diags = [], []
    if not a3 > 2.0 * rho:
        return sols, [f"alpha3 = {a3:g}: not > 2 rho"]
    try:
        cands = real_candidates(a3, s, q, x, y, rho)
    except AllBranchesRejected as exc:
        return sols, [f"alpha3 = {a3:g}: " + "; ".join(exc.reasons)]
    except DegenerateFactor as exc:
        return sols, [f"alpha3 = {a3:g}: {exc}"]
    for branch, a2 in cands:
        tag = "".join("+" if t > 0 else "-" for t in branch)
        where = f"alpha3 = {a3:g} [{tag}]"
        try:
            a1 = alpha1_of_alpha3(a3, a2, s, q, x)
        except (ComplexLeak, DegenerateFactor) as exc:
            diags.append(f"{where}: {exc}")
            continue
        if not a1 > 2.0 * rho:
            diags.append(f"{where}: alpha1 = {a1:.6g} not > 2 rho")
            continue
        if not triangle_filter(a1, a2, a3):
            diags.append(f"{where}: triangle condition fails")
            continue
        n12, n23, n13 = s + q * a1, s + q * a2, s + q * a3
        xx, yy = n12 * n23 * n13, n12**2 + n23**2 + n13**2
        cubic_res = tuple(abs(2.0 * b**3 * xx + b * b * yy - 1.0) for b in bs)
        if max(cubic_res) > CUBIC_TOL:
            # near-real but not a solution: the real-projected triple misses the cubic
            diags.append(f"{where}: cubic residual {max(cubic_res):.3e} after real projection")
            continue
        sol = DesignSolution(delta, a1, a2, a3, branch, True, (), cubic_res)
        if verify:
            try:
                sol.residuals = verify_design(sol, targets)
            except PerovresError as exc:
                diags.append(f"{where}: forward check failed: {exc}")
                continue
        sols.append(sol)
    return sols, diags


def design_family(
    targets: DesignTargets,
    alpha3_grid: Optional[Sequence[float]] = None,
    bracket: Sequence[float] = DEFAULT_BRACKET,
    verify: bool = True,
    threads: int = 1,
) -> DesignFamily:
    """All admissible distance triples along ``alpha3_grid``.

    Every solution carries its branch, the triangle flag (only passing triples
    are kept), the cubic residuals of all three targets and, with ``verify``,
    the forward round-trip errors.  Rejected grid points are described in
    ``diagnostics``.  Output order is by ``alpha3`` then branch, independent
    of ``threads``.
    """
    delta = solve_delta(targets, bracket)
    mismatch = delta_mismatch(targets, delta)
    diagnostics = []
    if abs(mismatch.imag) > 1e-8 * (1.0 + abs(delta_condition_target(targets))):
        diagnostics.append(f"size condition imaginary mismatch {mismatch.imag:.3e} at delta = {delta:.12g}")
    opts = targets.opts
    s, q = dilute_constants(targets.rho, delta, targets.k0, opts.gamma_hat, opts.order, opts.rtol)
    bs = targets.b_values(delta)
    x, y = xy_targets(bs[0], bs[1])
    ctx = (delta, s, q, x, y, bs)
    grid = default_alpha3_grid(targets.rho) if alpha3_grid is None else alpha3_grid
    grid = sorted(float(a) for a in grid)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda a: _grid_point(a, ctx, targets, verify), grid))
    else:
        results = [_grid_point(a, ctx, targets, verify) for a in grid]
    solutions = []
    for sols, diags in results:
        solutions.extend(sols)
        diagnostics.extend(diags)
    solutions.sort(key=lambda t: (t.alpha3, t.branch[::-1]))
    return DesignFamily(delta, mismatch, solutions, diagnostics)


__all__ = [
    "DesignTargets",
    "DesignSolution",
    "DesignFamily",
    "delta_condition_target",
    "delta_mismatch",
    "solve_delta",
    "xy_targets",
    "alpha2_of_alpha3",
    "real_candidates",
    "alpha1_of_alpha3",
    "triangle_filter",
    "geometry_from_distances",
    "default_alpha3_grid",
    "forward_targets",
    "verify_design",
    "design_family",
]
