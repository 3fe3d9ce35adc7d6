"""Resonance matrices, Muller root finding and the closed-form small-N solvers.

Row ``i`` of the resonance matrix carries the pairing with its cyclic
successor ``i+1 (mod N)`` on the diagonal:

    L_ii = N_{i,i+1},    L_ij = -B_i N_ij N_{i,i+1}   (j != i)

so that ``L = diag(N_{i,i+1}) (I - diag(B) A)`` with ``A`` the pairing matrix
with zeroed diagonal.  The 3D matrix has the same layout with the ``R``
pairings and the factor ``A_i`` built from ``lambda``.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coupling import Configuration, CouplingSet, Disk, QuadratureOptions, build_coupling_set, self_eigenvalue
from .errors import (
    DegenerateCubic,
    DegenerateDenominator,
    DegenerateTriple,
    DomainError,
    NoConvergence,
    PerovresError,
    PoleError,
)
from .material import POLE_EPS, Material, background_wavenumber, contrast, lossless_pole

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100
DEFAULT_DEDUP = 1e-7


def modmod(m: int, n: int) -> int:
    """Modified modulo: the unique ``r`` in ``[1, n]`` with ``m = t n + r``, ``t >= 0``."""
    if int(m) != m or int(n) != n or m < 1 or n < 1:
        raise DomainError(f"modmod needs positive integers, got ({m!r}, {n!r})")
    return (int(m) - 1) % int(n) + 1


def b_factor(mat: Material, omega: complex, k: float, delta: float, nu: complex, eps: float = POLE_EPS) -> complex:
    """``delta^2 omega^2 xi / (1 - delta^2 omega^2 xi nu)``.

    The same formula with ``lambda`` in place of ``nu`` gives the 3D factor.
    Raises PoleError near a single-particle resonance (vanishing denominator).
    """
    t = delta * delta * omega * omega * contrast(mat, omega, k)
    den = 1.0 - t * nu
    if abs(den) < eps:
        raise PoleError(f"|1 - delta^2 omega^2 xi nu| = {abs(den):.3e} at omega={omega}")
    return t / den


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


@dataclass
class ResonanceMatrixSpec:
    """Inputs of the resonance matrix.

    With ``frozen=True`` (default) the pairings of ``coupling`` are used at
    every ``omega``.  With ``frozen=False`` the pairings are rebuilt at each
    trial frequency from ``coupling.config`` (slow, for cross-checking).
    """

    coupling: CouplingSet
    material: Material
    k: float
    dim: Optional[int] = None
    frozen: bool = True
    opts: Optional[QuadratureOptions] = None

    def __post_init__(self):
        if self.dim is None:
            self.dim = self.coupling.dim
        if self.dim != self.coupling.dim:
            raise DomainError("spec dim does not match the coupling set")
        if not self.frozen and self.coupling.config is None:
            raise DomainError("unfrozen mode needs the configuration attached to the coupling set")
        if not math.isfinite(self.k):
            raise DomainError("k must be finite")

    @property
    def n(self) -> int:
        return self.coupling.n

    @property
    def delta(self) -> float:
        return self.coupling.delta

    def pairings_at(self, omega: complex) -> CouplingSet:
        if self.frozen:
            return self.coupling
        opts = self.opts or QuadratureOptions()
        return build_coupling_set(self.coupling.config, self.material, omega, opts)


def _assemble(pairs: np.ndarray, b: np.ndarray, dim: int) -> np.ndarray:
    n = pairs.shape[0]
    nxt = (np.arange(n) + 1) % n
    succ = pairs[np.arange(n), nxt]
    if dim == 2:
        off = pairs  # <N_{DiDj} 1_i, 1_j>
    else:
        off = pairs.T  # <R_{DjDi} phi_j, phi_i>
    mat = -(b * succ)[:, None] * off
    mat[np.diag_indices(n)] = succ
    return mat


def assemble_matrix(spec: ResonanceMatrixSpec, omega: complex) -> np.ndarray:
    """Resonance matrix at ``omega``; its determinant vanishes at a resonance."""
    if spec.n < 2:
        raise DomainError("the resonance matrix needs N >= 2; use single_particle_resonance")
    cs = spec.pairings_at(omega)
    pairs = cs.n_pairs
    b = np.array([b_factor(spec.material, omega, spec.k, cs.delta, pairs[i, i]) for i in range(cs.n)])
    return _assemble(pairs, b, spec.dim)


def normalized_det(mat: np.ndarray) -> float:
    """``|det M| / max|M_ij|^N``."""
    scale = np.max(np.abs(mat))
    if scale == 0:
        return 0.0
    return float(abs(np.linalg.det(mat / scale)))


# ---------------------------------------------------------------------------
# Muller
# ---------------------------------------------------------------------------


def muller(
    f: Callable[[complex], complex],
    x0: complex,
    x1: complex,
    x2: complex,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    residual: Optional[Callable[[complex], float]] = None,
) -> tuple:
    """Muller's method; returns ``(root, iterations)``.

    Convergence needs ``residual(x) <= tol`` (``|f(x)|`` by default) and either
    a step below ``1e-14 |x|``, a step below ``1e-9 |x|`` (the best iterate is
    returned) or an iterate that no longer moves.
    """
    residual = residual or (lambda z: abs(f(z)))
    xs = [complex(x0), complex(x1), complex(x2)]
    fs = [f(x) for x in xs]
    best = (residual(xs[2]), xs[2])
    for it in range(1, max_iter + 1):
        h1 = xs[1] - xs[0]
        h2 = xs[2] - xs[1]
        if h1 == 0 or h2 == 0 or h1 + h2 == 0:
            raise DegenerateTriple(f"coincident Muller points near {xs[2]}")
        d1 = (fs[1] - fs[0]) / h1
        d2 = (fs[2] - fs[1]) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        c = fs[2]
        disc = cmath.sqrt(b * b - 4.0 * a * c)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            if c == 0:
                return xs[2], it
            raise DegenerateTriple(f"Muller parabola collapsed near {xs[2]}")
        dx = -2.0 * c / den
        x3 = xs[2] + dx
        if x3 == xs[2]:
            # stagnated at machine precision
            if residual(x3) <= tol:
                return x3, it
            raise NoConvergence(f"Muller stagnated at {x3} with residual {residual(x3):.3e}")
        if not (math.isfinite(x3.real) and math.isfinite(x3.imag)):
            raise NoConvergence(f"Muller iterate left the finite plane from {xs[2]}")
        f3 = f(x3)
        r3 = residual(x3)
        if r3 < best[0]:
            best = (r3, x3)
        if r3 <= tol and (abs(dx) <= 1e-14 * abs(x3) or r3 == 0.0):
            return x3, it
        if r3 <= tol and abs(dx) <= 1e-9 * abs(x3):
            # a final polishing step that does not lower the residual ends the iteration
            return best[1], it
        xs = [xs[1], xs[2], x3]
        fs = [fs[1], fs[2], f3]
    if best[0] <= tol:
        return best[1], max_iter
    raise NoConvergence(f"Muller did not converge in {max_iter} steps (best residual {best[0]:.3e})")


@dataclass(frozen=True)
class MullerOptions:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    dedup: float = DEFAULT_DEDUP
    threads: int = 1
    deflate: bool = True


@dataclass
class Root:
    omega: complex
    residual: float
    label: str = ""
    multiplicity: int = 1
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "omega": [self.omega.real, self.omega.imag],
            "residual": self.residual,
            "multiplicity": self.multiplicity,
            "iterations": self.iterations,
        }


@dataclass
class ResonanceSet:
    roots: list
    failures: list = field(default_factory=list)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([r.omega for r in self.roots], dtype=complex)

    def by_label(self, label: str) -> Root:
        for r in self.roots:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_json(self) -> dict:
        return {
            "roots": [r.to_json() for r in self.roots],
            "failures": [{"guess": [g.real, g.imag], "reason": msg} for g, msg in self.failures],
        }


def _sort_key(z: complex):
    return (round(z.real, 12), round(z.imag, 12))


def _winding_number(f: Callable[[complex], complex], center: complex, radius: float, samples: int = 64) -> int:
    t = np.linspace(0.0, 2.0 * math.pi, samples + 1)
    vals = np.array([f(center + radius * cmath.exp(1j * s)) for s in t])
    dphi = np.angle(vals[1:] / vals[:-1])
    return int(round(np.sum(dphi) / (2.0 * math.pi)))


def _labels(n: int, count: int) -> list:
    if n == 1:
        return ["omega_s1"]
    if n == 2 and count == 2:
        return ["omega_mon2", "omega_dip2"]
    return [f"omega_{i}_{n}" for i in range(1, count + 1)]


def default_guesses(spec: ResonanceMatrixSpec) -> list:
    """Frequencies where ``I - B A`` is singular with ``B`` shared by all resonators.

    Exact for identical resonators under frozen pairings; a starting point otherwise.
    """
    cs = spec.coupling
    pairs = cs.n_pairs
    off = pairs - np.diag(np.diag(pairs))
    nu = complex(np.mean(np.diag(pairs)))
    out = []
    for mu in np.linalg.eigvals(off):
        if mu == 0:
            continue
        try:
            out.append(physical_branch(omega_from_b(spec.material, 1.0 / mu, cs.delta, nu, spec.k)))
        except PerovresError:
            continue
    return out


def _regularized(spec: ResonanceMatrixSpec, omega: complex) -> tuple:
    """``(L, det L * prod q_i)`` where ``B_i = delta^2 omega^2 mu0 alpha / q_i``.

    ``q_i`` is a quadratic in ``omega``, so the product removes the poles of
    ``det L`` at the single-particle resonances without moving any zero.
    """
    cs = spec.pairings_at(omega)
    pairs = cs.n_pairs
    mat = spec.material
    t = cs.delta * cs.delta * omega * omega * mat.mu0 * mat.alpha
    q = mat.pole_denominator(omega, spec.k) - t * np.diag(pairs)
    if np.any(q == 0):
        raise PoleError(f"single-particle pole exactly at omega={omega}")
    lmat = _assemble(pairs, t / q, spec.dim)
    return lmat, complex(np.linalg.det(lmat) * np.prod(q))


def det_resonances(
    spec: ResonanceMatrixSpec,
    guesses: Optional[Sequence[complex]] = None,
    opts: Optional[MullerOptions] = None,
) -> ResonanceSet:
    """Roots of ``omega -> det L(omega)`` by Muller's method from each guess.

    Each guess ``g`` starts from the triple ``(g (1 - 1e-4), g (1 + 1e-4), g)``.
    Muller runs on the pole-free determinant ``det L * prod q_i``; with
    ``opts.deflate`` the guesses are processed in order and every accepted root
    is divided out before the next run (otherwise they run independently,
    optionally on ``opts.threads`` threads).  Acceptance is on the normalised
    residual ``|det L| / max|L|^N``.  Roots closer than ``dedup |omega|`` are
    merged and each root's multiplicity is the winding number of the
    regularised determinant on a small circle.  Per-guess failures are
    recorded, not raised.
    """
    opts = opts or MullerOptions()
    if spec.n == 1:
        guess = guesses[0] if guesses else None
        cs = spec.coupling
        root = single_particle_root(spec.material, cs.n_pairs[0, 0], cs.delta, spec.k, guess, opts)
        root.label = "omega_s1"
        return ResonanceSet([root])
    if guesses is None:
        guesses = default_guesses(spec)
    if not guesses:
        raise DomainError("det_resonances needs at least one initial guess")

    def reg(z):
        return _regularized(spec, z)[1]

    def res(z):
        return normalized_det(_regularized(spec, z)[0])

    def run(g, known=()):
        g = complex(g)
        known = tuple(known)

        def f(z):
            val = reg(z)
            for r in known:
                val /= z - r
            return val

        try:
            z, it = muller(f, g * (1 - 1e-4), g * (1 + 1e-4), g, opts.tol, opts.max_iter, residual=res)
            return g, z, it, None
        except (NoConvergence, DegenerateTriple, PoleError, ZeroDivisionError) as exc:
            return g, None, 0, f"{type(exc).__name__}: {exc}"

    outcomes = []
    if opts.deflate:
        known = []
        for g in guesses:
            out = run(g, known)
            outcomes.append(out)
            if out[1] is not None:
                # a re-found root is divided out again: it has higher multiplicity
                known.append(out[1])
    elif opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            outcomes = list(pool.map(run, guesses))
    else:
        outcomes = [run(g) for g in guesses]

    found, failures = [], []
    for g, z, it, err in outcomes:
        if err is not None:
            failures.append((g, err))
            continue
        if abs(z) == 0 or not z.real > 0:
            failures.append((g, f"converged to a non-physical root {z}"))
            continue
        if any(abs(z - r.omega) <= opts.dedup * abs(z) for r in found):
            continue
        found.append(Root(omega=z, residual=normalized_det(assemble_matrix(spec, z)), iterations=it))
    found.sort(key=lambda r: _sort_key(r.omega))
    for r in found:
        radius = 1e-5 * abs(r.omega)
        others = [abs(r.omega - s.omega) for s in found if s is not r]
        if others:
            radius = min(radius, 0.3 * min(others))
        try:
            r.multiplicity = max(1, _winding_number(reg, r.omega, radius))
        except PoleError:
            r.multiplicity = 1
    count = sum(r.multiplicity for r in found)
    labels = _labels(spec.n, count)
    pos = 0
    for r in found:
        r.label = labels[pos] if pos < len(labels) else f"omega_{pos + 1}_{spec.n}"
        pos += r.multiplicity
    return ResonanceSet(found, failures)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubicRoots:
    """Roots of ``2 X B^3 + Y B^2 - 1 = 0`` (``X = N12 N23 N31``, ``Y`` the sum of squares)."""

    b_roots: tuple
    multiplicity: tuple
    residuals: tuple
    x: complex
    y: complex
    degenerate: bool = False


def _cubic(x: complex, y: complex, b: complex) -> complex:
    return 2.0 * x * b**3 + y * b * b - 1.0


def _cubic_scale(x: complex, y: complex, b: complex) -> float:
    return 1.0 + abs(2.0 * x * b**3) + abs(y * b * b)


def three_particle_cubic(n12: complex, n23: complex, n31: complex) -> CubicRoots:
    """Solve the three-particle cubic.

    Roots come from the companion matrix and one Newton polish each.  A pair
    of nearly equal roots is replaced by the exact double root ``-Y/(3X)`` when
    that point satisfies the cubic, and reported with multiplicity 2.
    """
    x = complex(n12) * complex(n23) * complex(n31)
    y = complex(n12) ** 2 + complex(n23) ** 2 + complex(n31) ** 2
    if x == 0 and y == 0:
        raise DegenerateCubic("all three pairings vanish")
    if abs(x) < 1e-300 or (y != 0 and abs(2.0 * x) < 1e-14 * abs(y) ** 1.5):
        if y == 0:
            raise DegenerateCubic("leading and quadratic coefficients vanish")
        r = cmath.sqrt(1.0 / y)
        roots = (r, -r)
        return CubicRoots(roots, (1, 1), tuple(abs(y * b * b - 1.0) for b in roots), x, y, degenerate=True)

    roots = [complex(b) for b in np.roots([2.0 * x, y, 0.0, -1.0])]
    polished = []
    for b in roots:
        d = 6.0 * x * b * b + 2.0 * y * b
        if d != 0:
            b = b - _cubic(x, y, b) / d
        polished.append(b)
    roots = polished

    mult = [1, 1, 1]
    b_double = -y / (3.0 * x)
    if abs(_cubic(x, y, b_double)) <= 1e-10 * _cubic_scale(x, y, b_double):
        # the cubic and its derivative share -Y/(3X): a genuine double root
        b_simple = 1.0 / (2.0 * x * b_double * b_double)  # product of roots is 1/(2X)
        roots = [b_double, b_double, b_simple]
        mult = [2, 2, 1]
    order = sorted(range(3), key=lambda t: _sort_key(roots[t]))
    roots = tuple(roots[t] for t in order)
    mult = tuple(mult[t] for t in order)
    residuals = tuple(abs(_cubic(x, y, b)) for b in roots)
    return CubicRoots(roots, mult, residuals, x, y)


def omega_from_b(mat: Material, b: complex, delta: float, nu: complex, k: float) -> tuple:
    """Both roots ``(omega_+, omega_-)`` of

    ``(mu0 alpha delta^2 + B + B mu0 alpha delta^2 nu) omega^2 + i B gamma omega - B (beta + eta k^2) = 0``.
    """
    b = complex(b)
    lead = mat.mu0 * mat.alpha * delta * delta * (1.0 + b * nu) + b
    if abs(lead) <= 1e-300 or abs(lead) < 1e-14 * (abs(b) + mat.mu0 * mat.alpha * delta * delta * (1.0 + abs(b * nu))):
        raise DegenerateDenominator(f"quadratic leading coefficient vanishes for B={b}")
    beta_k = mat.beta + mat.eta * k * k
    root = cmath.sqrt(-(b * b) * mat.gamma**2 + 4.0 * b * beta_k * lead)
    lin = -1j * b * mat.gamma
    return (lin + root) / (2.0 * lead), (lin - root) / (2.0 * lead)


def physical_branch(pair: tuple) -> complex:
    """The branch with the larger (positive) real part."""
    w = max(pair, key=lambda z: z.real)
    if not w.real > 0:
        raise DomainError(f"no branch with positive real part in {pair}")
    return w


def three_particle_frequencies(coupling: CouplingSet, mat: Material, delta: float, k: float) -> ResonanceSet:
    """Closed-form resonances of three identical resonators, labelled by ascending real part.

    A double root of the cubic yields two coincident entries.
    """
    if coupling.n != 3:
        raise DomainError("three_particle_frequencies needs N = 3")
    p = coupling.n_pairs
    nu = np.diag(p)
    if np.max(np.abs(nu - nu[0])) > 1e-12 * abs(nu[0]):
        raise DomainError("three_particle_frequencies needs identical resonators")
    cubic = three_particle_cubic(p[0, 1], p[1, 2], p[2, 0])
    pairs = [(physical_branch(omega_from_b(mat, b, delta, nu[0], k)), m) for b, m in zip(cubic.b_roots, cubic.multiplicity)]
    pairs.sort(key=lambda t: _sort_key(t[0]))
    spec = ResonanceMatrixSpec(coupling, mat, k)
    roots = [
        Root(omega=w, residual=normalized_det(assemble_matrix(spec, w)), label=f"omega_{i + 1}_3", multiplicity=m)
        for i, (w, m) in enumerate(pairs)
    ]
    return ResonanceSet(roots)


def two_particle_resonances(coupling: CouplingSet, mat: Material, delta: float, k: float) -> tuple:
    """``(omega_mon, omega_dip)`` from ``B N12 = +-1``; ``mon`` has the lower real part."""
    if coupling.n != 2:
        raise DomainError("two_particle_resonances needs N = 2")
    p = coupling.n_pairs
    if abs(p[0, 0] - p[1, 1]) > 1e-12 * abs(p[0, 0]):
        raise DomainError("two_particle_resonances needs identical resonators")
    n12 = p[0, 1]
    if n12 == 0:
        raise NoConvergence("vanishing pairing: the two resonators decouple")
    spec = ResonanceMatrixSpec(coupling, mat, k)
    out = []
    for sign in (1.0, -1.0):
        w = physical_branch(omega_from_b(mat, sign / n12, delta, p[0, 0], k))
        out.append(Root(omega=w, residual=normalized_det(assemble_matrix(spec, w))))
    out.sort(key=lambda r: _sort_key(r.omega))
    out[0].label, out[1].label = "omega_mon2", "omega_dip2"
    return out[0], out[1]


def single_particle_root(mat: Material, nu: complex, delta: float, k: float, guess=None, opts: Optional[MullerOptions] = None) -> Root:
    """Single-particle resonance for a given ``nu``, with ``|1 - delta^2 omega^2 xi nu|`` as residual."""
    opts = opts or MullerOptions()
    nu = complex(nu)
    if nu == 0:
        raise NoConvergence("nu = 0: the pole condition 1 = 0 has no root")
    if guess is None:
        beta_k = mat.beta + mat.eta * k * k
        guess = math.sqrt(beta_k) / cmath.sqrt(1.0 + delta * delta * mat.mu0 * mat.alpha * nu)

    def q(w):
        # numerator of 1 - delta^2 w^2 xi nu over the material denominator
        return mat.pole_denominator(w, k) - delta * delta * w * w * mat.mu0 * mat.alpha * nu

    def f(w):
        den = mat.pole_denominator(w, k)
        return math.inf if den == 0 else abs(q(w) / den)

    def backward(w):
        # |q| relative to the size of its terms; |q/den| cannot drop below
        # roughly eps/|delta^2 nu| once delta is small
        a2 = abs(w * w)
        scale = abs(mat.beta + mat.eta * k * k) + a2 + mat.gamma * abs(w) + delta * delta * a2 * mat.mu0 * mat.alpha * abs(nu)
        return abs(q(w)) / scale

    g = complex(guess)
    z, it = muller(q, g * (1 - 1e-4), g * (1 + 1e-4), g, opts.tol, opts.max_iter, residual=backward)
    return Root(omega=z, residual=f(z), label="omega_s1", iterations=it)


def single_particle_resonance(
    mat: Material,
    disk: Disk,
    delta: float,
    k: float,
    guess: Optional[complex] = None,
    omega_ref: Optional[complex] = None,
    dim: int = 2,
    opts: Optional[QuadratureOptions] = None,
    muller_opts: Optional[MullerOptions] = None,
) -> complex:
    """Root of ``1 - delta^2 omega^2 xi(omega, k) nu = 0`` (``lambda`` for ``dim=3``).

    ``nu`` is frozen at ``omega_ref`` (the lossless pole by default).  Muller
    runs on the numerator quadratic and accepts on its backward error; the
    returned root's ``|1 - delta^2 omega^2 xi nu|`` is available from
    ``single_particle_root``.
    """
    opts = opts or QuadratureOptions()
    if omega_ref is None:
        omega_ref = lossless_pole(mat, k)
    k0 = background_wavenumber(mat, omega_ref, opts.k0_convention)
    order = opts.order if dim == 2 else opts.order_3d
    nu = self_eigenvalue(disk, delta, k0, opts.gamma_hat, dim, order, opts.rtol)
    return single_particle_root(mat, nu, delta, k, guess, muller_opts or MullerOptions()).omega


__all__ = [
    "modmod",
    "b_factor",
    "ResonanceMatrixSpec",
    "assemble_matrix",
    "normalized_det",
    "muller",
    "MullerOptions",
    "Root",
    "ResonanceSet",
    "default_guesses",
    "det_resonances",
    "CubicRoots",
    "three_particle_cubic",
    "omega_from_b",
    "physical_branch",
    "three_particle_frequencies",
    "two_particle_resonances",
    "single_particle_root",
    "single_particle_resonance",
]
