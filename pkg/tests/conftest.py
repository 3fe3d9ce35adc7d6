import numpy as np
import pytest
from hypothesis import settings

from perovres.material import Material

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def sample_material():
    # same constants as the shipped sample config
    return Material(1.0, 1.0, 1.0, 1.0, 0.05, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def uniform_disk(rng, n, radius, center=(0.0, 0.0)):
    r = radius * np.sqrt(rng.random(n))
    t = 2.0 * np.pi * rng.random(n)
    return np.column_stack((center[0] + r * np.cos(t), center[1] + r * np.sin(t)))


def uniform_ball(rng, n, radius, center=(0.0, 0.0, 0.0)):
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return np.asarray(center) + radius * rng.random(n)[:, None] ** (1.0 / 3.0) * v


def mc_mean(rng, sampler_i, sampler_j, f, total=10_000_000, chunk=1_000_000):
    """Monte Carlo mean of ``f(|x - y|)`` with ``x ~ sampler_i``, ``y ~ sampler_j``."""
    acc = 0.0
    for _ in range(total // chunk):
        r = np.linalg.norm(sampler_i(rng, chunk) - sampler_j(rng, chunk), axis=1)
        acc += np.sum(f(r))
    return acc / total


def random_three_disks(rng, rho=1.0, lo=3.0, hi=8.0):
    """Three identical disjoint disks with centre distances in ``[lo, hi] * rho``."""
    from perovres.coupling import Disk

    while True:
        c = rng.uniform(0.0, hi * rho, size=(3, 2))
        d = [np.linalg.norm(c[i] - c[j]) for i, j in ((0, 1), (1, 2), (0, 2))]
        if min(d) > lo * rho and max(d) < hi * rho:
            return [Disk(tuple(p), rho) for p in c]


def random_design_case(rng, rho=1.0):
    """Admissible distances ``(a1, a2, a3)`` (strict triangle) and a scale ``delta``."""
    from perovres.inverse import triangle_filter

    while True:
        a1, a2, a3 = rng.uniform(4.0 * rho, 12.0 * rho, 3)
        if triangle_filter(a1, a2, a3) and abs(a3 - a2) + 0.5 * rho < a1 < a3 + a2 - 0.5 * rho:
            return (a1, a2, a3), float(rng.uniform(0.005, 0.05))
