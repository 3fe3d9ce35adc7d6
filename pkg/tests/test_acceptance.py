"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math
import subprocess
import sys
import time

import mpmath as mp
import numpy as np

from configs import MALFORMED
from conftest import mc_mean, random_design_case, random_three_disks, uniform_ball
from perovres.cli import load_config, run, sweep, sweep_deltas
from perovres.coupling import (
    Configuration,
    Disk,
    build_coupling_set,
    coupling_n,
    dilute_constants,
    pairing_deriv,
    pairing_full3d,
    pairing_static,
)
from perovres.inverse import DesignTargets, default_alpha3_grid, design_family, forward_targets, geometry_from_distances
from perovres.material import Material, lossless_pole
from perovres.specfun import bessel_j0, bessel_y0, hankel1_0
from perovres.spectrum import ResonanceMatrixSpec, b_factor, det_resonances, three_particle_cubic, three_particle_frequencies

MAT = Material(1.0, 1.0, 1.0, 1.0, 0.05, 0.1)
K = 1.0


class Gate:
    def __init__(self, capsys, number, title, budget):
        self.capsys, self.number, self.title, self.budget = capsys, number, title, budget
        self.checks = []

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def check(self, ok, detail):
        self.checks.append((bool(ok), detail))

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        self.check(elapsed < self.budget, f"runtime {elapsed:.2f}s < {self.budget}s")
        if exc_type is not None:
            self.check(False, f"raised {exc_type.__name__}: {exc}")
        ok = all(c for c, _ in self.checks)
        lines = "; ".join(d for _, d in self.checks)
        with self.capsys.disabled():
            print(f"\n[criterion {self.number}] {'PASS' if ok else 'FAIL'} {self.title}: {lines}")
        assert ok, lines
        return False


# ---------------------------------------------------------------------------


def _series_h0(z):
    mp.mp.dps = 40
    z = mp.mpf(z)
    q = (z / 2) ** 2
    term, j0, tail, harm, m = mp.mpf(1), mp.mpf(1), mp.mpf(0), mp.mpf(0), 0
    while True:
        m += 1
        term *= -q / (m * m)
        harm += mp.mpf(1) / m
        j0 += term
        tail -= term * harm
        if abs(term * harm) < mp.mpf(10) ** -36:
            break
    y0 = 2 / mp.pi * ((mp.log(z / 2) + mp.euler) * j0 + tail)
    return complex(float(j0), float(y0))


def test_criterion_1_special_functions(capsys):
    zs = np.linspace(0.1, 10.0, 200)
    oracle = [_series_h0(z) for z in zs]
    with Gate(capsys, 1, "special-function fidelity", 1.0) as g:
        err = max(abs(hankel1_0(z) - o) for z, o in zip(zs, oracle))
        g.check(err < 1e-10, f"max |H0 - series| = {err:.2e} < 1e-10 on 200 points")
        h = 1e-6
        worst = 0.0
        for x in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0):
            dj = (bessel_j0(x + h) - bessel_j0(x - h)) / (2 * h)
            dy = (bessel_y0(x + h) - bessel_y0(x - h)) / (2 * h)
            worst = max(worst, abs(bessel_j0(x) * dy - dj * bessel_y0(x) - 2.0 / (math.pi * x)))
        g.check(worst < 1e-9, f"Wronskian residual {worst:.2e} < 1e-9")


def test_criterion_2_quadrature(capsys):
    with Gate(capsys, 2, "quadrature correctness", 10.0) as g:
        worst = 0.0
        for rho in (0.05, 0.1, 0.5):
            d = Disk((0.0, 0.0), rho)
            exact = -(1.0 / (2 * math.pi)) * math.pi * rho**2 * (math.log(rho) - 0.25)
            worst = max(worst, abs(pairing_static(d, d).real - exact) / abs(exact))
        g.check(worst < 1e-8, f"mean-log self term rel. error {worst:.2e} < 1e-8")
        rho = 0.05
        a, b = Disk((0, 0), rho), Disk((100 * rho, 0), rho)
        area, dist = math.pi * rho**2, 100 * rho
        e_s = abs(pairing_static(a, b).real / (-math.log(dist) * area / (2 * math.pi)) - 1)
        e_d = abs(pairing_deriv(a, b).imag / (-area / (4 * math.pi * dist)) - 1)
        g.check(max(e_s, e_d) < 1e-3, f"far-field rel. errors static {e_s:.2e}, deriv {e_d:.2e} < 1e-3")


def test_criterion_3_dilute_slope(capsys):
    with Gate(capsys, 3, "dilute linearization slope", 30.0) as g:
        deltas = np.array([0.02, 0.01, 0.005, 0.0025])
        errs = []
        for delta in deltas:
            # rho = delta, unit centre distance, k0 = 1
            s, q = dilute_constants(delta, delta, 1.0)
            n = coupling_n(Disk((0, 0), delta), Disk((1.0, 0), delta), delta, 1.0)
            errs.append(abs(n - (s + q * 1.0)))
        slope = np.polyfit(np.log(deltas), np.log(errs), 1)[0]
        g.check(slope >= 3.0, f"log-log slope {slope:.4f} >= 3.0")


def test_criterion_4_closed_form_equivalence(capsys):
    rng = np.random.default_rng(4)
    with Gate(capsys, 4, "closed-form / Muller equivalence", 60.0) as g:
        worst_rel, worst_res = 0.0, 0.0
        for _ in range(20):
            cs = build_coupling_set(Configuration(random_three_disks(rng), 0.02), MAT, lossless_pole(MAT, K))
            res = det_resonances(ResonanceMatrixSpec(cs, MAT, K))
            got = res.omegas
            want = three_particle_frequencies(cs, MAT, 0.02, K).omegas
            if len(got) != 3:
                worst_rel = math.inf
                continue
            worst_rel = max(worst_rel, float(np.max(np.abs(got - want) / np.abs(want))))
            worst_res = max(worst_res, max(r.residual for r in res.roots))
        g.check(worst_rel < 1e-8, f"max relative gap {worst_rel:.2e} < 1e-8 over 20 configurations")
        g.check(worst_res < 1e-10, f"max normalised det residual {worst_res:.2e} < 1e-10")


def test_criterion_5_hybridization(capsys):
    cfg = load_config("@sample")
    with Gate(capsys, 5, "hybridization structure", 120.0) as g:
        deltas = sweep_deltas(0.05 / 2**15, 0.05, 16)
        rows, all_ok = sweep(cfg, deltas, kappa=4.0, rho=1.0)
        interleaved, spreads = 0, []
        for r in rows:
            re = r[1:7]
            if any(math.isnan(v) for v in r[1:]):
                continue
            s1, mon, dip, w1, w2, w3 = re
            interleaved += w1 < mon < w2 < dip < w3
            ws = complex(r[1], r[7])
            spreads.append(max(abs(complex(r[i], r[i + 6]) - ws) for i in (4, 5, 6)))
        converged = len(spreads)
        g.check(converged == 16, f"{converged}/16 points converged")
        g.check(interleaved == converged, f"interleaving at {interleaved}/{converged} points")
        mono = all(b < a for a, b in zip(spreads, spreads[1:]))
        g.check(mono, f"spread decreases monotonically ({spreads[0]:.2e} -> {spreads[-1]:.2e})")


def test_criterion_6_equilateral(capsys):
    with Gate(capsys, 6, "equilateral degeneracy", 1.0) as g:
        side = 4.0
        disks = [Disk((0, 0), 1.0), Disk((side, 0), 1.0), Disk((side / 2, side * math.sqrt(3) / 2), 1.0)]
        cs = build_coupling_set(Configuration(disks, 0.02), MAT, lossless_pole(MAT, K))
        n = cs.n_pairs[0, 1]
        cubic = three_particle_cubic(cs.n_pairs[0, 1], cs.n_pairs[1, 2], cs.n_pairs[2, 0])
        mult = sorted(cubic.multiplicity)
        g.check(mult == [1, 2, 2], f"multiplicities {cubic.multiplicity}")
        fact = max(abs((n * b + 1) ** 2 * (2 * n * b - 1)) for b in cubic.b_roots)
        g.check(max(cubic.residuals) < 1e-10 and fact < 1e-10, f"cubic residual {max(cubic.residuals):.2e}, factored form {fact:.2e} < 1e-10")
        w = three_particle_frequencies(cs, MAT, 0.02, K).omegas
        gap = min(abs(w[0] - w[1]), abs(w[1] - w[2])) / abs(w[1])
        g.check(gap < 1e-8, f"coincident pair relative gap {gap:.2e} < 1e-8")


def test_criterion_7_inverse_round_trip(capsys):
    rng = np.random.default_rng(7)
    rho = 1.0
    with Gate(capsys, 7, "inverse round trip", 180.0) as g:
        worst_delta, worst_dist, worst_cubic, found = 0.0, 0.0, 0.0, 0
        for _ in range(10):
            (a1, a2, a3), delta = random_design_case(rng, rho)
            w = forward_targets(geometry_from_distances(a1, a2, a3, rho), delta, MAT, K)
            fam = design_family(DesignTargets(w, K, MAT, rho), list(default_alpha3_grid(rho)) + [a3])
            worst_delta = max(worst_delta, abs(fam.delta - delta) / delta)
            errs = [max(abs(s.alpha1 - a1) / a1, abs(s.alpha2 - a2) / a2) for s in fam if s.alpha3 == a3]
            if errs:
                worst_dist = max(worst_dist, min(errs))
                found += min(errs) < 1e-5
            else:
                worst_dist = math.inf
            worst_cubic = max([worst_cubic] + [max(s.cubic_residuals) for s in fam])
        g.check(worst_delta < 1e-6, f"delta recovered to {worst_delta:.2e} < 1e-6")
        g.check(found == 10, f"generating distances found in {found}/10 families (worst {worst_dist:.2e} < 1e-5)")
        g.check(worst_cubic < 1e-7, f"max cubic residual {worst_cubic:.2e} < 1e-7")


def test_criterion_8_three_dimensional(capsys):
    rng = np.random.default_rng(8)
    with Gate(capsys, 8, "3D appendix parity", 120.0) as g:
        delta = 0.05
        conf = Configuration([Disk((0, 0, 0), 1.0), Disk((3, 0, 0), 1.0)], delta, dim=3)
        cs = build_coupling_set(conf, MAT, lossless_pole(MAT, K))
        res = det_resonances(ResonanceMatrixSpec(cs, MAT, K))
        r12 = cs.n_pairs[0, 1]
        worst = 0.0
        for root in res.roots:
            a = b_factor(MAT, root.omega, K, delta, cs.n_pairs[0, 0])
            worst = max(worst, min(abs(a * r12 - 1), abs(a * r12 + 1)))
        g.check(len(res.roots) == 2, f"{len(res.roots)} roots")
        g.check(worst < 1e-8, f"|A R - (+-1)| = {worst:.2e} < 1e-8")
        k = 0.8
        ball = lambda c: (lambda gen, n: uniform_ball(gen, n, 1.0, c))
        kern = lambda r: -np.exp(1j * k * r) / (4 * math.pi * r)
        vol = 4.0 * math.pi / 3.0
        b0, b1 = Disk((0, 0, 0), 1.0), Disk((2.5, 0, 0), 1.0)
        mc_pair = mc_mean(rng, ball((0, 0, 0)), ball((2.5, 0, 0)), kern) * vol
        mc_self = mc_mean(rng, ball((0, 0, 0)), ball((0, 0, 0)), kern) * vol
        e_pair = abs(pairing_full3d(b0, b1, k) - mc_pair) / abs(mc_pair)
        e_self = abs(pairing_full3d(b0, b0, k) - mc_self) / abs(mc_self)
        g.check(max(e_pair, e_self) < 1e-3, f"Monte Carlo (1e7 samples) rel. errors pair {e_pair:.1e}, self {e_self:.1e} < 1e-3")


def test_criterion_9_cli(capsys, tmp_path):
    with Gate(capsys, 9, "CLI determinism and validation", 60.0) as g:
        blobs = []
        for i in range(2):
            proc = subprocess.run(
                [sys.executable, "-m", "perovres", "sweep", "--config", "@sample", "--format", "csv"],
                capture_output=True,
            )
            g.check(proc.returncode == 0, f"sweep run {i + 1} exit {proc.returncode}")
            blobs.append(proc.stdout)
        g.check(blobs[0] == blobs[1] and len(blobs[0]) > 0, "repeated sweep CSV byte-identical")
        rejected = 0
        for name, text, key in MALFORMED:
            path = tmp_path / f"{name}.json"
            path.write_text(text)
            code = run(["validate", "--config", str(path)])
            _, err = capsys.readouterr()
            rejected += code == 2 and key in err
        g.check(rejected == len(MALFORMED) >= 10, f"{rejected}/{len(MALFORMED)} malformed configs rejected with exit 2 and key-level message")
