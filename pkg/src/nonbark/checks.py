"""Self-test suite run by ``nonbark check``.

Each check returns a CheckResult; the suite passes when all of them do.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import atombath as ab
from . import tunneling as tn
from .weakcore import LogComplex, ensemble_identity_check, weak_value_general


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _random_state(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def _random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def check_engine(rng, count=200):
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(2, 7))
        pre, post = _random_state(rng, d), _random_state(rng, d)
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        uf, ub = _random_unitary(rng, d), _random_unitary(rng, d)
        w = weak_value_general(pre, post, a, uf, ub)
        fwd, bwd = uf @ pre, ub @ post
        num = sum(bwd[i].conjugate() * a[i, j] * fwd[j] for i in range(d) for j in range(d))
        den = sum(bwd[i].conjugate() * fwd[i] for i in range(d))
        worst = max(worst, abs(w - num / den) / max(1.0, abs(num / den)))
    return worst < 1e-11, f"max deviation from explicit sums {worst:.2e}"


def check_ensemble(rng, count=50):
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(2, 6))
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        worst = max(worst, ensemble_identity_check(_random_state(rng, d), m + m.conj().T, _random_unitary(rng, d).T))
    return worst < 1e-10, f"max residual {worst:.2e}"


def check_logcomplex(rng, count=200):
    worst = 0.0
    for _ in range(count):
        z = complex(*rng.normal(size=2)) * 10 ** rng.uniform(-100, 100)
        worst = max(worst, abs(LogComplex.from_complex(z).to_complex() - z) / abs(z))
    big = LogComplex(2.5e7) * LogComplex(-2.5e7, 1.0)
    ok = worst < 1e-12 and abs(big.to_complex() - complex(math.cos(1), math.sin(1))) < 1e-12
    return ok, f"round-trip {worst:.2e}; exp(X)*exp(-X) recovered"


def check_atom_sum(rng, fast):
    worst = 0.0
    for _ in range(3 if fast else 8):
        n = int(rng.integers(10, 60 if fast else 200))
        g = float(rng.uniform(0.5, 2.0))
        tf = float(rng.uniform(0.5, 3.0)) / g
        m = ab.BathModel.calibrated(g, n)
        w = ab.weak_values_numeric(m, 0.0, tf, [float(rng.uniform(0, tf))])[0]
        worst = max(worst, abs(w.sum() - 1))
    return worst < 1e-10, f"full-basis sum deviates from 1 by {worst:.2e}"


def check_atom_closed_forms(rng, fast):
    m = ab.BathModel.calibrated(1.0, 100)
    zeros = max(
        abs(ab.weak_value_bath(m, ab.TimeWindow(0, t, 4), n)) for t in (0.0, 4.0) for n in range(-100, 101)
    )
    r = ab.weak_value_resonant(1.0, ab.TimeWindow(0, 4, 8), 1.0) / ab.weak_value_resonant(1.0, ab.TimeWindow(0, 3, 6), 1.0)
    ok = zeros == 0 and math.exp(2) * 0.8 <= abs(r) <= math.exp(2) * 1.2
    return ok, f"window-end weak values {zeros:g}; growth ratio {abs(r):.4f} vs e^2 = {math.exp(2):.4f}"


def check_tunnel(rng, fast):
    p = tn.FIG2
    u = p.L / p.v
    a = abs(tn.weak_value_sweetspot(1, 1, 1, 1, 2 * p.L, p))
    b = abs(tn.weak_value_sweetspot(2, 2, 2, 2, 2 * p.L, p))
    d = abs(tn.weak_value_sweetspot(1, 1, 2, 2, 6 * p.L, p))
    x = np.linspace(2 * p.L - 5, 2 * p.L + 5, 801)
    q = tn.weak_value_numeric(x, 3 * u, 6 * u, p)
    c = tn.weak_value_sweetspot(1, 1, 1, 1, x, p)
    dev = float(np.max(np.abs(q - c)) / np.max(np.abs(c)))
    ok = abs(a - 14.10) < 0.141 and abs(d / b - 26) < 0.26 and dev < 1e-8
    return ok, f"peak A {a:.4f}, D/B {d / b:.4f}, closed form vs quadrature {dev:.1e}"


def check_pde(rng, fast):
    from .pdeoracle import SCALED, expected_transmission, transmission_probe

    p = tn.TunnelParams(**SCALED)
    got, want = transmission_probe(p), expected_transmission(p)
    return abs(got / want - 1) < 0.02, f"|tau|^2 {got:.5f} vs {want:.5f}"


CHECKS = [
    ("engine", check_engine, False),
    ("ensemble-identity", check_ensemble, False),
    ("logcomplex", check_logcomplex, False),
    ("atom-sum-rule", check_atom_sum, True),
    ("atom-closed-forms", check_atom_closed_forms, True),
    ("tunnel-sweet-spots", check_tunnel, True),
    ("pde-transmission", check_pde, True),
]


def run_checks(seed=0, fast=False):
    rng = np.random.default_rng(seed)
    results = []
    for name, fn, takes_fast in CHECKS:
        if fast and name == "pde-transmission":
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng, fast) if takes_fast else fn(rng)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
