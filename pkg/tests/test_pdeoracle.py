import math

import numpy as np
import pytest

from nonbark import pdeoracle as po
from nonbark.errors import StabilityViolation
from nonbark.tunneling import TunnelParams

SMALL = TunnelParams(b=1.0, mu=400.0, kappa=20.0, k0=20.0, L=10.0)


def exact_free(x, t, b, k0, x0, mu):
    # spreading Gaussian, written from the Fourier solution
    a = b * b + 1j * t / mu
    y = x - x0 - k0 * t / mu
    return (math.pi * b * b) ** -0.25 * np.sqrt(b * b / a) * np.exp(
        1j * k0 * (x - x0) - 1j * k0 * k0 * t / (2 * mu) - y * y / (2 * a)
    )


def test_exact_free_formula_agrees():
    x = np.linspace(-5, 15, 101)
    assert np.allclose(exact_free(x, 3.0, 1.0, 2.0, 0.0, 1.0), po.free_gaussian_exact(x, 3.0, 1.0, 2.0, 0.0, 1.0))


def test_grid_checks():
    g = po.Grid.for_run(SMALL, 10.0)
    g.check(SMALL.k0, SMALL.mu)
    assert SMALL.k0 * g.dx <= 0.1 + 1e-12
    assert g.dt * SMALL.k0**2 / (2 * SMALL.mu) <= 0.05 + 1e-12
    with pytest.raises(StabilityViolation):
        po.Grid(-1, 1, 11, 1e-3).check(SMALL.k0, SMALL.mu)
    with pytest.raises(StabilityViolation):
        po.Grid(-1, 1, 20001, 10.0).check(SMALL.k0, SMALL.mu)
    with pytest.raises(StabilityViolation):
        po.BarrierProfile(1.0, 1.0).check(SMALL.k0)


@pytest.mark.parametrize("n", [2001, 2002, 3337])
def test_barrier_weight(n):
    g = po.Grid(-1.0, 1.0, n, 0.1)
    bar = po.BarrierProfile(0.05, 1 / 500)
    assert abs(bar.sample(g).sum() * g.dx - 0.05) < 1e-10 * 0.05


def test_zero_steps_identity():
    g = po.Grid(-5, 5, 501, 0.01)
    psi = po.gaussian_packet(g.x, 1.0, 2.0, 0.0)
    assert np.array_equal(po.evolve(psi, g, steps=0), psi)


def test_free_motion_speed():
    b, k0, mu = 1.0, 5.0, 5.0
    g = po.Grid(-10.0, 40.0, 2501, 0.02)
    g.check(k0, mu)
    psi0 = po.gaussian_packet(g.x, b, k0, 0.0)
    psi = po.evolve(psi0, g, None, 1000, mu, k0)
    rho = np.abs(psi) ** 2
    center = np.sum(g.x * rho) / np.sum(rho)
    assert center == pytest.approx(k0 / mu * 20.0, rel=0.005)


def test_norm_conservation():
    g = po.Grid(-20.0, 20.0, 801, 0.05)
    psi0 = po.gaussian_packet(g.x, 1.0, 1.0, -5.0)
    bar = po.BarrierProfile(0.5, 0.05)
    psi = po.evolve(psi0, g, bar, 10_000, 1.0)
    assert abs(po.norm(psi, g) - po.norm(psi0, g)) < 1e-8


def test_second_order_convergence():
    errs = [e for _, _, e in po.grid_convergence(levels=3)]
    for a, b in zip(errs, errs[1:]):
        assert 3 <= a / b <= 5


def test_transmission_without_barrier():
    free = TunnelParams(b=1.0, mu=400.0, kappa=0.0, k0=20.0, L=10.0)
    assert po.transmission_probe(free) == pytest.approx(1.0, abs=1e-6)


def test_transmission_strong_barrier():
    p = TunnelParams(b=1.0, mu=400.0, kappa=200.0, k0=20.0, L=10.0)
    assert po.transmission_probe(p) == pytest.approx(1 / 101, rel=0.05)


def test_barrier_width_insensitive():
    w = 1 / (10 * SMALL.k0)
    a = po.transmission_probe(SMALL, barrier=po.BarrierProfile.delta(SMALL, w))
    b = po.transmission_probe(SMALL, barrier=po.BarrierProfile.delta(SMALL, w / 2))
    assert abs(a - b) / a < 0.005
    assert a == pytest.approx(po.expected_transmission(SMALL), rel=0.02)


@pytest.fixture(scope="module")
def scaled_run():
    p = TunnelParams(**po.SCALED)
    u = p.L / p.v
    x = np.linspace(-2 * p.L, 3 * p.L, 250_001)
    return p, po.weak_value_pde(x, 3 * u, 6 * u, p)


@pytest.mark.slow
def test_pde_weak_value_integrates_to_one(scaled_run):
    p, s = scaled_run
    assert abs(np.trapezoid(s.values, s.coords) - 1) < 1e-4


@pytest.mark.slow
def test_pde_weak_value_peak_and_wavelength(scaled_run):
    p, s = scaled_run
    outside = s.coords > 0
    xs, ws = s.coords[outside], s.values[outside]
    assert abs(xs[np.argmax(np.abs(ws))] - 2 * p.L) < p.b
    near = np.abs(xs - 2 * p.L) < 1.5 * p.b
    zc = np.where(np.diff(np.sign(ws.real[near])) != 0)[0]
    lam = 2 * (xs[near][zc[-1]] - xs[near][zc[0]]) / (len(zc) - 1)
    assert lam == pytest.approx(math.pi / p.k0, rel=0.05)
    assert s.metadata["mode"] == "tunnel_pde"
