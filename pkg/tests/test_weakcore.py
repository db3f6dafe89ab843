import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonbark.errors import DimensionMismatch, IncompleteBasis, VanishingOverlap
from nonbark.weakcore import (
    LogComplex,
    add,
    ensemble_identity_check,
    is_projector,
    is_unitary,
    postselection_amplitude,
    weak_value_general,
)


def rand_state(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def rand_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def naive_weak_value(pre, post, A, uf, ub):
    # explicit index loops, no numpy products
    d = len(pre)
    fwd = [sum(uf[i][j] * pre[j] for j in range(d)) for i in range(d)]
    bwd = [sum(ub[i][j] * post[j] for j in range(d)) for i in range(d)]
    num = 0j
    den = 0j
    for i in range(d):
        den += bwd[i].conjugate() * fwd[i]
        for j in range(d):
            num += bwd[i].conjugate() * A[i][j] * fwd[j]
    return num / den


def test_identity_case():
    psi = np.array([0.6, 0.8j])
    assert weak_value_general(psi, psi, np.eye(2)) == pytest.approx(1.0)


def test_eigenstate_gives_eigenvalue():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = m + m.conj().T
    vals, vecs = np.linalg.eigh(h)
    assert weak_value_general(vecs[:, 2], vecs[:, 2], h) == pytest.approx(vals[2], abs=1e-12)


def test_random_4dim_matches_naive():
    rng = np.random.default_rng(2)
    for _ in range(50):
        pre, post = rand_state(rng, 4), rand_state(rng, 4)
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        uf, ub = rand_unitary(rng, 4), rand_unitary(rng, 4)
        got = weak_value_general(pre, post, A, uf, ub)
        want = naive_weak_value(pre, post, A.tolist(), uf.tolist(), ub.tolist())
        assert abs(got - want) <= 1e-12 * max(1, abs(want))


def test_weak_value_outside_spectrum():
    # nearly orthogonal pre/post: spin weak value far beyond +-1
    eps = 1e-3
    pre = np.array([math.cos(math.pi / 4 + eps), math.sin(math.pi / 4 + eps)])
    post = np.array([math.cos(math.pi / 4), -math.sin(math.pi / 4)])
    w = weak_value_general(pre, post, np.diag([1.0, -1.0]))
    assert abs(w) > 100


def test_errors():
    with pytest.raises(DimensionMismatch):
        weak_value_general(np.ones(2) / math.sqrt(2), np.ones(3) / math.sqrt(3), np.eye(2))
    with pytest.raises(DimensionMismatch):
        weak_value_general(np.array([1, 0]), np.array([1, 0]), np.eye(3))
    with pytest.raises(VanishingOverlap):
        weak_value_general(np.array([1, 0]), np.array([0, 1]), np.eye(2))


def test_postselection_amplitude():
    rng = np.random.default_rng(3)
    psi, u = rand_state(rng, 5), rand_unitary(rng, 5)
    assert abs(postselection_amplitude(psi, u @ psi, u)) == pytest.approx(1.0)
    other = rand_state(rng, 5)
    other -= np.vdot(u @ psi, other) * (u @ psi)
    assert abs(postselection_amplitude(psi, other, u)) < 1e-14


def test_ensemble_identity():
    rng = np.random.default_rng(4)
    for _ in range(20):
        psi = rand_state(rng, 3)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        basis = rand_unitary(rng, 3).T
        assert ensemble_identity_check(psi, m + m.conj().T, basis) < 1e-10
    assert ensemble_identity_check(psi, np.eye(3), np.eye(3)) < 1e-10


def test_ensemble_identity_skip_rule():
    psi = np.array([1, 1j, 0]) / math.sqrt(2)
    h = np.array([[1, 2, 0], [2, -1, 1j], [0, -1j, 3]])
    assert ensemble_identity_check(psi, h, np.eye(3)) < 1e-10


def test_ensemble_identity_incomplete():
    with pytest.raises(IncompleteBasis):
        ensemble_identity_check(np.array([1, 0, 0]), np.eye(3), np.eye(3)[:2])
    with pytest.raises(IncompleteBasis):
        ensemble_identity_check(np.array([1, 0]), np.eye(2), [[1, 0], [1, 1]])


def test_flags():
    assert is_unitary(rand_unitary(np.random.default_rng(5), 6))
    assert not is_unitary(np.diag([1, 1.1]))
    assert is_projector(np.diag([1.0, 0.0]))
    assert not is_projector(np.array([[1, 1], [0, 0]]))


# LogComplex

finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.floats(-300, 300), st.floats(-math.pi, math.pi))
def test_roundtrip(lm, ph):
    z = cmath.rect(math.exp(lm), ph)
    back = LogComplex.from_complex(z).to_complex()
    assert abs(back - z) <= 1e-12 * abs(z)


@given(finite, finite, finite, finite)
def test_mul_adds_exactly(a, p, b, q):
    r = LogComplex(a, p) * LogComplex(b, q)
    assert r.log_mag == a + b
    assert math.cos(r.phase) == pytest.approx(math.cos(p + q), abs=1e-9)


@given(finite, st.floats(-50, 50))
def test_phase_range(lm, ph):
    z = LogComplex(lm, ph)
    assert -math.pi < z.phase <= math.pi


def test_pi_maps_to_pi():
    assert LogComplex(0.0, -math.pi).phase == math.pi
    assert LogComplex.from_complex(-2.0).phase == math.pi


def test_huge_factors_cancel():
    x = 2.5e7
    z = LogComplex(x) * LogComplex(-x)
    assert z.to_complex() == 1
    assert LogComplex.exp(complex(x, 1.0)).log_mag == x


def test_add_exact_and_truncated():
    v, trunc = LogComplex.from_complex(1 + 2j).add(LogComplex.from_complex(3 - 1j))
    assert not trunc and v.to_complex() == pytest.approx(4 + 1j, rel=1e-15)
    v, trunc = LogComplex(800.0).add(LogComplex(0.0))
    assert trunc and v == LogComplex(800.0)
    v, trunc = add(1.0, -1.0)
    assert v.is_zero and not trunc
    assert (LogComplex.from_complex(2) - 2).is_zero


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=200)
def test_add_matches_complex(a, b, c, d):
    z1, z2 = complex(a, b), complex(c, d)
    got = (LogComplex.from_complex(z1) + LogComplex.from_complex(z2)).to_complex()
    assert abs(got - (z1 + z2)) <= 1e-12 * max(1.0, abs(z1) + abs(z2))


def test_div_pow_conj_neg():
    a = LogComplex.from_complex(3 + 4j)
    assert (a / a).to_complex() == pytest.approx(1)
    assert (a**3).to_complex() == pytest.approx((3 + 4j) ** 3)
    assert (a**-2).to_complex() == pytest.approx((3 + 4j) ** -2)
    assert a.conj().to_complex() == pytest.approx(3 - 4j)
    assert (-a).to_complex() == pytest.approx(-3 - 4j)
    assert (2 / a).to_complex() == pytest.approx(2 / (3 + 4j))
    with pytest.raises(TypeError):
        a**0.5
    with pytest.raises(ZeroDivisionError):
        a / 0


def test_invalid_components():
    with pytest.raises(ValueError):
        LogComplex(float("nan"))
    with pytest.raises(ValueError):
        LogComplex(float("inf"))
