"""Two-state-vector weak values over finite-dimensional state spaces.

States are 1-D complex numpy arrays and operators are square 2-D complex
arrays; evolution operators default to the identity.  The module also hosts
:class:`LogComplex`, the (log-magnitude, phase) number type the tunneling
closed forms use to keep factors like ``exp(b**2 * k0**2)`` representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IncompleteBasis, VanishingOverlap

EPS_DEN = 1e-300
ADD_CUTOFF = 700.0


def as_state(v, normalized=True, tol=1e-10):
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"state must be a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("state has non-finite amplitudes")
    if normalized and abs(np.vdot(v, v).real - 1.0) > tol:
        raise ValueError(f"state norm^2 = {np.vdot(v, v).real!r}, expected 1")
    return v


def as_operator(a, dim=None):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionMismatch(f"operator dim {a.shape[0]} != state dim {dim}")
    return a


def unitarity_defect(u):
    u = as_operator(u)
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def is_unitary(u, tol=1e-9):
    return unitarity_defect(u) < tol


def is_projector(p, tol=1e-12):
    p = as_operator(p)
    return bool(np.max(np.abs(p @ p - p)) < tol and np.max(np.abs(p - p.conj().T)) < tol)


def _check_dims(pre, post, *ops):
    if pre.shape != post.shape:
        raise DimensionMismatch(f"pre dim {pre.size} != post dim {post.size}")
    return [None if op is None else as_operator(op, pre.size) for op in ops]


def weak_value_general(pre, post, A, U_fwd=None, U_bwd=None, eps_den=EPS_DEN):
    """<post|U_bwd^+ A U_fwd|pre> / <post|U_bwd^+ U_fwd|pre>.

    Raises VanishingOverlap when the denominator magnitude is below
    ``eps_den``; the weak value is undefined for orthogonal pre/post pairs.
    """
    pre = as_state(pre, normalized=False)
    post = as_state(post, normalized=False)
    A, U_fwd, U_bwd = _check_dims(pre, post, A, U_fwd, U_bwd)
    fwd = pre if U_fwd is None else U_fwd @ pre
    bwd = post if U_bwd is None else U_bwd @ post
    den = np.vdot(bwd, fwd)
    if not abs(den) > eps_den:
        raise VanishingOverlap(f"|<post|pre>| = {abs(den):.3e} below {eps_den:.1e}")
    return complex(np.vdot(bwd, A @ fwd) / den)


def postselection_amplitude(pre, post, U_total=None):
    pre = as_state(pre, normalized=False)
    post = as_state(post, normalized=False)
    (U_total,) = _check_dims(pre, post, U_total)
    return complex(np.vdot(post, pre if U_total is None else U_total @ pre))


def ensemble_identity_check(psi, A, basis, tol=1e-10, eps_den=EPS_DEN):
    """Residual of <psi|A|psi> = sum_i |<psi|phi_i>|^2 * weak value of A at phi_i.

    Terms with vanishing overlap are skipped after checking that their
    contribution <psi|phi_i><phi_i|A|psi> is negligible.
    """
    psi = as_state(psi, normalized=False)
    A = as_operator(A, psi.size)
    B = np.asarray(basis, dtype=complex)
    if B.ndim != 2 or B.shape[1] != psi.size:
        raise DimensionMismatch(f"basis shape {B.shape} incompatible with dim {psi.size}")
    if B.shape[0] != psi.size or np.max(np.abs(B.conj() @ B.T - np.eye(psi.size))) > tol:
        raise IncompleteBasis("basis is not complete and orthonormal to 1e-10")
    a_psi = A @ psi
    lhs = np.vdot(psi, a_psi)
    total = 0j
    for phi in B:
        ov = np.vdot(phi, psi)
        amp = np.vdot(phi, a_psi)
        if abs(ov) < eps_den:
            if abs(np.conj(ov) * amp) > tol:
                raise VanishingOverlap("skipped basis term carries a non-negligible contribution")
            continue
        total += abs(ov) ** 2 * (amp / ov)
    return float(abs(lhs - total))


def _unit(phase):
    # exact on the axes so that z + (-z) cancels to zero
    r = _wrap(phase)
    for k, u in ((0.0, 1), (math.pi, -1), (math.pi / 2, 1j), (-math.pi / 2, -1j)):
        if r == k:
            return complex(u)
    return complex(math.cos(r), math.sin(r))


def _wrap(phase):
    r = math.remainder(phase, 2.0 * math.pi)
    return math.pi if r == -math.pi else r


@dataclass(frozen=True)
class LogComplex:
    """Complex number stored as (natural log of magnitude, phase in (-pi, pi]).

    Zero is represented by ``log_mag = -inf``.
    """

    log_mag: float
    phase: float = 0.0

    def __post_init__(self):
        if math.isnan(self.log_mag) or math.isnan(self.phase) or math.isinf(self.phase):
            raise ValueError("LogComplex components must not be NaN")
        if self.log_mag == math.inf:
            raise ValueError("LogComplex magnitude overflowed")
        object.__setattr__(self, "phase", 0.0 if self.log_mag == -math.inf else _wrap(self.phase))

    @classmethod
    def from_complex(cls, z):
        z = complex(z)
        if z == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))

    @classmethod
    def exp(cls, z):
        """exp(z) without ever forming it."""
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def is_zero(self):
        return self.log_mag == -math.inf

    def to_complex(self):
        if self.is_zero:
            return 0j
        m = math.exp(self.log_mag)
        return complex(m * math.cos(self.phase), m * math.sin(self.phase))

    __complex__ = to_complex

    def __mul__(self, other):
        other = _lift(other)
        return LogComplex(self.log_mag + other.log_mag, self.phase + other.phase)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        if other.is_zero:
            raise ZeroDivisionError("LogComplex division by zero")
        return LogComplex(self.log_mag - other.log_mag, self.phase - other.phase)

    def __rtruediv__(self, other):
        return _lift(other) / self

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are exact in the log domain")
        n = int(n)
        if n == 0:
            return LogComplex(0.0, 0.0)
        if self.is_zero:
            if n < 0:
                raise ZeroDivisionError("negative power of zero")
            return self
        return LogComplex(self.log_mag * n, self.phase * n)

    def __neg__(self):
        return LogComplex(self.log_mag, self.phase + math.pi)

    def conj(self):
        return LogComplex(self.log_mag, -self.phase)

    def add(self, other):
        """Return ``(self + other, truncated)``.

        When the log-magnitudes differ by more than 700 the smaller term is
        dropped and ``truncated`` is True.
        """
        other = _lift(other)
        if self.is_zero:
            return other, False
        if other.is_zero:
            return self, False
        big, small = (self, other) if self.log_mag >= other.log_mag else (other, self)
        d = big.log_mag - small.log_mag
        if d > ADD_CUTOFF:
            return big, True
        z = 1.0 + math.exp(-d) * _unit(small.phase - big.phase)
        if z == 0:
            return LogComplex(-math.inf), False
        return LogComplex(big.log_mag + math.log(abs(z)), big.phase + math.atan2(z.imag, z.real)), False

    def __add__(self, other):
        return self.add(other)[0]

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_lift(other))


def _lift(x):
    return x if isinstance(x, LogComplex) else LogComplex.from_complex(x)


def mul(a, b):
    return _lift(a) * _lift(b)


def div(a, b):
    return _lift(a) / _lift(b)


def pow_int(a, n):
    return _lift(a) ** n


def add(a, b):
    return _lift(a).add(b)
