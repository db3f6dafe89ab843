"""Excited reference atom coupled to an equispaced bath of 2N+1 two-level atoms.

The single-excitation sector has 2N+2 basis states.  Index 0 is the reference
atom excited; index ``1 + N + n`` is bath atom ``n`` (``-N <= n <= N``) excited.
Energies are ``e0`` and ``e0 + n * delta_e`` and every bath level couples to
the reference level with the same real strength ``coupling``.

Two routes are provided: a finite-N ODE integration (classical RK4 with
step-doubling control) and the continuum-limit closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWindow, NonConvergence, UnsupportedElement, VanishingOverlap
from .weakcore import EPS_DEN

REF = "ref"
ODE_TOL = 1e-10
ROUNDOFF = 1e-15


@dataclass(frozen=True)
class BathModel:
    n_side: int
    delta_e: float
    coupling: float
    e0: float = 0.0
    gamma: float = field(default=None)

    def __post_init__(self):
        if int(self.n_side) != self.n_side or self.n_side < 1:
            raise ValueError("n_side must be a positive integer")
        if not self.delta_e > 0:
            raise ValueError("delta_e must be > 0")
        if self.coupling < 0:
            raise ValueError("coupling must be >= 0")
        if self.gamma is None:
            object.__setattr__(self, "gamma", math.pi * self.coupling**2 / self.delta_e)
        elif not self.gamma > 0:
            raise ValueError("gamma must be > 0")

    @classmethod
    def calibrated(cls, gamma, n_side, band=None, e0=0.0):
        """Finite-N model whose continuum limit decays at ``gamma``.

        ``band`` is the half-width ``n_side * delta_e`` of the bath.  The
        default ``10 * gamma * sqrt(n_side)`` widens with N so that both the
        level spacing and the band-edge error vanish as N grows.
        """
        if band is None:
            band = 10.0 * gamma * math.sqrt(n_side)
        delta_e = band / n_side
        return cls(n_side, delta_e, math.sqrt(gamma * delta_e / math.pi), e0, gamma)

    @property
    def dim(self):
        return 2 * self.n_side + 2

    @property
    def levels(self):
        return np.arange(-self.n_side, self.n_side + 1)

    def index(self, n):
        if n == REF:
            return 0
        if not -self.n_side <= n <= self.n_side:
            raise IndexError(f"bath index {n} outside [-{self.n_side}, {self.n_side}]")
        return 1 + self.n_side + int(n)

    def energies(self):
        return np.concatenate([[self.e0], self.e0 + self.levels * self.delta_e])

    def hamiltonian(self):
        h = np.diag(self.energies()).astype(complex)
        h[0, 1:] = self.coupling
        h[1:, 0] = self.coupling
        return h


@dataclass(frozen=True)
class TimeWindow:
    t_i: float
    t: float
    t_f: float

    def __post_init__(self):
        if not self.t_i <= self.t <= self.t_f:
            raise ValueError(f"need t_i <= t <= t_f, got {self.t_i}, {self.t}, {self.t_f}")

    @property
    def elapsed(self):
        return self.t - self.t_i

    @property
    def remaining(self):
        return self.t_f - self.t

    @property
    def duration(self):
        return self.t_f - self.t_i


def _apply_h(model, y, energies):
    # arrowhead Hamiltonian: diagonal plus one coupled row/column
    out = energies.reshape((-1,) + (1,) * (y.ndim - 1)) * y
    out[0] += model.coupling * y[1:].sum(axis=0)
    out[1:] += model.coupling * y[0]
    return out


def _rk4(model, y, h, energies):
    f = lambda v: -1j * _apply_h(model, v, energies)
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate(model, y0, times, dt_max=np.inf, tol=ODE_TOL):
    """Integrate i dy/dt = H y from t=0 and return y at each of ``times``.

    ``y0`` may be a vector or a matrix of column states.  Steps are accepted
    when the step-doubling error estimate is below ``tol`` per unit time.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    order = np.argsort(times)
    out = np.empty((times.size,) + np.shape(y0), dtype=complex)
    energies = model.energies()
    y = np.array(y0, dtype=complex)
    radius = np.max(np.abs(energies)) + model.coupling * math.sqrt(2 * model.n_side + 1)
    h = min(dt_max, 0.2 / max(radius, 1e-12))
    t = 0.0
    steps = 0
    for idx in order:
        target = times[idx]
        while t < target:
            step = min(h, target - t)
            full = _rk4(model, y, step, energies)
            half = _rk4(model, _rk4(model, y, 0.5 * step, energies), 0.5 * step, energies)
            err = np.max(np.abs(half - full)) / 15.0
            factor = min(4.0, max(0.2, 0.9 * (tol * step / err) ** 0.25)) if err > 0 else 4.0
            if err <= max(tol * step, ROUNDOFF):
                y = half + (half - full) / 15.0
                t = target if step == target - t else t + step
                if step == h:
                    h = min(dt_max, step * factor)
            else:
                h = step * factor
            steps += 1
            if h < 1e-14 * max(1.0, target) or steps > 10_000_000:
                raise NonConvergence(f"step control failed near t={t:.6g}")
        out[idx] = y
    return out


def evolve_oracle(model, duration, dt_max=np.inf):
    """Full (2N+2)-dim evolution matrix U(duration) by column-wise ODE integration."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    eye = np.eye(model.dim, dtype=complex)
    if duration == 0:
        return eye
    return propagate(model, eye, [duration], dt_max)[0]


def evolution_element_analytic(model, row, col, t):
    """Continuum-limit element of U(t); ``row``/``col`` are REF or a bath index.

    U_{ref,ref} = exp(-gamma|t| - i e0 t);  for t >= 0
    U_{n,ref} = U_{ref,n} = i H (exp(-gamma t - i e0 t) - exp(-i E_n t)) / (gamma - i n dE)
    and U(-t) = U(t)^+.
    """
    g, H, dE = model.gamma, model.coupling, model.delta_e
    if row == REF and col == REF:
        return complex(np.exp(-g * abs(t) - 1j * model.e0 * t))
    if (row == REF) == (col == REF):
        raise UnsupportedElement("bath-bath elements are not part of the closed form")
    n = col if row == REF else row
    s = abs(t)
    e_n = model.e0 + n * dE
    val = 1j * H * (np.exp(-g * s - 1j * model.e0 * s) - np.exp(-1j * e_n * s)) / (g - 1j * n * dE)
    return complex(val if t >= 0 else np.conj(val))


def _analytic_wn(model, window, n):
    g, H, dE = model.gamma, model.coupling, model.delta_e
    s1, s2, T = window.elapsed, window.remaining, window.duration
    n = np.asarray(n)
    a = np.exp(-g * s1) - np.exp(-1j * n * dE * s1)
    b = np.exp(-g * s2) - np.exp(-1j * n * dE * s2)
    return -(H**2) * np.exp(g * T) * a * b / (g - 1j * n * dE) ** 2


def _column_series(model, s_values):
    e0 = np.zeros(model.dim, dtype=complex)
    e0[0] = 1.0
    uniq, inv = np.unique(np.asarray(s_values, dtype=float), return_inverse=True)
    return propagate(model, e0, uniq)[inv]


def weak_values_numeric(model, t_i, t_f, ts):
    """Finite-N weak values of every basis projector at each time in ``ts``.

    Returns an array of shape (len(ts), dim): column 0 is the reference atom,
    column ``model.index(n)`` bath atom n.  The Hamiltonian is real symmetric,
    so <ref|U(s)|k> = <k|U(s)|ref> and a single column integration suffices.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    T = t_f - t_i
    cols = _column_series(model, np.concatenate([ts - t_i, t_f - ts, [T]]))
    fwd, bwd, tot = cols[: ts.size], cols[ts.size : 2 * ts.size], cols[-1]
    den = tot[0]
    if not abs(den) > EPS_DEN:
        raise VanishingOverlap("reference survival amplitude vanished")
    return bwd * fwd / den


def weak_value_bath(model, window, n, mode="analytic"):
    """Weak value of the projector onto bath atom ``n`` being excited.

    Both pre- and post-selected states have only the reference atom excited.
    ``mode='analytic'`` uses the continuum closed form, which is exactly zero
    at both ends of the window; ``mode='numeric'`` integrates the finite-N
    Schrodinger equation.
    """
    if mode == "analytic":
        return complex(_analytic_wn(model, window, n))
    if mode == "numeric":
        w = weak_values_numeric(model, window.t_i, window.t_f, [window.t])[0]
        return complex(w[model.index(n)])
    raise ValueError(f"unknown mode {mode!r}")


def bath_sum(model, window, mode="analytic"):
    """Sum of bath weak values over n = -N..N (reference atom excluded)."""
    if mode == "analytic":
        return complex(np.sum(_analytic_wn(model, window, model.levels)))
    if mode == "numeric":
        w = weak_values_numeric(model, window.t_i, window.t_f, [window.t])[0]
        return complex(np.sum(w[1:]))
    raise ValueError(f"unknown mode {mode!r}")


def full_basis_sum(model, window):
    w = weak_values_numeric(model, window.t_i, window.t_f, [window.t])[0]
    return complex(np.sum(w))


def weak_value_resonant(gamma, window, coupling):
    """n = 0 limit of the analytic bath weak value; always real."""
    s1, s2 = window.elapsed, window.remaining
    return -(coupling**2 / gamma**2) * math.exp(gamma * window.duration) * math.expm1(-gamma * s1) * math.expm1(
        -gamma * s2
    )


def weak_value_decayed(gamma, window):
    """Reference-excited weak value when the post-selection finds the atom decayed."""
    if window.duration == 0:
        raise DegenerateWindow("t_f == t_i")
    return math.exp(-gamma * window.elapsed) * math.expm1(-gamma * window.remaining) / math.expm1(
        -gamma * window.duration
    )
