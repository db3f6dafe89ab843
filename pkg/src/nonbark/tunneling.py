"""Gaussian packet bouncing between a hard wall at x = -2L and a delta barrier at x = 0.

The forward (pre-selected) state is approximated by a bounce train: one
wall-image pair of Gaussians inside the well, scaled by rho**N after N barrier
hits, plus the N transmitted packets tau * rho**(n-1) outside.  The backward
evolved post-selected state is the time reverse of the same train,
``post(x, t) = conj(pre(x, T - t))``, because the post-selected packet is the
complex conjugate of the pre-selected one.

Units: hbar = 1, v = k0 / mu.  Times are often quoted as s = v t / L.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    InvalidIndices,
    InvalidInteractionCount,
    InvalidPostselectionTime,
    OutOfRegion,
    VanishingOverlap,
)
from .quadrature import integrate, intersect_windows, merge_windows
from .weakcore import LogComplex

WINDOW_WIDTHS = 12.0
_SNAP = 1e-9
# phases k0*x reach ~1e6 rad, so samples carry ~1e-11 relative roundoff
QUAD_EPSREL = 1e-10


class ValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TunnelParams:
    b: float
    mu: float
    kappa: float
    k0: float
    L: float

    def __post_init__(self):
        for name in ("b", "mu", "k0", "L"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")

    @property
    def v(self):
        return self.k0 / self.mu

    @property
    def bk0_sq(self):
        return (self.b * self.k0) ** 2

    def validity_issues(self, t_max=None, mirror_factor=10.0, wall_factor=10.0, spread_factor=10.0):
        issues = []
        if self.L / self.b < wall_factor:
            issues.append(f"L/b = {self.L / self.b:g} < {wall_factor:g}: wall is not a clean mirror")
        if self.b * self.k0 < mirror_factor * self.L / self.b:
            issues.append(f"b*k0 = {self.b * self.k0:g} < {mirror_factor:g}*L/b: packets are not quasi-classical")
        if t_max is not None and self.b**2 < spread_factor * t_max / self.mu:
            issues.append(f"b^2 = {self.b**2:g} not >> t/mu = {t_max / self.mu:g}: packet spreading ignored")
        return issues

    def warn_validity(self, t_max=None):
        for msg in self.validity_issues(t_max):
            warnings.warn(msg, ValidityWarning, stacklevel=3)


FIG2 = TunnelParams(b=1.0, mu=1000.0, kappa=1000.0, k0=5000.0, L=100.0)


def reflection_transmission(k0, kappa):
    """Delta-barrier amplitudes (rho, tau); |rho|^2 + |tau|^2 = 1 and tau = 1 + rho."""
    if not k0 > 0:
        raise ValueError("k0 must be > 0")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    d = complex(k0, kappa)
    return -1j * kappa / d, k0 / d


@dataclass(frozen=True)
class GaussianTerm:
    amplitude: LogComplex
    k_sign: int
    center: float
    width: float
    phase_offset: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be > 0")
        if self.k_sign not in (1, -1):
            raise ValueError("k_sign must be +1 or -1")
        object.__setattr__(self, "phase_offset", math.remainder(self.phase_offset, 2 * math.pi))

    def conj(self):
        return GaussianTerm(self.amplitude.conj(), -self.k_sign, self.center, self.width, -self.phase_offset)

    def scaled_value(self, x, k0, log_scale=0.0):
        """Term value times exp(-log_scale)."""
        y = np.asarray(x, dtype=float) - self.center
        re = self.amplitude.log_mag - log_scale - y * y / (2 * self.width**2)
        im = self.amplitude.phase + self.phase_offset + self.k_sign * k0 * y
        return np.exp(re + 1j * im)


@dataclass(frozen=True)
class PacketTrain:
    """Bounce-train snapshot: ``inside`` terms live on (-2L, 0), ``outside`` on (0, inf)."""

    inside: tuple
    outside: tuple
    time_stamp: float
    count: int
    k0: float
    L: float
    width: float

    @property
    def log_scale(self):
        mags = [t.amplitude.log_mag for t in self.inside + self.outside]
        return max(mags) if mags else 0.0

    def conj(self):
        return PacketTrain(
            tuple(t.conj() for t in self.inside),
            tuple(t.conj() for t in self.outside),
            self.time_stamp, self.count, self.k0, self.L, self.width,
        )

    def scaled(self, x, log_scale=None):
        """Train evaluated at ``x`` and divided by exp(log_scale)."""
        if log_scale is None:
            log_scale = self.log_scale
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        inner = (x >= -2 * self.L) & (x < 0)
        outer = x >= 0
        for terms, mask in ((self.inside, inner), (self.outside, outer)):
            if terms and mask.any():
                xs = x[mask]
                out[mask] = sum(t.scaled_value(xs, self.k0, log_scale) for t in terms)
        return out

    def __call__(self, x):
        """Unscaled values; may overflow or underflow for extreme trains."""
        return self.scaled(x, 0.0)

    def windows(self, halfwidth=WINDOW_WIDTHS):
        h = halfwidth * self.width
        inner = merge_windows([(t.center - h, t.center + h) for t in self.inside], -2 * self.L, 0.0)
        outer = merge_windows([(t.center - h, t.center + h) for t in self.outside], 0.0)
        return inner, outer


def _snap(q):
    r = round(q)
    return r if abs(q - r) < _SNAP else q


def interaction_count(params, t):
    """Barrier hits of the forward packet by time t: floor((v t / L + 3) / 4)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return int(math.floor(_snap((params.v * t / params.L + 3.0) / 4.0)))


def at_barrier(params, t):
    """True when t is exactly an instant at which a packet centre sits on the barrier."""
    q = (params.v * t / params.L + 3.0) / 4.0
    return t > 0 and abs(q - round(q)) < _SNAP


def pre_train(params, t, N=None):
    """Forward-evolved pre-selected packet at time t after N barrier hits."""
    expected = interaction_count(params, t)
    if N is None:
        N = expected
    elif N != expected and not (at_barrier(params, t) and N == expected - 1):
        raise InvalidInteractionCount(f"N={N} inconsistent with t={t} (expected {expected})")
    rho, tau = reflection_transmission(params.k0, params.kappa)
    lrho, ltau = LogComplex.from_complex(rho), LogComplex.from_complex(tau)
    L, b, vt = params.L, params.b, params.v * t
    phase = params.k0 * vt / 2
    rn = lrho**N
    inside = (
        GaussianTerm(rn, +1, vt - (4 * N + 1) * L, b, phase),
        GaussianTerm(-rn, -1, (4 * N - 3) * L - vt, b, phase),
    )
    outside = tuple(GaussianTerm(ltau * lrho ** (n - 1), +1, vt - (4 * n - 3) * L, b, phase) for n in range(1, N + 1))
    return PacketTrain(inside, outside, t, N, params.k0, L, b)


def post_train(params, t, T, M=None):
    """Backward-evolved post-selected packet at time t, post-selected at T."""
    if not 0 <= t <= T:
        raise ValueError("need 0 <= t <= T")
    tr = pre_train(params, T - t, M).conj()
    return PacketTrain(tr.inside, tr.outside, t, tr.count, tr.k0, tr.L, tr.width)


def postselection_index(params, T):
    """i such that T = (4i + 2) L / v, or None."""
    q = (params.v * T / params.L - 2.0) / 4.0
    i = round(q)
    return i if abs(q - i) < _SNAP and i >= 1 else None


def _clear_of_barrier(params, s_values, margin):
    # hits happen at s = 1, 5, 9, ... for both trains
    return all(abs(math.remainder(s - 1.0, 4.0)) >= margin for s in s_values)


def reference_time(params, t, T):
    """A time with no packet near the barrier, as close to t as possible.

    The overlap integral is conserved by the evolution, so it may be taken at
    any time; instants where a packet straddles the barrier are avoided
    because the bounce train is not valid there.
    """
    S, s = params.v * T / params.L, params.v * t / params.L
    margin = WINDOW_WIDTHS * params.b / params.L
    if _clear_of_barrier(params, (s, S - s), margin):
        return t
    candidates = [4.0 * k + 3.0 for k in range(int(S // 4) + 1)] + [S / 2]
    candidates = [c for c in candidates if 0 < c < S and _clear_of_barrier(params, (c, S - c), margin)]
    if not candidates:
        return t
    best = min(candidates, key=lambda c: abs(c - s))
    return best * params.L / params.v


def _product_integral(pre, post_conj):
    scale = pre.log_scale + post_conj.log_scale
    pieces = []
    step = pre.width / 2
    for region in (0, 1):
        for a, c in intersect_windows(pre.windows()[region], post_conj.windows()[region]):
            edges = np.linspace(a, c, max(2, int(math.ceil((c - a) / step)) + 1))
            pieces.extend(zip(edges[:-1], edges[1:]))
    if not pieces:
        return LogComplex(-math.inf)
    # one call, so the tolerance is relative to the whole overlap; the
    # outside contribution alone is nearly zero
    total, _ = integrate(lambda x: pre.scaled(x) * post_conj.scaled(x), pieces, epsrel=QUAD_EPSREL)
    return LogComplex.from_complex(total) * LogComplex(scale)


@lru_cache(maxsize=256)
def overlap(params, t, T):
    """<post|pre> = integral of conj(post(x, t)) * pre(x, t) over the well and beyond."""
    pre = pre_train(params, t)
    post_conj = post_train(params, t, T).conj()
    return _product_integral(pre, post_conj)


def check_postselection_time(params, T, strict=True):
    if postselection_index(params, T) is None:
        if strict:
            raise InvalidPostselectionTime(f"T = {T} is not (4i+2)L/v for integer i >= 1")
        warnings.warn("post-selection time outside validated regime T = (4i+2)L/v", ValidityWarning, stacklevel=3)


def weak_value_numeric(x, t, T, params):
    """Position-projector weak value from the bounce trains, normalized by quadrature.

    The overlap in the denominator is integrated adaptively (log-domain
    scaled) at t, or at the nearest time with no packet on the barrier.
    """
    check_postselection_time(params, T, strict=False)
    margin = WINDOW_WIDTHS * params.b / params.L
    if not _clear_of_barrier(params, (params.v * t / params.L, params.v * (T - t) / params.L), margin):
        # the train lacks the split packet while it straddles the barrier
        warnings.warn(f"a packet is on the barrier at t = {t:g}; bounce train not valid", ValidityWarning, stacklevel=2)
    den = overlap(params, reference_time(params, t, T), T)
    if den.is_zero:
        raise VanishingOverlap("pre- and post-selected trains do not overlap")
    pre = pre_train(params, t)
    post_conj = post_train(params, t, T).conj()
    num = pre.scaled(x) * post_conj.scaled(x)
    factor = (LogComplex(pre.log_scale + post_conj.log_scale) / den).to_complex()
    out = num * factor
    return complex(out) if np.ndim(x) == 0 else out


def _eq22_exponent(n, m, N, M, x, params):
    # (b^2 k0 + P)(b^2 k0 + Q) / b^2 with the b^2 k0^2 part removed
    L, b, k0 = params.L, params.b, params.k0
    x = np.asarray(x, dtype=float)
    c1 = -2j + (2 + 2j) * n - (2 + 2j) * N - (2 - 2j) * m + (2 - 2j) * M
    c2 = -2 + (2 + 2j) * n - (2 + 2j) * N + (2 - 2j) * m - (2 - 2j) * M
    P = L * c1 + 1j * x
    Q = 1j * (L * c2 + x)
    return k0 * (P + Q) + P * Q / b**2


def weak_value_sweetspot(n, m, N, M, x, params):
    """Closed-form weak value at sweet spot (n, m) with N and M barrier hits.

    Evaluated with the exp(b^2 k0^2) factors of numerator and denominator
    cancelled symbolically; the remaining denominator correction
    exp(-b^2 k0^2) is added in the log domain.  Cases with N > M use the
    (n, N) <-> (m, M) symmetry.
    """
    for name, val in (("n", n), ("m", m), ("N", N), ("M", M)):
        if int(val) != val or val < 1:
            raise InvalidIndices(f"{name} must be a positive integer, got {val}")
    if n > N or m > M:
        raise InvalidIndices(f"need n <= N and m <= M, got n={n}, N={N}, m={m}, M={M}")
    if N > M:
        n, N, m, M = m, M, n, N
    k0, kappa, b = params.k0, params.kappa, params.b
    r = LogComplex.from_complex(kappa / complex(-kappa, k0))
    lead = LogComplex.from_complex(complex(k0, 2 * kappa))
    r2N = r ** (2 * N)
    correction = LogComplex(-params.bk0_sq) * LogComplex.from_complex(
        -k0 - 2j * kappa * r2N.to_complex() if r2N.log_mag > -700 else -k0
    )
    den = (lead * r2N).add(correction)[0] * (math.sqrt(math.pi) * b * kappa**2)
    pref = LogComplex.from_complex(k0**2) * lead * r ** (n + N + m - M) / den
    w = np.exp(_eq22_exponent(n, m, N, M, x, params) + pref.log_mag + 1j * pref.phase)
    return complex(w) if np.ndim(x) == 0 else w


def weak_value_inside(x, t, T, params):
    """Weak value inside the well (-2L <= x <= 0).

    Closed form at T = 6L/v, t = 3L/v; other (t, T) go through the bounce-train
    quadrature.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < -2 * params.L) or np.any(xa > 0):
        raise OutOfRegion("inside weak value needs -2L <= x <= 0")
    unit = params.L / params.v
    if not (abs(T - 6 * unit) < _SNAP * T and abs(t - 3 * unit) < _SNAP * T):
        return weak_value_numeric(x, t, T, params)
    k0, kappa, b = params.k0, params.kappa, params.b
    u = xa + 2 * params.L
    if kappa == 0:
        w = np.zeros(xa.shape, dtype=complex)
        return complex(w) if np.ndim(x) == 0 else w
    den = LogComplex.from_complex(kappa**2).add(LogComplex(-params.bk0_sq) * LogComplex.from_complex(k0**2 - kappa**2))[0]
    den = den * (math.sqrt(math.pi) * b)
    # (exp(2i k0 u) - 1)^2 exp(-2i k0 u) = -4 sin^2(k0 u)
    w = -(kappa**2) * (-4.0 * np.sin(k0 * u) ** 2) * np.exp(-u * u / b**2 - den.log_mag - 1j * den.phase)
    return complex(w) if np.ndim(x) == 0 else w


@dataclass(frozen=True)
class SweetSpot:
    n: int
    m: int
    N: int
    M: int
    x: float
    t: float
    regular: bool = True


def sweet_spots(T, params, include_boundary=False):
    """Crossings of forward and backward transmitted packets outside the well.

    Regular spots (no packet on the barrier at that instant) are the ones the
    closed form describes; for T = 14L/v these are A (1,3), B (2,2), D (1,1)
    and the mirror of A, (3,1).  ``include_boundary`` adds crossings that
    occur exactly while other packets hit the barrier, e.g. (1,2) and (2,1)
    at x = 4L for T = 14L/v.
    """
    i = postselection_index(params, T)
    if i is None:
        raise InvalidPostselectionTime(f"T = {T} is not (4i+2)L/v for integer i >= 1")
    S = 4 * i + 2
    L, unit = params.L, params.L / params.v
    spots = []
    for n in range(1, i + 2):
        for m in range(1, i + 2):
            s = S / 2 + 2 * (n - m)
            xs = s - (4 * n - 3)
            if not (0 < s < S and xs > 0):
                continue
            regular = (i + n - m) % 2 == 1
            if not (regular or include_boundary):
                continue
            t = s * unit
            N = interaction_count(params, t)
            M = interaction_count(params, T - t)
            if not regular:
                N -= 1  # hit in progress at t is not counted on the forward side
            if n > N or m > M:
                continue
            spots.append(SweetSpot(n, m, N, M, xs * L, t, regular))
    return sorted(spots, key=lambda p: (p.t, p.x))


def weak_value_at_spot(spot, x, params, T=None):
    """Closed form at regular spots; boundary spots need T and use the bounce-train quadrature."""
    if spot.regular:
        return weak_value_sweetspot(spot.n, spot.m, spot.N, spot.M, x, params)
    if T is None:
        raise ValueError("boundary spots need the post-selection time T")
    return weak_value_numeric(x, spot.t, T, params)


def neighbor_ratio(params):
    """w(n, m, N, M) / w(n-1, m-1, N, M) at the respective peaks: rho^2 = kappa^2 / (i k0 - kappa)^2."""
    return params.kappa**2 / complex(-params.kappa, params.k0) ** 2
