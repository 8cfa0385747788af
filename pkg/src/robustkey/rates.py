"""Closed-form key-rate bounds.

Zero-error bounds are exact integers (bits) computed with Singleton-tight
code sizes, ``log2 |A_m(n, d)| = m * max(0, n - d + 1)``.  The asymptotic
random-attack bound is a float maximized over the detection threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError

GOLDEN = (math.sqrt(5) - 1) / 2


def ell(t: int) -> int:
    """Bits needed to write any integer in 0..t, i.e. ceil(log2(t + 1))."""
    if t < 0:
        raise ParameterError("attack budget must be nonnegative")
    return int(t).bit_length()


def singleton_bits(n: int, d: int, m: int) -> int:
    """log2 of a Singleton-tight code size; distance <= 1 is the full space."""
    if m <= 0:
        return 0
    return m * max(0, n - max(d, 1) + 1)


@dataclass(frozen=True)
class OmegaParams:
    m: int
    n1: int
    n2: int
    t: int
    d: int
    t1: int

    def __post_init__(self):
        if min(self.m, self.n1, self.n2) < 1 or self.t < 0:
            raise ParameterError("need m, n1, n2 >= 1 and t >= 0")
        if self.n2 < 2 * self.t:
            raise ParameterError(f"need n2 >= 2t, got n2={self.n2}, t={self.t}")
        if not 1 <= self.d <= self.n1:
            raise ParameterError(f"need 1 <= d <= n1, got d={self.d}")
        if not 0 <= self.t1 <= max(self.t, self.d - self.t):
            raise ParameterError(f"t1={self.t1} outside 0..max(t, d-t)")
        if self.m <= self.ell:
            raise ParameterError(f"need m > ceil(log2(t+1)) = {self.ell}")

    @property
    def ell(self) -> int:
        return ell(self.t)


def omega(m: int, n1: int, n2: int, t: int, d: int, t1: int) -> int:
    """Key bits of the two-round scheme when Eve attacks ``t1`` forward links.

    If ``d > t + t1`` Bob corrects and the key holds Alice's codeword plus a
    backward codeword protected against all ``t`` attacks; otherwise only
    the backward codeword, protected against the ``t - t1`` attacks left.
    A backward distance below 1 (possible in the detection bucket when
    ``d > 2t``) is clamped to 1.
    """
    p = OmegaParams(m, n1, n2, t, d, t1)
    mb = m - p.ell
    if d > t + t1:
        return singleton_bits(n1, d, m) + singleton_bits(n2, 2 * t + 1, mb)
    return singleton_bits(n2, max(2 * (t - t1) + 1, 1), mb)


def theorem1_guard(n1: int, n2: int, t: int) -> bool:
    """True when Eve can overwrite every link in some direction-independent way."""
    return t >= max(n1, n2)


@dataclass(frozen=True)
class Theorem2Bound:
    value: int
    argmax_d: int | None
    omega_clean: int | None = None
    omega_detect: int | None = None


def theorem2_terms(m: int, n1: int, n2: int, t: int, d: int) -> tuple[int, int | None]:
    """``(omega(d, 0), omega(d, d - t))``, the second ``None`` if unreachable.

    The detection bucket ``t1 = d - t`` can only be hit when ``d - t <= t``.
    """
    clean = omega(m, n1, n2, t, d, 0)
    if d - t > t:
        return clean, None
    return clean, omega(m, n1, n2, t, d, d - t)


def theorem2_bound(m: int, n1: int, n2: int, t: int) -> Theorem2Bound:
    """Best two-round zero-error rate over the forward distance ``t < d <= n1``."""
    if theorem1_guard(n1, n2, t):
        return Theorem2Bound(0, None)
    if n2 <= 2 * t:
        raise ParameterError(f"the two-round bound needs n2 > 2t, got n2={n2}, t={t}")
    if t >= n1:
        return Theorem2Bound(0, None)
    if m <= ell(t):
        raise ParameterError(f"need m > ceil(log2(t+1)) = {ell(t)}")
    best = None
    for d in range(t + 1, n1 + 1):
        clean, detect = theorem2_terms(m, n1, n2, t, d)
        value = clean if detect is None else min(clean, detect)
        if best is None or value > best.value:
            best = Theorem2Bound(value, d, clean, detect)
    return best


def _direct_bits(n: int, t: int, m: int) -> int:
    """One-round key transmission with a distance-(2t+1) code."""
    if m <= 0:
        return 0
    return m * max(0, n - 2 * t)


def _multi_round(ns: tuple[int, ...], t: int, m: int) -> int:
    if m <= 0 or not ns:
        return 0
    if t >= max(ns):
        return 0
    if t == 0:
        return m * sum(ns)
    if len(ns) == 1:
        return _direct_bits(ns[0], t, m)
    rest = ns[1:]
    # decoupled: first round as a stand-alone key transmission
    best = _direct_bits(ns[0], t, m) + _multi_round(rest, t, m)
    if len(ns) == 2 and ns[1] > 2 * t and m > ell(t):
        best = max(best, theorem2_bound(m, ns[0], ns[1], t).value)
    mb = m - ell(t)
    for d in range(t + 1, min(2 * t, ns[0]) + 1):
        corrected = singleton_bits(ns[0], d, mb) + _multi_round(rest, t, mb)
        detected = _multi_round(rest, max(0, 2 * t - d), mb)
        best = max(best, min(corrected, detected))
    return best


def theorem3_bound(w: int, n_list: Sequence[int], t: int, m: int) -> int:
    """Inner bound on the w-round capacity by the multi-round recursion.

    Each level takes the best of the recursion over ``t < d <= 2t``, the
    two-round bound (when ``w == 2``), and the decoupled direct-transmission
    split.  One round is direct transmission with a distance-(2t+1) code.
    """
    ns = tuple(int(v) for v in n_list)
    if w < 1 or len(ns) != w:
        raise ParameterError(f"need {w} link counts, got {len(ns)}")
    if min(ns) < 1 or t < 0 or m < 1:
        raise ParameterError("link counts and m must be positive, t nonnegative")
    if t >= max(ns):
        return 0
    if w >= 2 and min(ns) <= 2 * t + 1:
        raise ParameterError(f"the multi-round bound needs every n_i > 2t+1 = {2 * t + 1}")
    return _multi_round(ns, t, m)


def binary_I(xi: float) -> float:
    """``1 + xi*log2(xi) + (1-xi)*log2(1-xi)`` with ``0*log 0 = 0``."""
    if not 0.0 <= xi <= 1.0:
        raise ParameterError(f"xi={xi} outside [0, 1]")
    value = 1.0
    for p in (xi, 1.0 - xi):
        if p > 0.0:
            value += p * math.log2(p)
    return value


def _binary_I_array(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(xi > 0, xi * np.log2(np.where(xi > 0, xi, 1.0)), 0.0)
        b = np.where(xi < 1, (1 - xi) * np.log2(np.where(xi < 1, 1 - xi, 1.0)), 0.0)
    return 1.0 + a + b


@dataclass(frozen=True)
class AsymParams:
    lambda1: float
    lambda2: float
    tau: float
    step: float = 1e-4

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0 or self.tau < 0:
            raise ParameterError("need lambda1, lambda2 > 0 and tau >= 0")
        if self.tau / self.lambda2 >= 0.5:
            raise ParameterError(f"need tau/lambda2 < 1/2, got {self.tau / self.lambda2}")
        if not 0 < self.step <= 0.5:
            raise ParameterError("grid step must lie in (0, 1/2]")

    @property
    def xi_max(self) -> float:
        return min(0.5, self.tau / self.lambda1)


def theorem4_objective(p: AsymParams, xi):
    """``min(l2*I(gamma/l2), l1*I(xi) + l2*I(tau/l2))``, ``gamma = tau - l1*xi``."""
    xi = np.asarray(xi, dtype=float)
    gamma = np.maximum(p.tau - p.lambda1 * xi, 0.0)
    detect = p.lambda2 * _binary_I_array(gamma / p.lambda2)
    correct = p.lambda1 * _binary_I_array(xi) + p.lambda2 * binary_I(p.tau / p.lambda2)
    out = np.minimum(detect, correct)
    return float(out) if out.ndim == 0 else out


def _golden_max(f, a: float, b: float, tol: float = 1e-12) -> float:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def theorem4_bound(p: AsymParams) -> tuple[float, float]:
    """Maximize the random-attack objective over ``0 <= xi <= min(1/2, tau/l1)``.

    Grid search at ``p.step`` followed by golden-section refinement on the
    two cells around the best grid point.  Returns ``(value, argmax_xi)``.
    """
    hi = p.xi_max
    if hi == 0.0:
        return theorem4_objective(p, 0.0), 0.0
    npts = max(2, math.ceil(hi / p.step) + 1)
    grid = np.linspace(0.0, hi, npts)
    vals = theorem4_objective(p, grid)
    i = int(np.argmax(vals))
    best_x, best_v = float(grid[i]), float(vals[i])
    lo_x, hi_x = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, npts - 1)])
    x = _golden_max(lambda z: theorem4_objective(p, z), lo_x, hi_x)
    v = theorem4_objective(p, x)
    if v > best_v:
        best_x, best_v = x, v
    return best_v, best_x
