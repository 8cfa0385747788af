"""Arithmetic in GF(2^m) for 1 <= m <= 16.

Elements are plain ints in ``range(2**m)`` using the polynomial basis, so
bit ``j`` of an element is the coefficient of ``x**j``.  Each field is
generated by a fixed primitive polynomial so codebooks are reproducible.
"""

from __future__ import annotations

from functools import lru_cache

from .errors import UnsupportedParameters

# Primitive polynomials, bit j is the coefficient of x**j.
PRIMITIVE_POLYS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


class GF2m:
    """The field with ``2**m`` elements, backed by log/antilog tables."""

    def __init__(self, m: int):
        if m not in PRIMITIVE_POLYS:
            raise UnsupportedParameters(f"GF(2^{m}) not tabulated (1 <= m <= 16)")
        self.m = m
        self.order = 1 << m
        self.poly = PRIMITIVE_POLYS[m]
        size = self.order - 1
        exp = [0] * (2 * size)
        log = [0] * self.order
        x = 1
        for i in range(size):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= self.poly
        for i in range(size, 2 * size):
            exp[i] = exp[i - size]
        self._exp = exp
        self._log = log

    def __repr__(self):
        return f"GF2m(m={self.m}, poly={self.poly:#x})"

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in GF(2^m)")
        return self._exp[(self.order - 1 - self._log[a]) % (self.order - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def poly_eval(self, coeffs, x: int) -> int:
        """Evaluate ``sum(coeffs[j] * x**j)`` by Horner's rule."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.mul(acc, x) ^ c
        return acc

    def interpolate_eval(self, xs, ys, targets) -> list[int]:
        """Evaluate the unique degree < len(xs) interpolant at each target."""
        k = len(xs)
        weights = []
        for j in range(k):
            den = 1
            for i in range(k):
                if i != j:
                    den = self.mul(den, xs[j] ^ xs[i])
            weights.append(self.div(ys[j], den))
        out = []
        for z in targets:
            total = 0
            for j in range(k):
                term = weights[j]
                for i in range(k):
                    if i != j:
                        term = self.mul(term, z ^ xs[i])
                total ^= term
            out.append(total)
        return out


@lru_cache(maxsize=None)
def field(m: int) -> GF2m:
    """Shared (immutable) field instance for ``m``."""
    return GF2m(m)
