"""Shamir secret sharing over a prime field.

Default field is GF(2^61 - 1): big enough for 60-bit tickets and every
domain the coins are tested with, while all arithmetic stays in native ints.
"""

from __future__ import annotations

DEFAULT_PRIME = (1 << 61) - 1


def poly_eval(coeffs, x, p=DEFAULT_PRIME):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def make_shares(secret, degree, n, rng, p=DEFAULT_PRIME):
    """Uniform degree-`degree` polynomial with phi(0)=secret; shares at 1..n."""
    if not 0 <= secret < p:
        raise ValueError("secret outside the field")
    coeffs = [secret] + [rng.randrange(p) for _ in range(degree)]
    return coeffs, [poly_eval(coeffs, x, p) for x in range(1, n + 1)]


def interpolate_at_zero(points, p=DEFAULT_PRIME):
    """Lagrange interpolation of phi(0) from (x, y) pairs with distinct x."""
    acc = 0
    xs = [x for x, _ in points]
    for x_i, y_i in points:
        num, den = 1, 1
        for x_j in xs:
            if x_j != x_i:
                num = num * (-x_j) % p
                den = den * (x_i - x_j) % p
        acc = (acc + y_i * num * pow(den, p - 2, p)) % p
    return acc


def interpolate_coeffs(points, p=DEFAULT_PRIME):
    """Full coefficient vector of the unique interpolating polynomial."""
    coeffs = [0] * len(points)
    xs = [x for x, _ in points]
    for x_i, y_i in points:
        basis = [1]
        den = 1
        for x_j in xs:
            if x_j == x_i:
                continue
            den = den * (x_i - x_j) % p
            new = [0] * (len(basis) + 1)
            for k, b in enumerate(basis):
                new[k] = (new[k] - b * x_j) % p
                new[k + 1] = (new[k + 1] + b) % p
            basis = new
        scale = y_i * pow(den, p - 2, p) % p
        for k, b in enumerate(basis):
            coeffs[k] = (coeffs[k] + b * scale) % p
    return coeffs
