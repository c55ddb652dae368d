"""Independent brute-force oracles. Nothing here calls the code paths under test."""

import itertools
import math
from fractions import Fraction

import numpy as np


def int_det(rows):
    return int(round(np.linalg.det(np.array(rows, dtype=float))))


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def matpow(A, n):
    out = [[int(i == j) for j in range(len(A))] for i in range(len(A))]
    for _ in range(n):
        out = matmul(out, A)
    return out


def rational_kernel(A):
    """All x in ((1/D) Z / Z)^d with A x = 0 mod 1, D = |det A|."""
    D = abs(int_det(A))
    d = len(A)
    found = set()
    for nums in itertools.product(range(D), repeat=d):
        if all(sum(a * x for a, x in zip(row, nums)) % D == 0 for row in A):
            found.add(tuple(Fraction(x, D) for x in nums))
    return found


def rational_fixed_points(A, n):
    """Fixed points of x -> A^n x on the lattice with denominator |det(A^n - I)|."""
    M = matpow(A, n)
    d = len(A)
    B = [[M[i][j] - int(i == j) for j in range(d)] for i in range(d)]
    D = abs(int_det(B))
    count = 0
    for nums in itertools.product(range(D), repeat=d):
        if all(sum(b * x for b, x in zip(row, nums)) % D == 0 for row in B):
            count += 1
    return count


def invariant_factors(A):
    """Smith invariants from determinantal divisors (gcd of k x k minors)."""
    d = len(A)
    divisors = [1]
    for k in range(1, d + 1):
        g = 0
        for rows in itertools.combinations(range(d), k):
            for cols in itertools.combinations(range(d), k):
                g = math.gcd(g, int_det([[A[r][c] for c in cols] for r in rows]))
        divisors.append(g)
    return [divisors[k] // divisors[k - 1] for k in range(1, d + 1)]


def circle_dist(a: Fraction, b: Fraction) -> Fraction:
    t = (a - b) % 1
    return min(t, 1 - t)


def doubling_expansivity(N, horizon, k=2):
    """Exact min over grid pairs (distance >= 2/N) of max_n dist(k^n x, k^n y)."""
    pts = [Fraction(j, N) for j in range(N)]
    best = None
    for i, j in itertools.combinations(range(N), 2):
        x, y = pts[i], pts[j]
        if circle_dist(x, y) < Fraction(2, N):
            continue
        m = max(circle_dist(x * k**n, y * k**n) for n in range(horizon + 1))
        best = m if best is None else min(best, m)
    return best


def pairwise_min_chord(N):
    """min over grid pairs at distance >= 2/N of |e(x) - e(y)|."""
    z = np.exp(2j * np.pi * np.arange(N) / N)
    best = math.inf
    for i in range(N):
        for j in range(i + 1, N):
            if min(j - i, N - (j - i)) >= 2:
                best = min(best, abs(z[i] - z[j]))
    return best


def brute_strict_precision(f_values, orbit_points, mesh):
    """Full pairwise matrices; f_values: (H+1, N, m), orbit_points[0]: (N, d)."""
    X = orbit_points
    diff = np.abs(X[:, None, :] - X[None, :, :]) % 1.0
    dist = np.minimum(diff, 1 - diff).max(-1)
    sep = np.zeros(dist.shape)
    for F in f_values:
        sep = np.maximum(sep, np.linalg.norm(F[:, None, :] - F[None, :, :], axis=-1))
    iu = np.triu_indices(len(X), 1)
    ok = dist[iu] >= 2 * mesh - 1e-12
    return sep[iu][ok].min()


def exit_step(eps, k):
    """Smallest n >= 0 with 2^(n - k) > eps, in exact arithmetic."""
    eps = Fraction(eps)
    n = 0
    while Fraction(2) ** (n - k) <= eps:
        n += 1
    return n
