"""Independent closed-form and brute-force oracles used by the test suite.

Everything here is derived from first principles (plane geometry, 1-D
calculus, exhaustive enumeration) without importing the package internals,
so agreement with the library is meaningful evidence of correctness.
"""

import math
from itertools import combinations

import numpy as np
from scipy.special import gammainc, gammaln


def lens_overlap_fraction_disk(s):
    """Fraction of a unit disk covered by another unit disk at distance s:
    the lens area 2*acos(s/2) - (s/2)*sqrt(4 - s^2), over pi."""
    if s >= 2.0:
        return 0.0
    return (2.0 * math.acos(0.5 * s)
            - 0.5 * s * math.sqrt(4.0 - s * s)) / math.pi


def cube_overlap_fraction(w):
    """Fraction of [-1,1]^n covered by its translate by w: each coordinate
    contributes an interval overlap of length max(0, 2 - |w_i|)."""
    w = np.abs(np.asarray(w, dtype=float))
    return float(np.prod(np.clip(1.0 - 0.5 * w, 0.0, None)))


def separation_from_overlap(t):
    """Pr[first centers differ] when the two capture balls overlap in a
    fraction t of their common volume: the first proposal landing in the
    union settles both points iff it lands in the intersection, giving
    (2 - 2t)/(2 - t) by conditioning on that first arrival."""
    return (2.0 - 2.0 * t) / (2.0 - t)


def luxemburg_norm_1d(x, beta):
    """1-D Luxemburg norm with Young function log(1/(1-t))/beta: the fixed
    point of (1/beta) log(1/(1 - |x|/s)) = 1 is s = |x|/(1 - e^{-beta})."""
    return abs(x) / (1.0 - math.exp(-beta))

def lp_ball_volume(n, p):
    """2^n Gamma(1 + 1/p)^n / Gamma(1 + n/p); 2^n for the cube."""
    if p == float("inf"):
        return 2.0 ** n
    return math.exp(n * math.log(2.0) + n * gammaln(1.0 + 1.0 / p)
                    - gammaln(1.0 + n / p))


def euclidean_ball_volume(n):
    return math.pi ** (0.5 * n) / math.gamma(0.5 * n + 1.0)


def orlicz_ball_volume(m, beta):
    """2^m * P(Gamma(m) <= beta), the regularized lower incomplete gamma."""
    return 2.0 ** m * float(gammainc(m, beta))


def orlicz_volume_asymptotic(m, beta):
    """(2 beta)^m / (e^beta m!)."""
    return (2.0 * beta) ** m / (math.exp(beta) * math.factorial(m))


def l1_cone_abs_moment(m, k):
    """E |theta_1|^k under the normalized surface measure of the l_1^m ball:
    theta_1 is a symmetrized Dirichlet(1,...,1) coordinate, so the moment is
    k! (m-1)! / (k + m - 1)!."""
    return (math.factorial(k) * math.factorial(m - 1)
            / math.factorial(k + m - 1))


def psi_l2(n, w):
    """Shadow of the Euclidean ball is a (n-1)-ball: v_{n-1}/v_n * ||w||_2."""
    return (euclidean_ball_volume(n - 1) / euclidean_ball_volume(n)
            * float(np.linalg.norm(w)))


def psi_linf(w):
    """Cube shadow orthogonal to w has volume 2^{n-1} ||w||_1 / ||w||_2."""
    return 0.5 * float(np.abs(np.asarray(w, dtype=float)).sum())


def iq_values(n, p):
    """Isoperimetric quotients with known closed forms."""
    if p == float("inf"):
        return 2.0 * n
    if p == 2.0:
        return n * math.sqrt(math.pi) * math.exp(-gammaln(0.5 * n + 1.0) / n)
    if p == 1.0:
        return n ** 1.5 * (2.0 ** n / math.factorial(n)) ** (1.0 / n)
    return None


# ---------------------------------------------------------------------------
# brute-force enumerations


def admissible_chains(limit):
    """All tuples (n_1 < n_2 < ...) with n_1 in {6, 7},
    n_{i+1} <= 2^{n_i} <= n_{i+1}^3, and product <= limit, by brute force."""
    out = []

    def extend(chain, product):
        if chain:
            out.append(tuple(chain))
        last = chain[-1] if chain else None
        if last is None:
            candidates = [6, 7]
        else:
            lo = max(last + 1, math.ceil(2 ** last ** (1 / 3.0)) - 2)
            hi = 2 ** last
            candidates = [c for c in range(lo, min(hi, limit // product) + 1)
                          if c ** 3 >= 2 ** last]
        for c in candidates:
            if product * c <= limit:
                chain.append(c)
                extend(chain, product * c)
                chain.pop()

    extend([], 1)
    return out


def best_chain_product(n):
    """Largest admissible chain product <= n, with the chain."""
    best, best_chain = 0, ()
    for chain in admissible_chains(n):
        prod = math.prod(chain)
        if prod > best:
            best, best_chain = prod, chain
    return best_chain, best


def set_partitions_max_size(items, max_size):
    """All set partitions of `items` into blocks of size <= max_size."""
    items = list(items)
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for size in range(0, min(max_size - 1, len(rest)) + 1):
        for tail in combinations(range(len(rest)), size):
            block = [head] + [rest[i] for i in tail]
            remaining = [rest[i] for i in range(len(rest)) if i not in tail]
            for others in set_partitions_max_size(remaining, max_size):
                yield [block] + others
