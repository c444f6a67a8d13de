"""Gentle-partition-of-unity Lipschitz extension.

Given anchors C and values f(C), the operator averages, over dyadic scales
2^k and an ensemble of random ball partitions per scale, the value at the
anchor nearest to the cluster containing the query point.  The scale mixture
uses a 1-Lipschitz bump of d(x, C), so the resulting weights are an explicit
probability vector over the anchors: the extension is exact on C and takes
values in the convex hull of f(C), and its Lipschitz constant is controlled
by the separation profile 4*psi of the ambient norm.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .space import InputError, coord_bound, norm_batch, space
from .geometry import psi_gradient_cloud, psi_from_cloud

STREAM_BLOCK = 1024
MAX_STREAM = 1 << 22

# Largest Lipschitz-ratio-vs-profile observed over a frozen corpus of fifty
# fixed-seed instances (master seed 20260826: small lp spaces, 3-8 anchors,
# linear 1-Lipschitz data, 60-pair scans at 16 rounds).  Fresh-seed scans are
# asserted against this value with 20% headroom; it is an empirical suite
# constant, not a universal bound.
CALIBRATED_LIPSCHITZ_BOUND = 1.722


def bump(t):
    """Piecewise-linear 1-Lipschitz bump: 0 outside [1, 4], 1 on [2, 3]."""
    t = np.asarray(t, dtype=float)
    return np.clip(np.minimum(t - 1.0, 4.0 - t), 0.0, 1.0)


def active_scales(d):
    """Dyadic scales k with bump(d / 2^k) > 0, i.e. 2^k in (d/4, d)."""
    if d <= 0.0:
        return []
    hi = math.ceil(math.log2(d))            # largest k with 2^k < d (loose)
    lo = math.floor(math.log2(d / 4.0))
    return [k for k in range(lo, hi + 1) if bump(d / 2.0 ** k) > 0.0]


def bump_weights(sp, x, anchors, k):
    """lambda_k(x) = bump(d(x,C)/2^k) / sum_j bump(d(x,C)/2^j); 0 on C."""
    s = space(sp)
    x = np.asarray(x, dtype=float)
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    d = float(norm_batch(s, anchors - x).min())
    if d <= 0.0:
        return 0.0
    ks = active_scales(d)
    if k not in ks:
        return 0.0
    total = sum(float(bump(d / 2.0 ** j)) for j in ks)
    return float(bump(d / 2.0 ** k)) / total


@dataclass
class ExtensionOperator:
    space: object
    anchors: np.ndarray
    values: np.ndarray
    target: object
    scale_range: tuple
    mc_rounds: int
    seed: int
    _streams: dict = field(default_factory=dict, repr=False)

    def _window(self, k):
        cb = coord_bound(self.space)
        margin = (4.0 * 2.0 ** k + 2.0 ** (k - 1)) * cb * (1.0 + 1e-9)
        lo = self.anchors.min(axis=0) - margin
        hi = self.anchors.max(axis=0) + margin
        return lo, hi

    def _stream(self, k, j, count):
        """First `count` center proposals of round j at scale k; the stream
        is deterministic in (seed, k, j) and extended in fixed blocks so that
        every evaluation sees the same realization."""
        key = (k, j)
        if key not in self._streams:
            ss = np.random.SeedSequence([self.seed, k + (1 << 20), j])
            gen = np.random.default_rng(ss)
            self._streams[key] = [gen, []]
        gen, blocks = self._streams[key]
        lo, hi = self._window(k)
        have = sum(b.shape[0] for b in blocks)
        while have < count:
            blocks.append(gen.uniform(lo, hi,
                                      size=(STREAM_BLOCK, self.anchors.shape[1])))
            have += STREAM_BLOCK
        return blocks

    def _first_hit(self, k, j, x, radius):
        """Index/point of the first proposal at (k, j) within `radius` of x."""
        offset = 0
        count = STREAM_BLOCK
        while count <= MAX_STREAM:
            blocks = self._stream(k, j, count)
            for b in blocks[offset:]:
                hits = norm_batch(self.space, b - x) <= radius
                if hits.any():
                    return b[int(hits.argmax())]
            offset = len(blocks)
            count *= 2
        raise RuntimeError("proposal stream exhausted without a hit")

    def weights(self, x):
        """Convex anchor weights of the extension at x."""
        x = np.asarray(x, dtype=float)
        match = np.all(self.anchors == x, axis=1)
        w = np.zeros(self.anchors.shape[0])
        if match.any():
            w[int(match.argmax())] = 1.0
            return w
        dists = norm_batch(self.space, self.anchors - x)
        d = float(dists.min())
        for k in active_scales(d):
            phi = float(bump(d / 2.0 ** k))
            radius = 2.0 ** (k - 1)
            for j in range(self.mc_rounds):
                center = self._first_hit(k, j, x, radius)
                sel = int(np.argmin(norm_batch(self.space,
                                               self.anchors - center)))
                w[sel] += phi
        return w / w.sum()

    def __call__(self, x):
        value, _ = evaluate(self, x)
        return value


def build_extension(sp, anchors, values, target=None, mc_rounds=64, seed=0):
    """Assemble the extension operator for anchors C and values f(C)."""
    s = space(sp)
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if anchors.size == 0:
        raise InputError("anchors must be nonempty")
    if anchors.shape[1] != s.dim:
        raise InputError("anchor dimension mismatch")
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != anchors.shape[0]:
        raise InputError("one value per anchor required")
    _, keep = np.unique(anchors, axis=0, return_index=True)
    if keep.size < anchors.shape[0]:
        warnings.warn("duplicate anchors removed")
        keep = np.sort(keep)
        anchors, values = anchors[keep], values[keep]
    if anchors.shape[0] > 1:
        diff = anchors[:, None, :] - anchors[None, :, :]
        gaps = norm_batch(s, diff.reshape(-1, s.dim))
        positive = gaps[gaps > 0]
        k_min = math.floor(math.log2(positive.min())) - 2
        k_max = math.ceil(math.log2(positive.max())) + 2
    else:
        k_min, k_max = -2, 2
    if target is None:
        from .space import lp
        target = lp(values.shape[1], 2)
    return ExtensionOperator(space=s, anchors=anchors, values=values,
                             target=space(target),
                             scale_range=(k_min, k_max),
                             mc_rounds=int(mc_rounds), seed=int(seed))


def evaluate(op, x):
    """F(x) = sum_i w_i f(c_i) together with the convex weights w."""
    w = op.weights(x)
    return op.values.T @ w, w


def separation_profile_cloud(sp, samples=50_000, seed=0):
    """Reusable estimator of the profile 4*psi for many displacements."""
    s = space(sp)
    G, wt = psi_gradient_cloud(s, samples=samples, seed=seed)

    def profile(w):
        val, _ = psi_from_cloud(s, G, wt, np.asarray(w, dtype=float))
        return 4.0 * val

    return profile


def lipschitz_ratio_scan(op, pair_count=100, seed=0, profile_samples=50_000,
                         box_scale=1.5):
    """Max over random pairs of ||F(x) - F(y)||_Z / (4 psi(x - y)).

    Pairs are drawn uniformly from the anchor bounding box inflated by
    box_scale; anchor-anchor pairs are included.  Returns (ratio, (x, y))
    for the maximizing pair; the maximum is a sampled, not certified, value.
    """
    s = op.space
    profile = separation_profile_cloud(s, samples=profile_samples, seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x11b)))
    lo = op.anchors.min(axis=0)
    hi = op.anchors.max(axis=0)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) + 1e-3
    lo = mid - box_scale * half
    hi = mid + box_scale * half
    xs = rng.uniform(lo, hi, size=(pair_count, s.dim))
    ys = rng.uniform(lo, hi, size=(pair_count, s.dim))
    na = op.anchors.shape[0]
    if na >= 2:
        ai = rng.integers(0, na, size=(8, 2))
        ai = ai[ai[:, 0] != ai[:, 1]]
        xs = np.vstack([xs, op.anchors[ai[:, 0]]])
        ys = np.vstack([ys, op.anchors[ai[:, 1]]])
    best, best_pair = 0.0, (xs[0], ys[0])
    for x, y in zip(xs, ys):
        if np.array_equal(x, y):
            continue
        fx, _ = evaluate(op, x)
        fy, _ = evaluate(op, y)
        num = float(norm_batch(op.target, fx - fy))
        den = profile(x - y)
        if den <= 0:
            continue
        ratio = num / den
        if ratio > best:
            best, best_pair = ratio, (x, y)
    return best, best_pair
