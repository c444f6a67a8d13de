"""Volumes, cone-measure sampling, surface ratios, projection-body norms.

All stochastic operations return a `MonteCarloEstimate` and are driven by a
single integer seed.  Trials are split into fixed-size independently seeded
substreams and merged by exact (fsum) summation, so results are bit-identical
for a given (inputs, seed, trials) regardless of worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .space import (INF, CapabilityError, InputError, NormedSpace, coord_bound,
                    gradient_batch, norm_batch, space)

CHUNK = 1 << 15


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    trials: int
    seed: int

    def __iter__(self):  # allow tuple-unpacking in quick scripts
        return iter((self.value, self.stderr))


@dataclass(frozen=True)
class ConeSamples:
    """A batch of cone-measure samples: boundary points with importance
    weights (weight 1 for direct samplers, self-normalizing otherwise)."""
    points: np.ndarray  # (count, dim), on the unit sphere of the norm
    weights: np.ndarray  # (count,)


def exact_estimate(value, seed=0):
    return MonteCarloEstimate(value=float(value), stderr=0.0, trials=1,
                              seed=seed)


# ---------------------------------------------------------------------------
# substream Monte Carlo engine


def _chunk_sizes(trials, chunk=CHUNK):
    n_chunks = max(1, -(-trials // chunk))
    sizes = [chunk] * (n_chunks - 1) + [trials - chunk * (n_chunks - 1)]
    return sizes


def estimate_mean(kernel, trials, seed, workers=1, chunk=CHUNK):
    """Self-normalized weighted mean of kernel outputs.

    ``kernel(rng, m)`` must return arrays ``(f, w)`` of length m.  The
    estimate is sum(w*f)/sum(w) with a delta-method standard error; for unit
    weights this is the ordinary sample mean and stderr.
    """
    sizes = _chunk_sizes(trials, chunk)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def one(i):
        rng = np.random.default_rng(streams[i])
        f, w = kernel(rng, sizes[i])
        f = np.asarray(f, dtype=float)
        w = np.asarray(w, dtype=float)
        wf = w * f
        return (w.sum(), wf.sum(), (wf * f).sum(),
                (w * w).sum(), (w * wf).sum(), (wf * wf).sum())

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(one, range(len(sizes))))
    else:
        rows = [one(i) for i in range(len(sizes))]
    sw, swf, swff, sww, swwf, swwff = (math.fsum(r[k] for r in rows)
                                       for k in range(6))
    mu = swf / sw
    var = max(swwff - 2.0 * mu * swwf + mu * mu * sww, 0.0)
    return MonteCarloEstimate(value=mu, stderr=math.sqrt(var) / sw,
                              trials=trials, seed=seed)


# ---------------------------------------------------------------------------
# exact volumes


def volume_exact(sp):
    """Exact unit-ball volume where a closed form exists."""
    desc = space(sp).descriptor
    return _vol_exact(desc)


def _vol_exact(desc):
    k = desc.kind
    if k == "lp":
        if desc.p == INF:
            return 2.0 ** desc.n
        return math.exp(desc.n * math.log(2.0)
                        + desc.n * gammaln(1.0 + 1.0 / desc.p)
                        - gammaln(1.0 + desc.n / desc.p))
    if k == "orlicz_beta":
        # 2^m * (1 - e^{-beta} * sum_{j<m} beta^j/j!), i.e. a regularized
        # lower incomplete gamma at integer order m.
        return 2.0 ** desc.n * float(gammainc(desc.n, desc.beta))
    if k == "block_lp":
        vols = [_vol_exact(b) for b in desc.blocks]
        if desc.p == INF:
            return math.prod(vols)
        logv = math.fsum(math.log(v) for v in vols)
        logv += math.fsum(gammaln(1.0 + b.n / desc.p) for b in desc.blocks)
        logv -= gammaln(1.0 + desc.n / desc.p)
        return math.exp(logv)
    raise CapabilityError("no exact volume for kind %r" % (k,))


def euclidean_ball_volume(n):
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(1.0 + 0.5 * n))


# ---------------------------------------------------------------------------
# samplers


def cone_sample(sp, count, seed=0):
    """Sample the cone (boundary) measure of the unit ball.

    Direct samplers exist for lp leaves (sign-symmetric p-generalized
    Gaussians, normalized), their lp block sums (per-block radii with
    Gamma(m_j/p)^{1/p} law), and the Orlicz family (push-forward of the l_1
    cone measure with self-normalized importance weights).  Schatten and
    ball-intersection spaces fall back to hit-and-run followed by radial
    projection.
    """
    s = space(sp)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if s.has_cone_sampler:
        pts, w = _cone_direct(s.descriptor, count, rng)
        return ConeSamples(points=pts, weights=w)
    pts = hit_and_run_sample(s, count, seed=seed)
    nrm = norm_batch(s, pts)
    return ConeSamples(points=pts / nrm[:, None],
                       weights=np.ones(count))


def _cone_direct(desc, count, rng):
    k = desc.kind
    if k == "lp":
        n, p = desc.n, desc.p
        if p == INF:
            x = rng.uniform(-1.0, 1.0, size=(count, n))
        else:
            x = rng.standard_gamma(1.0 / p, size=(count, n)) ** (1.0 / p)
            x *= rng.choice([-1.0, 1.0], size=(count, n))
        return x / norm_batch(desc, x)[:, None], np.ones(count)
    if k == "orlicz_beta":
        m, beta = desc.n, desc.beta
        e = rng.standard_exponential(size=(count, m))
        tau = e / e.sum(axis=1)[:, None]
        tau *= rng.choice([-1.0, 1.0], size=(count, m))
        z = -np.sign(tau) * np.expm1(-beta * np.abs(tau))
        w = np.expm1(beta * np.abs(tau)).sum(axis=1)
        return z, w
    if k == "block_lp":
        X = np.empty((count, desc.n))
        w = np.ones(count)
        off = 0
        for b in desc.blocks:
            pts, bw = _cone_direct(b, count, rng)
            if desc.p == INF:
                radius = rng.random(count) ** (1.0 / b.n)
            else:
                radius = rng.standard_gamma(b.n / desc.p, size=count) \
                    ** (1.0 / desc.p)
            X[:, off:off + b.n] = pts * radius[:, None]
            w *= bw
            off += b.n
        return X / norm_batch(desc, X)[:, None], w
    raise CapabilityError("no direct cone sampler for kind %r" % (k,))


def uniform_ball_sample(sp, count, seed=0):
    """Weighted points uniform in the unit ball (radius law U^{1/n})."""
    s = space(sp)
    cs = cone_sample(s, count, seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5eed)))
    radius = rng.random(count) ** (1.0 / s.dim)
    return cs.points * radius[:, None], cs.weights


def hit_and_run_sample(sp, count, burn_in=None, seed=0, chains=64, thin=None):
    """Approximately uniform samples from the unit ball via hit-and-run.

    Runs `chains` parallel chains from the origin; each step picks a uniform
    direction, brackets the chord through the current point by bisection and
    jumps to a uniform point on it.  Samples are taken every `thin` steps
    after `burn_in` steps, so within-chain correlation is small but not
    exactly zero (stated diagnostic: the radial mean should approach
    n/(n+1)).
    """
    s = space(sp)
    n = s.dim
    if burn_in is None:
        burn_in = 100 * n
    if thin is None:
        thin = n
    chains = min(chains, count)
    per = -(-count // chains)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = np.zeros((chains, n))
    out = np.empty((chains * per, n))
    got = 0
    steps = burn_in + per * thin
    for step in range(steps):
        d = rng.standard_normal((chains, n))
        d /= np.sqrt((d * d).sum(axis=1))[:, None]
        t_plus = _chord_end(s, x, d)
        t_minus = _chord_end(s, x, -d)
        u = rng.random(chains)
        x = x + (u * (t_plus + t_minus) - t_minus)[:, None] * d
        if step >= burn_in and (step - burn_in) % thin == thin - 1:
            out[got:got + chains] = x
            got += chains
    return out[:count]


def _chord_end(s, x, d, iters=48):
    """Distance along direction d from x (inside the ball) to the boundary."""
    nx = norm_batch(s, x)
    nd = norm_batch(s, d)
    lo = np.zeros(x.shape[0])
    hi = 1.000001 * (1.0 + nx) / nd
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = norm_batch(s, x + mid[:, None] * d) <= 1.0
        lo[inside] = mid[inside]
        hi[~inside] = mid[~inside]
    return lo


# ---------------------------------------------------------------------------
# Monte Carlo volume


def volume_mc(sp, trials=100_000, seed=0, workers=1, force=False):
    """Hit-or-miss volume over the l_inf bounding box of the unit ball."""
    s = space(sp)
    n = s.dim
    if n > 20 and not force:
        raise CapabilityError(
            "volume_mc hit rate is infeasible for dim > 20 (use force=True)")
    c = coord_bound(s)
    box = (2.0 * c) ** n

    def kernel(rng, m):
        x = rng.uniform(-c, c, size=(m, n))
        return (norm_batch(s, x) <= 1.0).astype(float), np.ones(m)

    est = estimate_mean(kernel, trials, seed, workers=workers)
    return MonteCarloEstimate(value=est.value * box, stderr=est.stderr * box,
                              trials=trials, seed=seed)


def volume_of(sp, trials=200_000, seed=0):
    """Exact volume when available, Monte Carlo otherwise."""
    s = space(sp)
    if s.has_exact_volume:
        return exact_estimate(volume_exact(s), seed=seed)
    return volume_mc(s, trials=trials, seed=seed)


# ---------------------------------------------------------------------------
# surface ratios and isoperimetric quotients


def _cone_kernel(s, seed):
    """Returns a kernel-factory: kernel(rng, m) -> (points, weights)."""
    if s.has_cone_sampler:
        def gen(rng, m):
            return _cone_direct(s.descriptor, m, rng)
        return gen
    # membership-oracle fallback: one shared hit-and-run cloud, resampled
    # per chunk (deterministic given the master seed)
    def gen(rng, m):
        sub = int(rng.integers(0, 2 ** 63))
        pts = hit_and_run_sample(s, m, seed=sub)
        pts /= norm_batch(s, pts)[:, None]
        return pts, np.ones(m)
    return gen


def surface_ratio(sp, samples=100_000, seed=0, workers=1):
    """vol_{n-1}(boundary)/vol(ball) = n * E_cone ||grad norm||_2."""
    s = space(sp)
    gen = _cone_kernel(s, seed)
    n = s.dim

    def kernel(rng, m):
        pts, w = gen(rng, m)
        g = gradient_batch(s, pts)
        return n * np.sqrt((g * g).sum(axis=1)), w

    return estimate_mean(kernel, samples, seed, workers=workers)


def iq(sp, samples=100_000, seed=0, workers=1):
    """Isoperimetric quotient surface/vol^{(n-1)/n} (Monte Carlo path)."""
    s = space(sp)
    sr = surface_ratio(s, samples=samples, seed=seed, workers=workers)
    vol = volume_of(s, seed=seed)
    root = vol.value ** (1.0 / s.dim)
    err = sr.stderr * root
    if vol.stderr > 0:
        err = math.hypot(err, sr.value * root * vol.stderr
                         / (s.dim * vol.value))
    return MonteCarloEstimate(value=sr.value * root, stderr=err,
                              trials=samples, seed=seed)


def iq_exact(sp):
    """Closed-form isoperimetric quotient (cube, Euclidean ball, l_1)."""
    desc = space(sp).descriptor
    if desc.kind != "lp":
        raise CapabilityError("iq_exact supports lp with p in {1, 2, inf}")
    n, p = desc.n, desc.p
    if p == INF:
        return 2.0 * n
    if p == 2.0:
        return n * math.sqrt(math.pi) / math.exp(gammaln(1.0 + 0.5 * n) / n)
    if p == 1.0:
        return n * math.sqrt(n) * _vol_exact(desc) ** (1.0 / n)
    raise CapabilityError("iq_exact supports lp with p in {1, 2, inf}")


# ---------------------------------------------------------------------------
# polar projection-body norm psi


def psi_closed_form(sp, w):
    """Closed form of psi where known (l_inf and l_2); None otherwise."""
    desc = space(sp).descriptor
    w = np.asarray(w, dtype=float)
    if desc.kind == "lp" and desc.p == INF:
        return 0.5 * float(np.abs(w).sum())
    if desc.kind == "lp" and desc.p == 2.0:
        n = desc.n
        ratio = euclidean_ball_volume(n - 1) / euclidean_ball_volume(n)
        return float(np.sqrt((w * w).sum())) * ratio
    return None


def psi(sp, w, samples=100_000, seed=0, workers=1, closed_form=True):
    """psi(w) = vol_{n-1}(shadow of the ball orthogonal to w) * ||w||_2 / vol.

    Computed as (n/2) E_cone |<w, grad norm>|, which turns the shadow volume
    into a single cone-measure expectation.
    """
    s = space(sp)
    w = np.asarray(w, dtype=float)
    if w.shape != (s.dim,):
        raise InputError("direction length mismatch")
    if not np.any(w):
        return exact_estimate(0.0, seed=seed)
    if closed_form:
        cf = psi_closed_form(s, w)
        if cf is not None:
            return exact_estimate(cf, seed=seed)
    gen = _cone_kernel(s, seed)
    n = s.dim

    def kernel(rng, m):
        pts, wt = gen(rng, m)
        g = gradient_batch(s, pts)
        return 0.5 * n * np.abs(g @ w), wt

    return estimate_mean(kernel, samples, seed, workers=workers)


def psi_gradient_cloud(sp, samples=100_000, seed=0):
    """Shared cloud (gradients, weights) so that psi of many directions can
    be evaluated as (n/2) * weighted-mean |G @ w| with one matmul each."""
    s = space(sp)
    cs = cone_sample(s, samples, seed=seed)
    return gradient_batch(s, cs.points), cs.weights


def psi_from_cloud(s, G, wt, w):
    s = space(s)
    f = np.abs(G @ np.asarray(w, dtype=float))
    sw = wt.sum()
    mu = float((wt * f).sum() / sw)
    var = float((wt * wt * (f - mu) ** 2).sum()) / sw ** 2
    return 0.5 * s.dim * mu, 0.5 * s.dim * math.sqrt(var)


def hyperplane_projection_volume(sp, w, samples=100_000, seed=0, workers=1):
    """vol_{n-1} of the shadow of the unit ball orthogonal to w."""
    s = space(sp)
    w = np.asarray(w, dtype=float)
    ps = psi(s, w, samples=samples, seed=seed, workers=workers)
    vol = volume_of(s, seed=seed)
    scale = vol.value / math.sqrt(float((w * w).sum()))
    err = ps.stderr * scale
    if vol.stderr > 0:
        err = math.hypot(err, ps.value * vol.stderr
                         / math.sqrt(float((w * w).sum())))
    return MonteCarloEstimate(value=ps.value * scale, stderr=err,
                              trials=ps.trials, seed=seed)


# ---------------------------------------------------------------------------
# maximization over directions


def _sphere_ascent(objective, subgrad, n, restarts, seed, iters=300,
                   tol=1e-10):
    """Multi-restart projected (sub)gradient ascent on the Euclidean sphere.

    The objectives used here (psi and norm values) are convex and even, so
    ascent to a local max of the restriction to the sphere is well behaved at
    desk scale; restart dispersion is the practical quality diagnostic.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xa5ce)))
    best_val, best_z, vals = -np.inf, None, []
    starts = [np.ones(n) / math.sqrt(n), np.eye(n)[0]]
    starts += [rng.standard_normal(n) for _ in range(restarts)]
    for z in starts:
        z = z / math.sqrt(float(z @ z))
        step = 1.0
        fz = objective(z)
        for _ in range(iters):
            g = subgrad(z)
            cand = z + step * g
            cand /= math.sqrt(float(cand @ cand))
            fc = objective(cand)
            if fc > fz + tol:
                z, fz = cand, fc
            else:
                step *= 0.5
                if step < 1e-12:
                    break
        vals.append(fz)
        if fz > best_val:
            best_val, best_z = fz, z
    return best_z, best_val, float(np.std(vals))


def maxproj(sp, restarts=32, samples=100_000, seed=0):
    """Largest hyperplane shadow: direction and its projection volume."""
    s = space(sp)
    n = s.dim
    cf = psi_closed_form(s, np.ones(n))
    if s.descriptor.kind == "lp" and s.descriptor.p == INF:
        def objective(z):
            return 0.5 * float(np.abs(z).sum())

        def subgrad(z):
            return 0.5 * np.sign(z)
        stderr_psi = 0.0
    elif s.descriptor.kind == "lp" and s.descriptor.p == 2.0:
        ratio = euclidean_ball_volume(n - 1) / euclidean_ball_volume(n)

        def objective(z):
            return ratio

        def subgrad(z):
            return np.zeros(n)
        stderr_psi = 0.0
    else:
        G, wt = psi_gradient_cloud(s, samples=samples, seed=seed)
        sw = wt.sum()

        def objective(z):
            return 0.5 * n * float((wt * np.abs(G @ z)).sum() / sw)

        def subgrad(z):
            return 0.5 * n * (G.T @ (wt * np.sign(G @ z))) / sw
        stderr_psi = None
    z, val, spread = _sphere_ascent(objective, subgrad, n, restarts, seed)
    if stderr_psi is None:
        _, stderr_psi = psi_from_cloud(s, G, wt, z)
    vol = volume_of(s, seed=seed)
    err = math.hypot(stderr_psi * vol.value, val * vol.stderr, spread * vol.value)
    return z, MonteCarloEstimate(value=val * vol.value, stderr=err,
                                 trials=samples, seed=seed)


def cone_volume(sp, z, samples=100_000, seed=0, workers=1):
    """Volume of the radial cone over the boundary cap in direction z:
    (1/n) * shadow-volume(z) * ||z||_2 = psi(z) * vol / n."""
    s = space(sp)
    ps = psi(s, z, samples=samples, seed=seed, workers=workers)
    vol = volume_of(s, seed=seed)
    scale = vol.value / s.dim
    err = math.hypot(ps.stderr * scale, ps.value * vol.stderr / s.dim)
    return MonteCarloEstimate(value=ps.value * scale, stderr=err,
                              trials=ps.trials, seed=seed)


# ---------------------------------------------------------------------------
# mean width and the ball-intersection construction


def gaussian_l2_mean(n):
    return math.sqrt(2.0) * math.exp(gammaln(0.5 * (n + 1)) - gammaln(0.5 * n))


def mean_width_dual(sp, samples=100_000, seed=0, workers=1):
    """Spherical mean of the norm, M = E ||G||_X / E ||G||_2 over Gaussians."""
    s = space(sp)
    denom = gaussian_l2_mean(s.dim)

    def kernel(rng, m):
        g = rng.standard_normal((m, s.dim))
        return norm_batch(s, g) / denom, np.ones(m)

    return estimate_mean(kernel, samples, seed, workers=workers)


@dataclass(frozen=True)
class CauchyCheck:
    lhs: float
    rhs: float
    residual: float
    sigma: float


def cauchy_surface_identity_check(sp, samples=100_000, directions=4096,
                                  seed=0, workers=1):
    """Relative residual of the Cauchy surface-area identity:

    surface/vol  vs  (2 sqrt(pi) Gamma((n+1)/2)/Gamma(n/2)) * mean_z psi(z),
    with z uniform on the Euclidean sphere (identity divided through by the
    ball volume on both sides).
    """
    s = space(sp)
    n = s.dim
    lhs = surface_ratio(s, samples=samples, seed=seed, workers=workers)
    c_n = 2.0 * math.sqrt(math.pi) * math.exp(gammaln(0.5 * (n + 1))
                                              - gammaln(0.5 * n))
    G, wt = psi_gradient_cloud(s, samples=samples, seed=seed + 1)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xca0c)))
    Z = rng.standard_normal((directions, n))
    Z /= np.sqrt((Z * Z).sum(axis=1))[:, None]
    # mean over directions of psi(z); one matmul, shared cloud
    F = np.abs(G @ Z.T)  # (samples, directions)
    sw = wt.sum()
    per_dir = 0.5 * n * (wt @ F) / sw
    rhs_val = c_n * float(per_dir.mean())
    rhs_err = c_n * float(per_dir.std() / math.sqrt(directions))
    # cloud noise: reuse the per-sample average over directions
    per_sample = 0.5 * n * F.mean(axis=1)
    mu = float((wt * per_sample).sum() / sw)
    cloud_err = c_n * math.sqrt(
        float((wt * wt * (per_sample - mu) ** 2).sum())) / sw
    sigma = math.hypot(lhs.stderr, math.hypot(rhs_err, cloud_err)) / rhs_val
    return CauchyCheck(lhs=lhs.value, rhs=rhs_val,
                       residual=(lhs.value - rhs_val) / rhs_val, sigma=sigma)


def intersect_construction(sp, r=None, samples=50_000, restarts=16, seed=0):
    """Intersect the unit ball with r*B_2 (default r = 1/(2M)) and report the
    volume root and largest-shadow ratios that make the construction useful:
    vol(L)^{1/n} against 1/(M sqrt(n)), and MaxProj(L) against
    vol(L)^{(n-1)/n}."""
    from .space import intersect_ball
    s = space(sp)
    n = s.dim
    M = mean_width_dual(s, samples=samples, seed=seed)
    if r is None:
        r = 1.0 / (2.0 * M.value)
    L = space(intersect_ball(s.descriptor, r))
    vol = volume_mc(L, trials=4 * samples, seed=seed)
    _, mp = maxproj(L, restarts=restarts, samples=samples, seed=seed)
    root = vol.value ** (1.0 / n)
    report = {
        "r": r,
        "mean_width": M.value,
        "vol_root": root,
        "vol_root_floor": 1.0 / (M.value * math.sqrt(n)),
        "maxproj": mp.value,
        "vol_power": vol.value ** ((n - 1.0) / n),
    }
    return L, report
