"""Separation-modulus bounds and companion-space constructions.

The lower bound is the explicit external-volume-ratio formula for canonically
positioned spaces; the upper bound transfers the separation profile of an
auxiliary space Y onto X (4 * Lip(Y->X) * sup over the X-sphere of psi_Y).
Companion spaces round a high-exponent lp ball into an Orlicz-type body of
comparable norm whose polar projection profile grows like sqrt(n), and
sweeps emit per-dimension records with log-log slopes.
"""

import csv
import io
import json
import math

from dataclasses import dataclass, field

import numpy as np

from .space import (INF, CapabilityError, InputError, SpaceDescriptor,
                    block_lp, coord_bound, circumradius, lp, norm_batch,
                    orlicz, space)
from .geometry import (MonteCarloEstimate, cone_sample, euclidean_ball_volume,
                       exact_estimate, iq, iq_exact, psi, psi_closed_form,
                       psi_gradient_cloud, psi_from_cloud, volume_exact)


def external_volume_ratio(sp):
    """evr(X) = (vol(circumradius * B_2) / vol(B_X))^{1/n} for canonically
    positioned spaces, whose tightest invariant ellipsoid is a round ball."""
    s = space(sp)
    if not s.is_canonically_positioned:
        raise CapabilityError(
            "external volume ratio needs a canonically positioned space "
            "(lp, orlicz, schatten, uniform block, or ball intersection)")
    r = circumradius(s)
    n = s.dim
    vol = volume_exact(s)
    return r * (euclidean_ball_volume(n) / vol) ** (1.0 / n)


def sep_lower_evr(sp):
    """Explicit separation-modulus lower bound

        evr(X) * 2 * (n!)^{1/(2n)} * Gamma(1 + n/2)^{1/n} / sqrt(pi*n),

    which tends to (sqrt(2)/(e*sqrt(pi))) * evr(X) * sqrt(n)."""
    s = space(sp)
    n = s.dim
    evr = external_volume_ratio(s)
    log_term = (math.lgamma(n + 1) / (2.0 * n)
                + math.lgamma(1.0 + 0.5 * n) / n)
    return evr * 2.0 * math.exp(log_term) / math.sqrt(math.pi * n)


def sep_lower_limit_constant():
    """The n -> infinity limit of sep_lower_evr(l_2^n)/sqrt(n)."""
    return math.sqrt(2.0) / (math.e * math.sqrt(math.pi))


# ---------------------------------------------------------------------------
# upper bound: transfer of the psi profile of Y through the X norm


def _ball_ascent(objective, subgrad, normalize, n, restarts, seed, steps=200):
    """Multi-restart projected subgradient ascent of a convex objective over
    the unit sphere of a norm (maximum lies on the sphere)."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xa5ce)))
    best_z, best_val = None, -np.inf
    vals = []
    starts = [np.ones(n)] + [v for i in range(min(n, restarts))
                             for v in (np.eye(n)[i],)]
    while len(starts) < restarts + n + 1:
        starts.append(rng.standard_normal(n))
    for z0 in starts:
        z = normalize(np.asarray(z0, dtype=float))
        fz = objective(z)
        step = 0.5
        for _ in range(steps):
            g = subgrad(z)
            gn = float(np.linalg.norm(g))
            if gn < 1e-15:
                break
            cand = normalize(z + step * g / gn)
            fc = objective(cand)
            if fc > fz:
                z, fz = cand, fc
            else:
                step *= 0.5
                if step < 1e-12:
                    break
        vals.append(fz)
        if fz > best_val:
            best_val, best_z = fz, z
    return best_z, best_val, float(np.std(vals))


def _sup_norm_on_sphere(sp_dom, sp_val, restarts, seed):
    """sup of the sp_val norm over the unit sphere of sp_dom."""
    dom = space(sp_dom)
    val = space(sp_val)
    dv = val.descriptor
    if dv.kind == "lp" and dv.p == INF:
        return float(coord_bound(dom)), None
    if dv.kind == "lp" and dv.p == 2.0 and dom.is_canonically_positioned:
        return float(circumradius(dom)), None

    def normalize(z):
        return z / float(norm_batch(dom, z))

    def objective(z):
        return float(norm_batch(val, z))

    from .space import norm_gradient

    def subgrad(z):
        return norm_gradient(val, z)

    # seed candidate starts with extreme points of the domain ball
    z, best, spread = _ball_ascent(objective, subgrad, normalize, dom.dim,
                                   restarts, seed)
    cs = cone_sample(dom, 256, seed=seed + 1)
    cand = cs.points / norm_batch(dom, cs.points)[:, None]
    vals = norm_batch(val, cand)
    best = max(best, float(vals.max()))
    return best, z


def sep_upper_two_norm(sp_x, sp_y=None, restarts=16, samples=100_000, seed=0,
                       workers=1):
    """Separation-modulus upper bound for X obtained from the psi profile of
    an auxiliary space Y:

        4 * (sup_{z in S_Y} ||z||_X) * (sup_{z in S_X} psi_Y(z)).

    The first factor rescales Y so its ball sits inside the X ball; both
    suprema are heuristic maxima from multi-restart ascent (exact for the
    symmetric special cases below), and the returned stderr combines the
    Monte Carlo error of psi at the argmax with the restart dispersion."""
    x = space(sp_x)
    y = space(sp_x if sp_y is None else sp_y)
    if x.dim != y.dim:
        raise InputError("spaces must share a dimension")
    n = x.dim
    s_factor, _ = _sup_norm_on_sphere(y, x, restarts, seed)
    dx = x.descriptor

    # psi_Y is a norm, hence convex: its maximum over the X ball sits at an
    # extreme point.  For sign-invariant Y the cube's maximum is the all-ones
    # vertex and the cross-polytope's is a coordinate direction, both exact.
    if dx.kind == "lp" and dx.p == INF:
        candidates = [np.ones(n)]
        spread = 0.0
    elif dx.kind == "lp" and dx.p == 1.0:
        candidates = [e for e in np.eye(n)]
        spread = 0.0
    else:
        cf_probe = psi_closed_form(y, np.ones(n))
        if cf_probe is not None:
            def objective(z):
                return psi_closed_form(y, z)

            from .space import norm_gradient

            def subgrad(z):
                eps = 1e-6
                g = np.empty(n)
                base = objective(z)
                for i in range(n):
                    dz = z.copy()
                    dz[i] += eps
                    g[i] = (objective(dz) - base) / eps
                return g
        else:
            G, wt = psi_gradient_cloud(y, samples=samples, seed=seed)
            sw = wt.sum()

            def objective(z):
                return 0.5 * n * float((wt * np.abs(G @ z)).sum() / sw)

            def subgrad(z):
                return 0.5 * n * (G.T @ (wt * np.sign(G @ z))) / sw

        def normalize(z):
            return z / float(norm_batch(x, z))

        z, _, spread = _ball_ascent(objective, subgrad, normalize, n,
                                    restarts, seed)
        candidates = [z]

    best = None
    for z in candidates:
        est = psi(y, z, samples=samples, seed=seed, workers=workers)
        if best is None or est.value > best.value:
            best = est
    value = 4.0 * s_factor * best.value
    stderr = 4.0 * s_factor * math.hypot(best.stderr, spread)
    return MonteCarloEstimate(value=value, stderr=stderr,
                              trials=best.trials, seed=seed)


# ---------------------------------------------------------------------------
# companion spaces


def companion_space(sp):
    """An auxiliary space Y with norm equivalent to the given lp space whose
    polar projection profile peaks at the sqrt(n) scale.

    For p <= log(2n) the space is its own companion.  Otherwise (including
    p = inf, proxied by log(2n)) the lp ball is rounded into Orlicz blocks:
    pick the largest divisor m of n with max(p_eff, 2) <= m <= e^{p_eff} and
    return l_p^{n/m}(Omega_beta^m) with beta = (m-1)/2; whole-n divisors give
    the single rounded body Omega_{(n-1)/2}^n.  With no admissible divisor,
    n = km + r is patched with an l_inf sum of a small Orlicz block."""
    s = space(sp)
    d = s.descriptor
    if d.kind != "lp":
        raise CapabilityError("companion construction applies to lp spaces")
    n = s.dim
    p_eff = math.log(2.0 * n) if d.p == INF else float(d.p)
    if d.p != INF and d.p <= math.log(2.0 * n):
        return s
    lo = max(p_eff, 2.0)
    hi = min(math.exp(p_eff), float(n))
    p_out = p_eff
    divisors = [m for m in range(2, n + 1)
                if n % m == 0 and lo <= m <= hi]
    if divisors:
        m = max(divisors)
        beta = 0.5 * (m - 1)
        if m == n:
            return space(orlicz(n, beta))
        return space(block_lp(p_out, [orlicz(m, beta)] * (n // m)))
    m = int(min(hi, n))
    if m < 2:
        return space(lp(n, math.log(2.0 * n)))
    k, r = divmod(n, m)
    beta = 0.5 * (m - 1)
    main = block_lp(p_out, [orlicz(m, beta)] * k)
    if r == 0:
        return space(main)
    patch = orlicz(r, max(0.5 * (r - 1), 0.5))
    return space(block_lp(INF, [main, patch]))


def companion_sandwich(sp, companion=None, samples=2048, seed=0):
    """Empirical equivalence constants between a space and its companion:
    (min ratio, max ratio) of companion-norm / original-norm over cone-sample
    directions plus coordinate axes and the diagonal."""
    s = space(sp)
    y = companion_space(s) if companion is None else space(companion)
    pts = cone_sample(s, samples, seed=seed).points
    pts = np.vstack([pts, np.eye(s.dim), np.ones((1, s.dim))])
    ratio = norm_batch(y, pts) / norm_batch(s, pts)
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------------------
# sweeps


CSV_COLUMNS = ("kind", "n", "p", "q", "beta", "quantity", "value", "stderr",
               "lower", "upper", "seed")


@dataclass(frozen=True)
class SweepRecord:
    descriptor: SpaceDescriptor
    n: int
    quantity: str
    value: float
    stderr: float = 0.0
    lower: float = None
    upper: float = None
    seed: int = 0

    def row(self):
        d = self.descriptor
        p = q = beta = ""
        if d.kind == "lp":
            p = _fmt_p(d.p)
        elif d.kind == "schatten":
            p = _fmt_p(d.p)
        elif d.kind == "orlicz_beta":
            beta = repr(float(d.beta))
        elif d.kind == "block_lp":
            p = _fmt_p(d.p)
            inner = d.blocks[0]
            if inner.kind == "lp":
                q = _fmt_p(inner.p)
            elif inner.kind == "orlicz_beta":
                beta = repr(float(inner.beta))
        return {
            "kind": d.kind, "n": str(self.n), "p": p, "q": q, "beta": beta,
            "quantity": self.quantity, "value": repr(float(self.value)),
            "stderr": repr(float(self.stderr)),
            "lower": "" if self.lower is None else repr(float(self.lower)),
            "upper": "" if self.upper is None else repr(float(self.upper)),
            "seed": str(self.seed),
        }


def _fmt_p(p):
    return "inf" if p == INF else repr(float(p))


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()


def rows_from_csv(text):
    """Parse emitted CSV back into a list of dicts with typed fields."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for row in csv.DictReader(io.StringIO("\n".join(lines))):
        parsed = dict(row)
        parsed["n"] = int(row["n"])
        parsed["seed"] = int(row["seed"])
        for key in ("value", "stderr"):
            parsed[key] = float(row[key])
        for key in ("lower", "upper"):
            parsed[key] = float(row[key]) if row[key] else None
        for key in ("p", "q"):
            if row[key]:
                parsed[key] = INF if row[key] == "inf" else float(row[key])
            else:
                parsed[key] = None
        parsed["beta"] = float(row["beta"]) if row["beta"] else None
        out.append(parsed)
    return out


def records_to_json(records):
    return json.dumps([r.row() for r in records], indent=2)


def _derived_seed(master, index):
    return int(np.random.SeedSequence([int(master), int(index)])
               .generate_state(1)[0])


def sweep(family="lp", p=2.0, dims=(4, 8, 16, 32), companion=False,
          quantities=("sep_lower", "sep_upper", "iq"), samples=100_000,
          restarts=8, seed=0, workers=1):
    """Per-dimension separation bounds and geometric quantities.

    Returns a list of SweepRecord in config order; rows carry derived seeds
    so any single row can be reproduced in isolation."""
    records = []
    idx = 0
    for n in dims:
        desc = lp(n, p) if family == "lp" else lp(n, INF)
        x = space(desc)
        y = companion_space(x) if companion else x
        lower = sep_lower_evr(x) if "sep_lower" in quantities else None
        upper_est = None
        if "sep_upper" in quantities:
            upper_est = sep_upper_two_norm(
                x, y, restarts=restarts, samples=samples,
                seed=_derived_seed(seed, idx), workers=workers)
        if lower is not None:
            records.append(SweepRecord(
                descriptor=x.descriptor, n=n, quantity="sep_lower",
                value=lower, stderr=0.0, lower=lower,
                upper=None if upper_est is None else upper_est.value,
                seed=_derived_seed(seed, idx)))
        if upper_est is not None:
            records.append(SweepRecord(
                descriptor=y.descriptor, n=n, quantity="sep_upper",
                value=upper_est.value, stderr=upper_est.stderr,
                lower=lower, upper=upper_est.value,
                seed=upper_est.seed))
        if "iq" in quantities:
            sub = _derived_seed(seed, idx + 500_000)
            try:
                exact = iq_exact(x)
            except CapabilityError:
                exact = None
            if exact is not None:
                est = exact_estimate(exact, seed=sub)
            else:
                est = iq(x, samples=samples, seed=sub, workers=workers)
            records.append(SweepRecord(
                descriptor=x.descriptor, n=n, quantity="iq",
                value=est.value, stderr=est.stderr, seed=sub))
        idx += 1
    return records


def loglog_slope(dims, values):
    """Least-squares slope of log(value) against log(dim)."""
    x = np.log(np.asarray(dims, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def sweep_slopes(records):
    """Log-log slope per quantity across a sweep's dimensions."""
    by_quantity = {}
    for r in records:
        by_quantity.setdefault(r.quantity, []).append((r.n, r.value))
    return {q: loglog_slope([n for n, _ in rows], [v for _, v in rows])
            for q, rows in by_quantity.items() if len(rows) >= 2}
